"""HTTP surface for runs and sweeps"""
