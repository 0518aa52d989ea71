"""Runtime test suite"""
