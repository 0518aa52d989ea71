"""
Runtime services: kernels, the recurrent residual engine, error control,
cost model, file I/O, synthetic inputs, reports and run orchestration
"""
