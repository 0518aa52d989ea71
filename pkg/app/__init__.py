"""
Residual Frame Runtime - recurrent residual CNN inference for video
"""

__version__ = "0.1.0"
