"""
In-memory domain types
"""
from app.models.tensor import SparseDelta, Tensor, densify, sparsify, subtract
from app.models.network import ConvSpec, FcSpec, LayerSpec, MaxPool, NetworkModel, Relu
from app.models.error_model import Decision, ErrorAccumulator, ErrorModel

__all__ = [
    "Tensor",
    "SparseDelta",
    "subtract",
    "sparsify",
    "densify",
    "ConvSpec",
    "FcSpec",
    "Relu",
    "MaxPool",
    "LayerSpec",
    "NetworkModel",
    "Decision",
    "ErrorAccumulator",
    "ErrorModel",
]
