"""
Layer specifications and the NetworkModel that chains them.

Conv and Fc are the linear layers; Relu and MaxPool are the nonlinear
mapping applied to full projections. Batch normalization is expected to be
folded into conv weights before a model is built.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import LayerChainError, ShapeMismatchError, UsageError
from app.models.tensor import DTYPE, Shape, frozen_array


def _window_out(size: int, kernel: int, stride: int, padding: int = 0) -> int:
    return (size + 2 * padding - kernel) // stride + 1


@dataclass(frozen=True, eq=False)
class ConvSpec:
    """Convolution layer: weights (C_out, C_in, h_F, w_F), bias (C_out,)"""

    weights: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int = 0
    kind: str = field(default="conv", init=False)

    def __post_init__(self):
        weights = frozen_array(np.asarray(self.weights), DTYPE)
        bias = frozen_array(np.asarray(self.bias).reshape(-1), DTYPE)
        if weights.ndim != 4:
            raise ShapeMismatchError("conv weights rank", (4,), weights.shape)
        if min(weights.shape) < 1:
            raise UsageError(f"conv channels and kernel sizes must be >= 1, got weights {weights.shape}")
        if bias.shape != (weights.shape[0],):
            raise ShapeMismatchError("conv bias", (weights.shape[0],), bias.shape)
        if self.stride < 1 or self.padding < 0:
            raise UsageError(f"conv stride must be >= 1 and padding >= 0, got {self.stride}/{self.padding}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def out_channels(self) -> int:
        return int(self.weights.shape[0])

    @property
    def in_channels(self) -> int:
        return int(self.weights.shape[1])

    @property
    def kernel(self) -> Tuple[int, int]:
        return int(self.weights.shape[2]), int(self.weights.shape[3])

    def output_shape(self, input_shape: Sequence[int]) -> Shape:
        c, h, w = input_shape
        if c != self.in_channels:
            raise ShapeMismatchError("conv input channels", (self.in_channels, h, w), tuple(input_shape))
        kh, kw = self.kernel
        oh = _window_out(h, kh, self.stride, self.padding)
        ow = _window_out(w, kw, self.stride, self.padding)
        if oh < 1 or ow < 1:
            raise ShapeMismatchError("conv output is empty for input", (c, kh, kw), tuple(input_shape))
        return self.out_channels, oh, ow


@dataclass(frozen=True, eq=False)
class FcSpec:
    """Fully-connected layer: weights (C_out, C_in), bias (C_out,)"""

    weights: np.ndarray
    bias: np.ndarray
    kind: str = field(default="fc", init=False)

    def __post_init__(self):
        weights = frozen_array(np.asarray(self.weights), DTYPE)
        bias = frozen_array(np.asarray(self.bias).reshape(-1), DTYPE)
        if weights.ndim != 2:
            raise ShapeMismatchError("fc weights rank", (2,), weights.shape)
        if min(weights.shape) < 1:
            raise UsageError(f"fc feature counts must be >= 1, got weights {weights.shape}")
        if bias.shape != (weights.shape[0],):
            raise ShapeMismatchError("fc bias", (weights.shape[0],), bias.shape)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def out_features(self) -> int:
        return int(self.weights.shape[0])

    @property
    def in_features(self) -> int:
        return int(self.weights.shape[1])

    def output_shape(self, input_shape: Sequence[int]) -> Shape:
        c, h, w = input_shape
        if c * h * w != self.in_features:
            raise ShapeMismatchError("fc input length", (self.in_features,), (c * h * w,))
        return self.out_features, 1, 1


@dataclass(frozen=True)
class Relu:
    kind: str = field(default="relu", init=False)

    def output_shape(self, input_shape: Sequence[int]) -> Shape:
        return tuple(input_shape)


@dataclass(frozen=True)
class MaxPool:
    kernel: int = 2
    stride: int = 2
    kind: str = field(default="maxpool", init=False)

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1:
            raise UsageError(f"maxpool kernel and stride must be >= 1, got {self.kernel}/{self.stride}")

    def output_shape(self, input_shape: Sequence[int]) -> Shape:
        c, h, w = input_shape
        oh = _window_out(h, self.kernel, self.stride)
        ow = _window_out(w, self.kernel, self.stride)
        if oh < 1 or ow < 1:
            raise ShapeMismatchError(
                "maxpool window larger than input", (c, self.kernel, self.kernel), tuple(input_shape)
            )
        return c, oh, ow


LayerSpec = Union[ConvSpec, FcSpec, Relu, MaxPool]
LINEAR_LAYERS = (ConvSpec, FcSpec)


def is_linear(layer: LayerSpec) -> bool:
    return isinstance(layer, LINEAR_LAYERS)


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Ordered, shape-checked list of layers for a declared input shape"""

    input_shape: Shape
    layers: Tuple[LayerSpec, ...]
    shapes: Tuple[Shape, ...] = field(init=False)

    def __post_init__(self):
        if not self.layers:
            raise LayerChainError("model has no layers")
        input_shape = tuple(int(s) for s in self.input_shape)
        if len(input_shape) != 3 or min(input_shape) < 1:
            raise LayerChainError(f"declared input shape must be three positive integers, got {input_shape}")
        shapes: List[Shape] = [input_shape]
        for index, layer in enumerate(self.layers):
            try:
                shapes.append(layer.output_shape(shapes[-1]))
            except ShapeMismatchError as e:
                raise LayerChainError(f"layer {index} ({layer.kind}) does not accept {shapes[-1]}: {e}") from e
        object.__setattr__(self, "input_shape", input_shape)
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "shapes", tuple(shapes))

    @property
    def output_shape(self) -> Shape:
        return self.shapes[-1]

    def input_shape_of(self, index: int) -> Shape:
        return self.shapes[index]

    def linear_indices(self) -> List[int]:
        return [i for i, layer in enumerate(self.layers) if is_linear(layer)]

    def describe(self) -> List[str]:
        parts = []
        for layer in self.layers:
            if isinstance(layer, ConvSpec):
                kh, kw = layer.kernel
                parts.append(f"conv:{layer.out_channels}:{kh}x{kw}:s{layer.stride}:p{layer.padding}")
            elif isinstance(layer, FcSpec):
                parts.append(f"fc:{layer.out_features}")
            elif isinstance(layer, MaxPool):
                parts.append(f"pool:{layer.kernel}:{layer.stride}")
            else:
                parts.append(layer.kind)
        return parts
