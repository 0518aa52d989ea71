"""
Layer kernels.

Dense kernels compute the full projection (pre-activation, bias included).
Sparse kernels take a SparseDelta, visit only its stored entries and return
the bias-free increment together with the number of multiplications they
performed under the zero-skipping cost model: every non-zero input element
pays its share of the layer's dense cost (C_out x taps for stride-1
same-padded convs).
"""
import logging
from typing import NamedTuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from app.core.exceptions import ShapeMismatchError, UsageError
from app.models.network import ConvSpec, FcSpec, LayerSpec, MaxPool, Relu
from app.models.tensor import DTYPE, Shape, SparseDelta, Tensor

logger = logging.getLogger(__name__)


class KernelResult(NamedTuple):
    output: Tensor
    multiplications: int


def dense_conv(spec: ConvSpec, input: Tensor) -> Tensor:
    """Cross-correlation with zero padding plus bias (no kernel flip)"""
    co, oh, ow = spec.output_shape(input.shape)
    kh, kw = spec.kernel
    s, p = spec.stride, spec.padding
    x = input.data
    if p:
        x = np.pad(x, ((0, 0), (p, p), (p, p)))
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::s, ::s][:, :oh, :ow]
    out = np.einsum("oikl,ihwkl->ohw", spec.weights, windows, optimize=True)
    return Tensor(out + spec.bias[:, None, None])


def dense_fc(spec: FcSpec, input: Tensor) -> Tensor:
    co, _, _ = spec.output_shape(input.shape)
    out = spec.weights @ input.flat() + spec.bias
    return Tensor(out.reshape(co, 1, 1))


def conv_multiplications(spec: ConvSpec, input_shape: Shape, nnz: int) -> int:
    """
    Multiplications charged for nnz stored input elements.

    Each element pays its share of the dense cost, C_out x oh*ow*kh*kw / (H*W),
    rounded half up over the whole layer. Stride-1 same-padded convs give the
    exact C_out x kh x kw per element; a fully dense input always costs
    dense_multiplications.
    """
    if nnz == 0:
        return 0
    elements = input_shape[0] * input_shape[1] * input_shape[2]
    numerator = nnz * dense_multiplications(spec, input_shape)
    return (2 * numerator + elements) // (2 * elements)


def sparse_conv(spec: ConvSpec, delta: SparseDelta) -> KernelResult:
    """F * delta, bias excluded; scatter writes are clipped at the borders"""
    co, oh, ow = spec.output_shape(delta.shape)
    acc = np.zeros((oh * ow, co), dtype=DTYPE)
    if delta.nnz == 0:
        return KernelResult(Tensor(acc.T.reshape(co, oh, ow)), 0)

    kh, kw = spec.kernel
    s, p = spec.stride, spec.padding
    channels, rows, cols = delta.coordinates()
    values = delta.values
    padded_rows = rows + p
    padded_cols = cols + p

    for ky in range(kh):
        ty = padded_rows - ky
        oy = ty // s
        row_ok = (ty % s == 0) & (ty >= 0) & (oy < oh)
        for kx in range(kw):
            tx = padded_cols - kx
            ox = tx // s
            ok = row_ok & (tx % s == 0) & (tx >= 0) & (ox < ow)
            if not ok.any():
                continue
            target = oy[ok] * ow + ox[ok]
            contrib = values[ok][:, None] * spec.weights[:, channels[ok], ky, kx].T
            np.add.at(acc, target, contrib)

    output = Tensor(acc.T.reshape(co, oh, ow))
    return KernelResult(output, conv_multiplications(spec, delta.shape, delta.nnz))


def sparse_fc(spec: FcSpec, delta: SparseDelta) -> KernelResult:
    """W delta, bias excluded: one weight column per stored entry"""
    co, _, _ = spec.output_shape(delta.shape)
    if delta.nnz == 0:
        return KernelResult(Tensor.zeros((co, 1, 1)), 0)
    out = spec.weights[:, delta.indices] @ delta.values
    return KernelResult(Tensor(out.reshape(co, 1, 1)), delta.nnz * co)


def apply_nonlinear(layer: Union[Relu, MaxPool], input: Tensor) -> Tensor:
    if isinstance(layer, Relu):
        return Tensor(np.maximum(input.data, 0))
    if isinstance(layer, MaxPool):
        c, oh, ow = layer.output_shape(input.shape)
        k, s = layer.kernel, layer.stride
        windows = sliding_window_view(input.data, (k, k), axis=(1, 2))[:, ::s, ::s][:, :oh, :ow]
        return Tensor(windows.max(axis=(-2, -1)))
    raise UsageError(f"not a nonlinear layer: {layer!r}")


def dense_linear(layer: LayerSpec, input: Tensor) -> Tensor:
    if isinstance(layer, ConvSpec):
        return dense_conv(layer, input)
    if isinstance(layer, FcSpec):
        return dense_fc(layer, input)
    raise UsageError(f"not a linear layer: {layer!r}")


def sparse_linear(layer: LayerSpec, delta: SparseDelta) -> KernelResult:
    if isinstance(layer, ConvSpec):
        return sparse_conv(layer, delta)
    if isinstance(layer, FcSpec):
        return sparse_fc(layer, delta)
    raise UsageError(f"not a linear layer: {layer!r}")


def dense_multiplications(layer: LayerSpec, input_shape: Shape) -> int:
    """Dense cost of a linear layer, evaluated on its output dims"""
    if isinstance(layer, ConvSpec):
        _, oh, ow = layer.output_shape(input_shape)
        kh, kw = layer.kernel
        return oh * ow * layer.in_channels * layer.out_channels * kh * kw
    if isinstance(layer, FcSpec):
        layer.output_shape(input_shape)
        return layer.in_features * layer.out_features
    raise UsageError(f"not a linear layer: {layer!r}")


def zero_skipping_multiplications(layer: LayerSpec, input: Tensor) -> int:
    """Multiplications a zero-skipping engine spends on a dense input"""
    if isinstance(layer, ConvSpec):
        if input.shape[0] != layer.in_channels:
            raise ShapeMismatchError("conv input channels", (layer.in_channels,), input.shape[:1])
        return conv_multiplications(layer, input.shape, input.count_nonzero())
    if isinstance(layer, FcSpec):
        return input.count_nonzero() * layer.out_features
    raise UsageError(f"not a linear layer: {layer!r}")
