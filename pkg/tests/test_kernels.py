"""
Tests for the dense and sparse layer kernels
"""
import numpy as np
import pytest

from app.core.exceptions import ShapeMismatchError
from app.models.network import ConvSpec, FcSpec, MaxPool, Relu
from app.models.tensor import SparseDelta, Tensor, densify, sparsify
from app.services import kernels
from tests.conftest import random_tensor


def naive_conv(spec: ConvSpec, x: np.ndarray) -> np.ndarray:
    co, oh, ow = spec.output_shape(x.shape)
    kh, kw = spec.kernel
    s, p = spec.stride, spec.padding
    ci, h, w = x.shape
    out = np.zeros((co, oh, ow), dtype=np.float64)
    for o in range(co):
        for y in range(oh):
            for z in range(ow):
                acc = float(spec.bias[o])
                for i in range(ci):
                    for ky in range(kh):
                        for kx in range(kw):
                            r, c = y * s - p + ky, z * s - p + kx
                            if 0 <= r < h and 0 <= c < w:
                                acc += float(spec.weights[o, i, ky, kx]) * float(x[i, r, c])
                out[o, y, z] = acc
    return out


def random_conv(rng, ci, co, k, stride=1, padding=0, scale=0.5):
    return ConvSpec(rng.standard_normal((co, ci, k, k)) * scale, rng.uniform(-0.5, 0.5, co), stride, padding)


def random_fc(rng, n_in, n_out, scale=0.5):
    return FcSpec(rng.standard_normal((n_out, n_in)) * scale, rng.uniform(-0.5, 0.5, n_out))


@pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (1, 0), (3, 2)])
def test_dense_conv_matches_loop_oracle(rng, stride, padding):
    """Test dense_conv against a six-loop cross-correlation"""
    spec = random_conv(rng, 3, 4, 3, stride, padding)
    x = random_tensor(rng, (3, 8, 8))
    out = kernels.dense_conv(spec, x)
    np.testing.assert_allclose(out.data, naive_conv(spec, x.data), atol=1e-5)


def test_dense_conv_channel_mismatch(rng):
    """Test a conv refuses the wrong number of input channels"""
    with pytest.raises(ShapeMismatchError):
        kernels.dense_conv(random_conv(rng, 3, 4, 3), random_tensor(rng, (2, 8, 8)))


def test_dense_fc_matches_dot_products(rng):
    """Test dense_fc against explicit dot products"""
    spec = random_fc(rng, 64, 16)
    x = random_tensor(rng, (4, 4, 4))
    expected = [float(np.dot(spec.weights[o].astype(np.float64), x.flat())) + float(spec.bias[o]) for o in range(16)]
    np.testing.assert_allclose(kernels.dense_fc(spec, x).flat(), expected, atol=1e-5)


def test_conv_linearity_randomized(rng):
    """Test W(a+b) + bias == (Wa + bias) + (Wb + bias) over many random layers"""
    for _ in range(1000):
        ci, co = rng.integers(1, 4, size=2)
        k = int(rng.choice([1, 3]))
        spec = random_conv(rng, int(ci), int(co), k, int(rng.integers(1, 3)), int(rng.integers(0, 2)))
        a = random_tensor(rng, (int(ci), 6, 6))
        b = random_tensor(rng, (int(ci), 6, 6))
        lhs = kernels.dense_conv(spec, Tensor(a.data + b.data)).data + spec.bias[:, None, None]
        rhs = kernels.dense_conv(spec, a).data + kernels.dense_conv(spec, b).data
        assert np.max(np.abs(lhs - rhs)) <= 1e-4


def test_fc_linearity_randomized(rng):
    """Test FC additivity over many random layers"""
    for _ in range(1000):
        n_in, n_out = (int(v) for v in rng.integers(1, 24, size=2))
        spec = random_fc(rng, n_in, n_out)
        a = random_tensor(rng, (n_in, 1, 1))
        b = random_tensor(rng, (n_in, 1, 1))
        lhs = kernels.dense_fc(spec, Tensor(a.data + b.data)).data + spec.bias[:, None, None]
        rhs = kernels.dense_fc(spec, a).data + kernels.dense_fc(spec, b).data
        assert np.max(np.abs(lhs - rhs)) <= 1e-4


def test_sparse_conv_matches_dense_randomized(rng):
    """Test the scatter kernel reproduces the dense kernel without bias"""
    for _ in range(1000):
        ci, co = (int(v) for v in rng.integers(1, 4, size=2))
        k = int(rng.choice([1, 2, 3]))
        spec = random_conv(rng, ci, co, k, int(rng.integers(1, 3)), int(rng.integers(0, 2)))
        delta, _ = sparsify(random_tensor(rng, (ci, 6, 7), density=float(rng.uniform(0.0, 0.5))), 0.0)
        expected = kernels.dense_conv(spec, densify(delta)).data - spec.bias[:, None, None]
        actual = kernels.sparse_conv(spec, delta).output.data
        assert np.max(np.abs(actual - expected), initial=0.0) <= 1e-5


def test_sparse_fc_matches_dense_randomized(rng):
    """Test the column-gather kernel reproduces the dense FC without bias"""
    for _ in range(1000):
        n_in, n_out = (int(v) for v in rng.integers(1, 40, size=2))
        spec = random_fc(rng, n_in, n_out)
        delta, _ = sparsify(random_tensor(rng, (n_in, 1, 1), density=0.2), 0.0)
        result = kernels.sparse_fc(spec, delta)
        expected = kernels.dense_fc(spec, densify(delta)).data - spec.bias[:, None, None]
        assert np.max(np.abs(result.output.data - expected)) <= 1e-5
        assert result.multiplications == delta.nnz * n_out


def test_sparse_conv_ten_percent_delta(rng):
    """Test a 10%-dense delta on a 3x8x8 input"""
    spec = random_conv(rng, 3, 4, 3, 1, 1)
    delta, _ = sparsify(random_tensor(rng, (3, 8, 8), density=0.1), 0.0)
    expected = kernels.dense_conv(spec, densify(delta)).data - spec.bias[:, None, None]
    np.testing.assert_allclose(kernels.sparse_conv(spec, delta).output.data, expected, atol=1e-5)


def test_empty_delta_costs_nothing(rng):
    """Test a delta with no entries yields zeros and zero multiplications"""
    spec = random_conv(rng, 2, 3, 3, 1, 1)
    empty = SparseDelta((2, 5, 5), np.array([], dtype=np.int64), np.array([], dtype=np.float32))
    result = kernels.sparse_conv(spec, empty)
    assert result.multiplications == 0
    assert not result.output.data.any()
    assert result.output.shape == (3, 5, 5)


def test_sparse_conv_counter_quarter_density(rng):
    """Test 3->8 channels, 16x16, 3x3 at 25% density costs 13824 multiplications"""
    spec = random_conv(rng, 3, 8, 3, 1, 1)
    flat = np.zeros(3 * 16 * 16, dtype=np.float32)
    picked = rng.choice(flat.size, size=flat.size // 4, replace=False)
    flat[picked] = rng.uniform(0.5, 1.5, picked.size)
    delta, _ = sparsify(Tensor(flat.reshape(3, 16, 16)), 0.0)
    assert delta.density() == 0.25
    result = kernels.sparse_conv(spec, delta)
    assert result.multiplications == 13824
    assert kernels.dense_multiplications(spec, (3, 16, 16)) * 0.25 == 13824


def test_sparse_counter_is_density_times_dense(rng):
    """Test the counter equals rho x dense_mults for same-padded stride-1 convs and FCs"""
    for _ in range(200):
        ci, co = (int(v) for v in rng.integers(1, 5, size=2))
        k = int(rng.choice([1, 3, 5]))
        spec = random_conv(rng, ci, co, k, 1, k // 2)
        delta, _ = sparsify(random_tensor(rng, (ci, 7, 7), density=float(rng.uniform(0, 1))), 0.0)
        mults = kernels.sparse_conv(spec, delta).multiplications
        assert mults * delta.size == delta.nnz * kernels.dense_multiplications(spec, delta.shape)

        fc = random_fc(rng, ci * 49, co)
        assert kernels.sparse_fc(fc, delta).multiplications * delta.size == (
            delta.nnz * kernels.dense_multiplications(fc, delta.shape)
        )


def test_counter_tracks_density_for_any_stride_and_padding(rng):
    """Test strided and unpadded convs charge rho x dense_mults up to rounding"""
    for _ in range(200):
        ci, co = (int(v) for v in rng.integers(1, 5, size=2))
        k = int(rng.choice([1, 3, 5]))
        spec = random_conv(rng, ci, co, k, int(rng.integers(1, 4)), int(rng.integers(0, k // 2 + 1)))
        delta, _ = sparsify(random_tensor(rng, (ci, 7, 7), density=float(rng.uniform(0, 1))), 0.0)
        mults = kernels.sparse_conv(spec, delta).multiplications
        exact = delta.nnz * kernels.dense_multiplications(spec, delta.shape)
        assert abs(2 * mults * delta.size - 2 * exact) <= delta.size
        if exact % delta.size == 0:
            assert mults * delta.size == exact


@pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 0), (2, 1), (3, 2)])
def test_fully_dense_delta_costs_dense_formula(stride, padding):
    """Test a delta with every entry set costs exactly dense_mults"""
    spec = ConvSpec(np.ones((4, 2, 3, 3)), np.zeros(4), stride, padding)
    ones = Tensor(np.ones((2, 8, 8), dtype=np.float32))
    delta, _ = sparsify(ones, 0.0)
    dense = kernels.dense_multiplications(spec, ones.shape)
    assert kernels.sparse_conv(spec, delta).multiplications == dense
    assert kernels.zero_skipping_multiplications(spec, ones) == dense


def test_unpadded_conv_dense_delta():
    """Test a 3x3 valid conv on 2x8x8 costs 6*6*2*4*9"""
    spec = ConvSpec(np.ones((4, 2, 3, 3)), np.zeros(4))
    delta, _ = sparsify(Tensor(np.ones((2, 8, 8), dtype=np.float32)), 0.0)
    assert kernels.sparse_conv(spec, delta).multiplications == 2592


def test_zero_skipping_counts_non_zeros(rng):
    """Test the keyframe cost follows the input's non-zero count"""
    spec = random_fc(rng, 10, 4)
    x = Tensor(np.array([0, 1, 0, 2, 0, 0, 3, 0, 0, 0], dtype=np.float32))
    assert kernels.zero_skipping_multiplications(spec, x) == 12


def test_dense_multiplications():
    """Test the dense cost formulas"""
    conv = ConvSpec(np.zeros((8, 3, 3, 3)), np.zeros(8), padding=1)
    assert kernels.dense_multiplications(conv, (3, 16, 16)) == 16 * 16 * 3 * 8 * 9
    fc = FcSpec(np.zeros((10, 64)), np.zeros(10))
    assert kernels.dense_multiplications(fc, (4, 4, 4)) == 640


def test_relu_and_maxpool():
    """Test the nonlinear layers"""
    x = Tensor(np.array([[[1, -2, 3, 0], [-1, 5, -6, 2], [0, 0, -1, -1], [4, -4, 2, 8]]], dtype=np.float32))
    relu = kernels.apply_nonlinear(Relu(), x)
    assert relu.data.min() == 0
    pooled = kernels.apply_nonlinear(MaxPool(2, 2), x)
    np.testing.assert_array_equal(pooled.data, [[[5, 3], [4, 8]]])


def test_maxpool_window_too_large():
    """Test a pool larger than its input is a shape error"""
    with pytest.raises(ShapeMismatchError):
        kernels.apply_nonlinear(MaxPool(4, 4), Tensor.zeros((1, 3, 3)))
