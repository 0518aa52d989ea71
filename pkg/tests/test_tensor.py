"""
Tests for dense and sparse tensor containers
"""
import math

import numpy as np
import pytest

from app.core.exceptions import ShapeMismatchError, UsageError
from app.models.tensor import SparseDelta, Tensor, densify, sparsify, subtract


def test_tensor_is_read_only_float32():
    """Test tensors copy, freeze and cast their data"""
    source = np.arange(12, dtype=np.float64).reshape(3, 2, 2)
    t = Tensor(source)
    source[0, 0, 0] = 99
    assert t.data.dtype == np.float32
    assert t.data[0, 0, 0] == 0
    with pytest.raises(ValueError):
        t.data[0, 0, 0] = 1


def test_vector_becomes_column_tensor():
    """Test 1-D data is stored as (n, 1, 1)"""
    assert Tensor(np.ones(7)).shape == (7, 1, 1)


def test_rank_two_rejected():
    """Test a 2-D array is not a tensor"""
    with pytest.raises(ShapeMismatchError):
        Tensor(np.ones((3, 3)))


def test_density_and_zero_fraction():
    """Test density counts non-zeros"""
    t = Tensor(np.array([0, 1, 0, 2], dtype=np.float32))
    assert t.density() == 0.5
    assert t.zero_fraction() == 0.5


def test_subtract_shape_mismatch():
    """Test subtract refuses different shapes"""
    with pytest.raises(ShapeMismatchError):
        subtract(Tensor.zeros((1, 2, 2)), Tensor.zeros((1, 2, 3)))


def test_sparsify_keeps_strictly_greater():
    """Test |v| == epsilon is truncated and its mass reported"""
    d = Tensor(np.array([0.0, 0.5, -0.25, 0.25, 0.375], dtype=np.float32))
    s, truncated = sparsify(d, 0.25)
    assert s.entries == [(1, 0.5), (4, 0.375)]
    assert truncated == pytest.approx(np.sqrt(2) * 0.25, rel=1e-6)


def test_sparsify_zero_epsilon_keeps_every_non_zero():
    """Test epsilon 0 drops only exact zeros"""
    d = Tensor(np.array([0.0, 1e-9, -2.0], dtype=np.float32))
    s, truncated = sparsify(d, 0.0)
    assert s.nnz == 2
    assert truncated == 0.0


@pytest.mark.parametrize("epsilon", [-1e-3, math.nan])
def test_sparsify_rejects_bad_epsilon(epsilon):
    """Test a negative or NaN threshold is a usage error"""
    with pytest.raises(UsageError):
        sparsify(Tensor.zeros((1, 1, 1)), epsilon)


@pytest.mark.parametrize("epsilon", [0.0, 0.05, 0.5, 2.0])
def test_densify_differs_only_at_truncated_positions(rng, epsilon):
    """Test reconstruction error lives below epsilon and matches the reported norm"""
    d = Tensor(rng.standard_normal((3, 6, 5)) * 0.5)
    s, truncated = sparsify(d, epsilon)
    diff = d.data - densify(s).data
    changed = diff != 0
    assert np.all(np.abs(d.data[changed]) <= epsilon)
    expected = float(np.sum(d.data.astype(np.float64)[changed] ** 2))
    assert truncated ** 2 == pytest.approx(expected, rel=1e-6, abs=1e-12)


def test_self_difference_is_empty(rng):
    """Test a - a sparsifies to nothing"""
    a = Tensor(rng.standard_normal((2, 4, 4)))
    s, _ = sparsify(subtract(a, a), 0.0)
    assert s.nnz == 0
    assert s.density() == 0.0


def test_sparse_delta_validation():
    """Test index ordering, range and explicit zeros are rejected"""
    with pytest.raises(UsageError):
        SparseDelta((1, 2, 2), np.array([2, 1]), np.array([1.0, 1.0]))
    with pytest.raises(UsageError):
        SparseDelta((1, 2, 2), np.array([4]), np.array([1.0]))
    with pytest.raises(UsageError):
        SparseDelta((1, 2, 2), np.array([0]), np.array([0.0]))


def test_sparse_delta_coordinates():
    """Test linear indices unravel row-major"""
    s = SparseDelta.from_entries((2, 3, 4), [(13, 1.0), (0, 2.0)])
    channels, rows, cols = s.coordinates()
    assert list(channels) == [0, 1]
    assert list(rows) == [0, 0]
    assert list(cols) == [0, 1]
