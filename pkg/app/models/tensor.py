"""
Dense and sparse tensor containers.

A Tensor is a read-only float32 array of shape (channels, height, width);
vectors are stored as (n, 1, 1). A SparseDelta keeps only the non-zero
elements of a difference tensor as a sorted coordinate list over the
row-major linear index.
"""
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from app.core.exceptions import ShapeMismatchError, UsageError

DTYPE = np.float32

Shape = Tuple[int, int, int]


def frozen_array(array: np.ndarray, dtype) -> np.ndarray:
    if array.dtype == dtype and array.flags.c_contiguous and not array.flags.writeable:
        return array
    out = np.array(array, dtype=dtype, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Tensor:
    """Dense 3-D activation container (C, H, W)"""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1, 1)
        if arr.ndim != 3:
            raise ShapeMismatchError("tensor rank", (3,), (arr.ndim,))
        object.__setattr__(self, "data", frozen_array(arr, DTYPE))

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "Tensor":
        return cls(np.zeros(tuple(shape), dtype=DTYPE))

    @property
    def shape(self) -> Shape:
        return tuple(int(s) for s in self.data.shape)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def count_nonzero(self) -> int:
        return int(np.count_nonzero(self.data))

    def density(self) -> float:
        return self.count_nonzero() / self.size if self.size else 0.0

    def zero_fraction(self) -> float:
        return 1.0 - self.density() if self.size else 0.0

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())


@dataclass(frozen=True, eq=False)
class SparseDelta:
    """Coordinate list of the non-zero elements of a (truncated) delta"""

    shape: Shape
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) != 3 or min(shape) < 0:
            raise ShapeMismatchError("sparse delta shape", (3,), shape)
        indices = frozen_array(np.asarray(self.indices).reshape(-1), np.int64)
        values = frozen_array(np.asarray(self.values).reshape(-1), DTYPE)
        if indices.shape != values.shape:
            raise ShapeMismatchError("sparse delta entries", indices.shape, values.shape)
        size = shape[0] * shape[1] * shape[2]
        if indices.size:
            if indices[0] < 0 or indices[-1] >= size:
                raise UsageError(f"sparse delta index out of range for shape {shape}")
            if np.any(np.diff(indices) <= 0):
                raise UsageError("sparse delta indices must be strictly increasing")
            if np.any(values == 0):
                raise UsageError("sparse delta stores only non-zero values")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_entries(cls, shape: Sequence[int], entries: Iterable[Tuple[int, float]]) -> "SparseDelta":
        pairs = sorted(entries)
        indices = np.array([i for i, _ in pairs], dtype=np.int64)
        values = np.array([v for _, v in pairs], dtype=DTYPE)
        return cls(tuple(shape), indices, values)

    @property
    def size(self) -> int:
        c, h, w = self.shape
        return c * h * w

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    @property
    def entries(self) -> List[Tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def density(self) -> float:
        return self.nnz / self.size if self.size else 0.0

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(channel, row, column) arrays of the stored entries"""
        return np.unravel_index(self.indices, self.shape)


def subtract(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise a - b"""
    if a.shape != b.shape:
        raise ShapeMismatchError("subtract", a.shape, b.shape)
    return Tensor(a.data - b.data)


def sparsify(d: Tensor, epsilon: float) -> Tuple[SparseDelta, float]:
    """
    Keep the elements with |value| > epsilon.

    Returns:
        The sparse delta and the l2 norm of the truncated non-zero elements
    """
    if not epsilon >= 0:
        raise UsageError(f"epsilon must be >= 0, got {epsilon}")
    flat = d.flat()
    magnitude = np.abs(flat)
    keep = magnitude > epsilon
    indices = np.flatnonzero(keep)
    truncated = flat[~keep & (flat != 0)].astype(np.float64)
    truncated_l2 = float(np.sqrt(np.dot(truncated, truncated))) if truncated.size else 0.0
    return SparseDelta(d.shape, indices, flat[indices]), truncated_l2


def densify(s: SparseDelta) -> Tensor:
    out = np.zeros(s.size, dtype=DTYPE)
    out[s.indices] = s.values
    return Tensor(out.reshape(s.shape))
