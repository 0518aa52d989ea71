"""
Cost model, overall sparsity and speedup ratio.

Only multiplications are counted. A linear layer costs dense_mults when every
input element is non-zero; a zero-skipping engine pays density x dense_mults.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.core.exceptions import UsageError, ZeroWorkloadError
from app.models.tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerWorkload:
    layer_index: int
    kind: str
    dense_mults: int
    density: float
    zero_fraction: float

    def __post_init__(self):
        if self.dense_mults <= 0:
            raise UsageError(f"dense_mults must be > 0, got {self.dense_mults} for layer {self.layer_index}")
        for name in ("density", "zero_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise UsageError(f"{name} must be in [0, 1], got {value} for layer {self.layer_index}")


def layer_cost(w: LayerWorkload) -> float:
    return w.density * w.dense_mults


def network_cost(layers: Sequence[LayerWorkload]) -> float:
    return math.fsum(layer_cost(w) for w in layers)


def overall_sparsity(layers: Sequence[LayerWorkload]) -> float:
    """Workload-weighted zero fraction of the linear-layer inputs"""
    if not layers:
        raise UsageError("overall sparsity of an empty layer list")
    total = math.fsum(w.dense_mults for w in layers)
    return math.fsum(w.zero_fraction * w.dense_mults for w in layers) / total


def delta_sparsity(layers: Sequence[LayerWorkload]) -> float:
    """Overall sparsity measured on what the kernels were fed (1 - density)"""
    return overall_sparsity([replace(w, zero_fraction=1.0 - w.density) for w in layers])


def _check_same_structure(dense: Sequence[LayerWorkload], rrm: Sequence[LayerWorkload]):
    if len(dense) != len(rrm):
        raise UsageError(f"speedup ratio needs matching layer lists, got {len(dense)} and {len(rrm)} rows")
    for a, b in zip(dense, rrm):
        if a.layer_index != b.layer_index or a.dense_mults != b.dense_mults:
            raise UsageError(f"layer rows differ: {a.layer_index}/{a.dense_mults} vs {b.layer_index}/{b.dense_mults}")


def speedup_ratio(
    dense: Sequence[LayerWorkload], rrm: Sequence[LayerWorkload], wasted_mults: float = 0.0
) -> float:
    """
    eta: zero-skipping cost of the original activations over that of the deltas.

    wasted_mults is delta work discarded by forced keyframes and is charged to
    the RRM side.
    """
    _check_same_structure(dense, rrm)
    denominator = network_cost(rrm) + wasted_mults
    if denominator == 0:
        raise ZeroWorkloadError("delta workload is zero; speedup ratio is unbounded")
    return network_cost(dense) / denominator


def speedup_vs_dense_baseline(rrm: Sequence[LayerWorkload], wasted_mults: float = 0.0) -> float:
    """Alternative reading with a baseline that does not skip zeros (rho = 1)"""
    denominator = network_cost(rrm) + wasted_mults
    if denominator == 0:
        raise ZeroWorkloadError("delta workload is zero; speedup ratio is unbounded")
    return math.fsum(w.dense_mults for w in rrm) / denominator


def l2_distance(a: Tensor, b: Tensor) -> float:
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    return float(np.sqrt(np.sum(diff * diff)))


def max_abs_distance(a: Tensor, b: Tensor) -> float:
    return float(np.max(np.abs(a.data.astype(np.float64) - b.data.astype(np.float64)), initial=0.0))


@dataclass
class SequenceSummary:
    overall_sparsity_dense: float
    overall_sparsity_rrm: float
    speedup_ratio: Optional[float]
    speedup_infinite: bool
    speedup_vs_dense_baseline: Optional[float]
    dense_cost: float
    rrm_cost: float


@dataclass
class SequenceStats:
    """
    Per-frame, per-layer workloads of a dense run and an RRM run of the same
    video, plus the keyframe schedule and the accumulated-error trace.
    """

    dense: List[List[LayerWorkload]] = field(default_factory=list)
    rrm: List[List[LayerWorkload]] = field(default_factory=list)
    frame_indices: List[int] = field(default_factory=list)
    keyframes: List[int] = field(default_factory=list)
    forced_keyframes: List[int] = field(default_factory=list)
    accumulated_error: List[float] = field(default_factory=list)
    wasted: Dict[int, int] = field(default_factory=dict)  # forced keyframe index -> discarded delta mults
    feature_error_l2: Optional[List[float]] = None
    feature_error_max: Optional[List[float]] = None

    @property
    def frame_count(self) -> int:
        return len(self.rrm)

    @classmethod
    def merge(cls, parts: Sequence["SequenceStats"]) -> "SequenceStats":
        merged = cls()
        with_oracle = all(p.feature_error_l2 is not None for p in parts) and bool(parts)
        if with_oracle:
            merged.feature_error_l2 = []
            merged.feature_error_max = []
        for part in parts:
            merged.dense.extend(part.dense)
            merged.rrm.extend(part.rrm)
            merged.frame_indices.extend(part.frame_indices)
            merged.keyframes.extend(part.keyframes)
            merged.forced_keyframes.extend(part.forced_keyframes)
            merged.accumulated_error.extend(part.accumulated_error)
            merged.wasted.update(part.wasted)
            if with_oracle:
                merged.feature_error_l2.extend(part.feature_error_l2)
                merged.feature_error_max.extend(part.feature_error_max)
        return merged

    def rows(self, include_keyframes: bool = True) -> Dict[str, List[LayerWorkload]]:
        if len(self.dense) != len(self.rrm):
            raise UsageError(f"dense and RRM runs cover {len(self.dense)} and {len(self.rrm)} frames")
        keyframes = set(self.keyframes)
        dense_rows: List[LayerWorkload] = []
        rrm_rows: List[LayerWorkload] = []
        for index, dense, rrm in zip(self.frame_indices, self.dense, self.rrm):
            if not include_keyframes and index in keyframes:
                continue
            dense_rows.extend(dense)
            rrm_rows.extend(rrm)
        return {"dense": dense_rows, "rrm": rrm_rows}

    def wasted_multiplications(self, include_keyframes: bool = True) -> int:
        # forced keyframes are keyframes, so excluding keyframes drops their waste too
        return sum(self.wasted.values()) if include_keyframes else 0

    def summary(self, include_keyframes: bool = True) -> SequenceSummary:
        rows = self.rows(include_keyframes)
        dense_rows, rrm_rows = rows["dense"], rows["rrm"]
        if not rrm_rows:
            raise UsageError("no frames left to summarize")
        wasted = self.wasted_multiplications(include_keyframes)
        try:
            eta = speedup_ratio(dense_rows, rrm_rows, wasted)
            eta_dense = speedup_vs_dense_baseline(rrm_rows, wasted)
        except ZeroWorkloadError:
            logger.info("Delta workload is zero; reporting an unbounded speedup")
            eta = eta_dense = None
        return SequenceSummary(
            overall_sparsity_dense=overall_sparsity(dense_rows),
            overall_sparsity_rrm=delta_sparsity(rrm_rows),
            speedup_ratio=eta,
            speedup_infinite=eta is None,
            speedup_vs_dense_baseline=eta_dense,
            dense_cost=network_cost(dense_rows),
            rrm_cost=network_cost(rrm_rows) + wasted,
        )
