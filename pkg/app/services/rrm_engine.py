"""
Recurrent residual inference engine.

Every linear layer keeps a snapshot of the input it saw on the previous
frame and of the projection it produced. A delta frame feeds each linear
layer only the (truncated) difference to that snapshot through the sparse
kernel and adds the result to the stored projection; nonlinear layers always
run on the full reconstructed tensor. A keyframe runs the dense pipeline and
re-establishes every snapshot.

One RRMState is strictly sequential. Chunked processing gives each chunk its
own state and leading keyframe.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import NumericError, ShapeMismatchError, UsageError
from app.models.error_model import Decision, ErrorAccumulator, ErrorModel
from app.models.network import NetworkModel, is_linear
from app.models.tensor import Tensor, sparsify, subtract
from app.services import kernels
from app.services.error_control import accumulate, predict_and_decide
from app.services.metrics import LayerWorkload, SequenceStats, l2_distance, max_abs_distance

logger = logging.getLogger(__name__)


class FrameMode(str, Enum):
    KEYFRAME = "keyframe"
    DELTA = "delta"


@dataclass(frozen=True)
class LayerSnapshot:
    prev_input: Tensor
    prev_projection: Tensor


@dataclass
class RRMState:
    """Snapshots keyed by linear layer index, plus frame counters"""

    snapshots: Dict[int, LayerSnapshot] = field(default_factory=dict)
    frame_index: int = 0
    since_keyframe: int = 0
    accumulator: ErrorAccumulator = field(default_factory=ErrorAccumulator)

    @property
    def initialized(self) -> bool:
        return bool(self.snapshots)


@dataclass(frozen=True)
class LayerFrameStats:
    layer_index: int
    kind: str
    delta_density: float  # rho-hat: density of what the kernel was fed
    input_zero_fraction: float  # s: zero fraction of the full layer input
    multiplications: int
    truncated_l2: float
    dense_multiplications: int
    subtractions: int
    additions: int
    snapshot_writes: int


@dataclass(frozen=True)
class FrameResult:
    frame_index: int
    features: Tensor
    per_layer: Tuple[LayerFrameStats, ...]
    mode: FrameMode
    forced: bool = False
    wasted_multiplications: int = 0
    accumulated_error: float = 0.0

    @property
    def multiplications(self) -> int:
        return sum(s.multiplications for s in self.per_layer)

    @property
    def truncated_l2s(self) -> List[float]:
        return [s.truncated_l2 for s in self.per_layer]


@dataclass(frozen=True)
class DenseTrace:
    features: Tensor
    inputs: Dict[int, Tensor]
    projections: Dict[int, Tensor]


@dataclass(frozen=True)
class SequenceConfig:
    epsilon: float = 0.0
    error_model: Optional[ErrorModel] = None
    keyframe_interval: Optional[int] = None
    oracle: bool = False

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise UsageError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.keyframe_interval is not None and self.keyframe_interval < 1:
            raise UsageError(f"keyframe interval must be >= 1, got {self.keyframe_interval}")


def _check_frame(model: NetworkModel, frame: Tensor):
    if frame.shape != model.input_shape:
        raise ShapeMismatchError("frame", model.input_shape, frame.shape)


def _check_finite(features: Tensor, frame_index: int):
    if not features.is_finite():
        raise NumericError(f"non-finite features at frame {frame_index}")


def dense_trace(model: NetworkModel, frame: Tensor) -> DenseTrace:
    """Plain layer-by-layer inference keeping every linear input and projection"""
    _check_frame(model, frame)
    current = frame
    inputs: Dict[int, Tensor] = {}
    projections: Dict[int, Tensor] = {}
    for index, layer in enumerate(model.layers):
        if is_linear(layer):
            inputs[index] = current
            current = kernels.dense_linear(layer, current)
            projections[index] = current
        else:
            current = kernels.apply_nonlinear(layer, current)
    return DenseTrace(current, inputs, projections)


def dense_forward(model: NetworkModel, frame: Tensor) -> Tensor:
    return dense_trace(model, frame).features


def dense_workloads(model: NetworkModel, trace: DenseTrace) -> List[LayerWorkload]:
    rows = []
    for index, current in trace.inputs.items():
        layer = model.layers[index]
        rows.append(LayerWorkload(
            layer_index=index,
            kind=layer.kind,
            dense_mults=kernels.dense_multiplications(layer, current.shape),
            density=current.density(),
            zero_fraction=current.zero_fraction(),
        ))
    return rows


def keyframe_forward(
    model: NetworkModel,
    frame: Tensor,
    state: RRMState,
    forced: bool = False,
    wasted_multiplications: int = 0,
) -> FrameResult:
    """Precise pass: dense pipeline, every snapshot re-established, e_t cleared"""
    trace = dense_trace(model, frame)
    _check_finite(trace.features, state.frame_index)

    stats = []
    snapshots = {}
    for index, current in trace.inputs.items():
        layer = model.layers[index]
        projection = trace.projections[index]
        mults = kernels.zero_skipping_multiplications(layer, current)
        snapshots[index] = LayerSnapshot(current, projection)
        stats.append(LayerFrameStats(
            layer_index=index,
            kind=layer.kind,
            delta_density=current.density(),
            input_zero_fraction=current.zero_fraction(),
            multiplications=mults,
            truncated_l2=0.0,
            dense_multiplications=kernels.dense_multiplications(layer, current.shape),
            subtractions=0,
            additions=mults + projection.size,
            snapshot_writes=current.size + projection.size,
        ))

    result = FrameResult(
        frame_index=state.frame_index,
        features=trace.features,
        per_layer=tuple(stats),
        mode=FrameMode.KEYFRAME,
        forced=forced,
        wasted_multiplications=wasted_multiplications,
        accumulated_error=0.0,
    )
    state.snapshots = snapshots
    state.frame_index += 1
    state.since_keyframe = 0
    state.accumulator = ErrorAccumulator()
    logger.debug(f"Keyframe {result.frame_index}: {result.multiplications} multiplications")
    return result


def delta_forward(model: NetworkModel, frame: Tensor, state: RRMState, epsilon: float) -> FrameResult:
    """Sparse pass over truncated input differences, reusing cached projections"""
    if not state.initialized:
        raise UsageError("engine state holds no snapshots; run keyframe_forward on a frame first")
    _check_frame(model, frame)

    current = frame
    stats = []
    snapshots = {}
    for index, layer in enumerate(model.layers):
        if not is_linear(layer):
            current = kernels.apply_nonlinear(layer, current)
            continue

        snapshot = state.snapshots.get(index)
        if snapshot is None:
            raise UsageError(f"no snapshot for linear layer {index}; state belongs to another model")
        if snapshot.prev_input.shape != current.shape:
            raise ShapeMismatchError(f"layer {index} input drifted from snapshot", snapshot.prev_input.shape, current.shape)

        delta, truncated_l2 = sparsify(subtract(current, snapshot.prev_input), epsilon)
        increment = kernels.sparse_linear(layer, delta)
        projection = Tensor(snapshot.prev_projection.data + increment.output.data)

        snapshots[index] = LayerSnapshot(current, projection)
        stats.append(LayerFrameStats(
            layer_index=index,
            kind=layer.kind,
            delta_density=delta.density(),
            input_zero_fraction=current.zero_fraction(),
            multiplications=increment.multiplications,
            truncated_l2=truncated_l2,
            dense_multiplications=kernels.dense_multiplications(layer, current.shape),
            subtractions=current.size,
            additions=increment.multiplications + projection.size,
            snapshot_writes=current.size + projection.size,
        ))
        current = projection

    _check_finite(current, state.frame_index)
    accumulator = accumulate(state.accumulator, (s.truncated_l2 for s in stats))

    result = FrameResult(
        frame_index=state.frame_index,
        features=current,
        per_layer=tuple(stats),
        mode=FrameMode.DELTA,
        accumulated_error=accumulator.e_t,
    )
    state.snapshots = snapshots
    state.frame_index += 1
    state.since_keyframe += 1
    state.accumulator = accumulator
    return result


def _workloads(result: FrameResult) -> List[LayerWorkload]:
    return [
        LayerWorkload(
            layer_index=s.layer_index,
            kind=s.kind,
            dense_mults=s.dense_multiplications,
            density=s.delta_density,
            zero_fraction=s.input_zero_fraction,
        )
        for s in result.per_layer
    ]


def _recorded_dense_workloads(result: FrameResult) -> List[LayerWorkload]:
    # without an oracle the dense baseline is read off the RRM layer inputs
    return [
        LayerWorkload(
            layer_index=s.layer_index,
            kind=s.kind,
            dense_mults=s.dense_multiplications,
            density=1.0 - s.input_zero_fraction,
            zero_fraction=s.input_zero_fraction,
        )
        for s in result.per_layer
    ]


def process_sequence(
    model: NetworkModel,
    frames: Iterable[Tensor],
    config: SequenceConfig,
    start_index: int = 0,
) -> Tuple[List[FrameResult], SequenceStats]:
    """
    Run a video through one engine state.

    The first frame is a keyframe. Later frames run as delta frames; when the
    error model predicts an error above its threshold the same frame is
    recomputed precisely and the discarded delta work is reported.
    """
    state = RRMState(frame_index=start_index)
    results: List[FrameResult] = []
    stats = SequenceStats()
    if config.oracle:
        stats.feature_error_l2 = []
        stats.feature_error_max = []

    for frame in frames:
        interval = config.keyframe_interval
        if not state.initialized or (interval is not None and state.since_keyframe + 1 >= interval):
            result = keyframe_forward(model, frame, state)
        else:
            frame_index = state.frame_index
            result = delta_forward(model, frame, state, config.epsilon)
            if config.error_model is not None:
                if predict_and_decide(config.error_model, state.accumulator) is Decision.FORCE_KEYFRAME:
                    logger.info(
                        f"Frame {frame_index}: e_t={state.accumulator.e_t:.4e} exceeds error budget, "
                        f"recomputing as keyframe"
                    )
                    state.frame_index = frame_index
                    result = keyframe_forward(
                        model, frame, state, forced=True, wasted_multiplications=result.multiplications
                    )

        results.append(result)
        stats.frame_indices.append(result.frame_index)
        stats.rrm.append(_workloads(result))
        stats.accumulated_error.append(result.accumulated_error)
        if result.mode is FrameMode.KEYFRAME:
            stats.keyframes.append(result.frame_index)
            if result.forced:
                stats.forced_keyframes.append(result.frame_index)
                stats.wasted[result.frame_index] = result.wasted_multiplications

        if config.oracle:
            trace = dense_trace(model, frame)
            stats.dense.append(dense_workloads(model, trace))
            stats.feature_error_l2.append(l2_distance(result.features, trace.features))
            stats.feature_error_max.append(max_abs_distance(result.features, trace.features))
        else:
            stats.dense.append(_recorded_dense_workloads(result))

    if not results:
        raise UsageError("frame sequence is empty")
    logger.info(
        f"Processed {len(results)} frames from index {start_index}: "
        f"{len(stats.keyframes)} keyframes ({len(stats.forced_keyframes)} forced)"
    )
    return results, stats


def chunk_bounds(frame_count: int, chunks: int) -> List[Tuple[int, int]]:
    """Contiguous, order-preserving split into at most `chunks` non-empty parts"""
    if chunks < 1:
        raise UsageError(f"chunk count must be >= 1, got {chunks}")
    parts = np.array_split(np.arange(frame_count), min(chunks, max(frame_count, 1)))
    return [(int(p[0]), int(p[-1]) + 1) for p in parts if p.size]


def process_chunked(
    model: NetworkModel,
    frames: Sequence[Tensor],
    config: SequenceConfig,
    chunks: Optional[int] = None,
) -> Tuple[List[FrameResult], SequenceStats]:
    """Split the video into chunks, each with its own state, and run them in parallel"""
    frames = list(frames)
    if not frames:
        raise UsageError("frame sequence is empty")
    bounds = chunk_bounds(len(frames), settings.RRM_CHUNKS if chunks is None else chunks)
    if len(bounds) == 1:
        return process_sequence(model, frames, config)

    logger.info(f"Processing {len(frames)} frames in {len(bounds)} chunks")
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        futures = [
            pool.submit(process_sequence, model, frames[start:stop], config, start)
            for start, stop in bounds
        ]
        parts = [f.result() for f in futures]

    results = [r for part_results, _ in parts for r in part_results]
    return results, SequenceStats.merge([part_stats for _, part_stats in parts])
