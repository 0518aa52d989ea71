"""
Pydantic schemas for run, sweep and error-model documents (schema v1)

Every float in a report must be finite; validation rejects NaN and Inf.
"""
from typing import List, Literal, Optional, Tuple, Union
from pydantic import BaseModel, ConfigDict, Field

from app.schemas.frames import FrameSourceSpec


class ReportModel(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False)


class WorkloadRecord(ReportModel):
    """One linear layer of one frame, as seen by the cost model"""
    layer_index: int
    kind: str
    dense_mults: int
    density: float = Field(ge=0.0, le=1.0)
    zero_fraction: float = Field(ge=0.0, le=1.0)


class LayerRecord(WorkloadRecord):
    multiplications: int = Field(ge=0)
    truncated_l2: float = Field(ge=0.0)
    subtractions: int = 0
    additions: int = 0
    snapshot_writes: int = 0


class FrameRecord(ReportModel):
    frame_index: int
    mode: Literal["keyframe", "delta"]
    forced: bool = False
    multiplications: int
    wasted_multiplications: int = 0
    accumulated_error: float
    feature_error_l2: Optional[float] = None
    feature_error_max: Optional[float] = None
    layers: List[LayerRecord]
    dense: List[WorkloadRecord]


class OverheadCounters(ReportModel):
    subtractions: int = 0
    additions: int = 0
    snapshot_writes: int = 0


class ErrorModelEcho(ReportModel):
    mu: List[float]
    threshold: Optional[float] = None  # None when unbounded


class RunConfigEcho(ReportModel):
    model: Union[str, List[str]]
    input_shape: Tuple[int, int, int]
    source: Union[str, FrameSourceSpec]
    epsilon: float
    chunks: int = 1
    oracle: bool = False
    include_keyframes: bool = True
    keyframe_interval: Optional[int] = None
    error_model: Optional[ErrorModelEcho] = None


class RunSummary(ReportModel):
    frames: int
    keyframes: List[int]
    forced_keyframes: List[int]
    overall_sparsity_dense: float
    overall_sparsity_rrm: float
    speedup_ratio: Optional[float] = None
    speedup_infinite: bool = False
    speedup_vs_dense_baseline: Optional[float] = None
    dense_cost: float
    rrm_cost: float
    sparse_multiplications: int
    wasted_multiplications: int
    overhead: OverheadCounters
    accumulated_error_trace: List[float]
    max_feature_error: Optional[float] = None
    final_feature_error: Optional[float] = None


class RunReport(ReportModel):
    schema_version: int = 1
    generated_at: str  # the only field allowed to differ between identical runs
    config: RunConfigEcho
    summary: RunSummary
    frames: List[FrameRecord]


class SweepRow(ReportModel):
    epsilon: float
    overall_sparsity: float
    speedup_ratio: Optional[float] = None
    speedup_infinite: bool = False
    final_feature_error: Optional[float] = None


class SweepReport(ReportModel):
    schema_version: int = 1
    generated_at: str
    summary: List[SweepRow]
    runs: List[RunReport]


class ErrorModelFile(ReportModel):
    schema_version: int = 1
    generated_at: str
    epsilon: float
    mu: List[float] = Field(min_length=5, max_length=5)
    normalized_mu: List[float] = Field(min_length=5, max_length=5)
    x_mean: float = 0.0
    x_scale: float = 1.0
    offset: float = Field(default=0.0, ge=0.0)
    threshold: Optional[float] = None  # None when unbounded
    calibration_points: List[Tuple[float, float]] = Field(default_factory=list)
