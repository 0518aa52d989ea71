"""
Report Service - turns engine results into schema-versioned JSON documents
with a CSV summary alongside, and reads/writes error-model files.
"""
import csv
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence, Union

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import DataFormatError, NumericError, UsageError
from app.models.error_model import ErrorModel
from app.schemas.report import (
    ErrorModelEcho,
    ErrorModelFile,
    FrameRecord,
    LayerRecord,
    OverheadCounters,
    RunConfigEcho,
    RunReport,
    RunSummary,
    SweepReport,
    SweepRow,
    WorkloadRecord,
)
from app.services.metrics import (
    LayerWorkload,
    SequenceStats,
    delta_sparsity,
    overall_sparsity,
    speedup_ratio,
)
from app.services.rrm_engine import FrameResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def error_model_echo(model: Optional[ErrorModel]) -> Optional[ErrorModelEcho]:
    if model is None:
        return None
    return ErrorModelEcho(mu=list(model.mu), threshold=_finite_or_none(model.threshold))


def _frame_record(result: FrameResult, stats: SequenceStats, position: int) -> FrameRecord:
    layers = [
        LayerRecord(
            layer_index=s.layer_index,
            kind=s.kind,
            dense_mults=s.dense_multiplications,
            density=s.delta_density,
            zero_fraction=s.input_zero_fraction,
            multiplications=s.multiplications,
            truncated_l2=s.truncated_l2,
            subtractions=s.subtractions,
            additions=s.additions,
            snapshot_writes=s.snapshot_writes,
        )
        for s in result.per_layer
    ]
    dense = [WorkloadRecord(**vars(w)) for w in stats.dense[position]]
    return FrameRecord(
        frame_index=result.frame_index,
        mode=result.mode.value,
        forced=result.forced,
        multiplications=result.multiplications,
        wasted_multiplications=result.wasted_multiplications,
        accumulated_error=result.accumulated_error,
        feature_error_l2=stats.feature_error_l2[position] if stats.feature_error_l2 is not None else None,
        feature_error_max=stats.feature_error_max[position] if stats.feature_error_max is not None else None,
        layers=layers,
        dense=dense,
    )


def build_run_report(
    config: RunConfigEcho,
    results: Sequence[FrameResult],
    stats: SequenceStats,
) -> RunReport:
    summary = stats.summary(include_keyframes=config.include_keyframes)
    overhead = OverheadCounters(
        subtractions=sum(s.subtractions for r in results for s in r.per_layer),
        additions=sum(s.additions for r in results for s in r.per_layer),
        snapshot_writes=sum(s.snapshot_writes for r in results for s in r.per_layer),
    )
    errors = stats.feature_error_max
    try:
        return RunReport(
            schema_version=settings.REPORT_SCHEMA_VERSION,
            generated_at=timestamp(),
            config=config,
            summary=RunSummary(
                frames=len(results),
                keyframes=stats.keyframes,
                forced_keyframes=stats.forced_keyframes,
                overall_sparsity_dense=summary.overall_sparsity_dense,
                overall_sparsity_rrm=summary.overall_sparsity_rrm,
                speedup_ratio=summary.speedup_ratio,
                speedup_infinite=summary.speedup_infinite,
                speedup_vs_dense_baseline=summary.speedup_vs_dense_baseline,
                dense_cost=summary.dense_cost,
                rrm_cost=summary.rrm_cost,
                sparse_multiplications=sum(r.multiplications for r in results),
                wasted_multiplications=sum(r.wasted_multiplications for r in results),
                overhead=overhead,
                accumulated_error_trace=stats.accumulated_error,
                max_feature_error=max(errors) if errors else None,
                final_feature_error=stats.feature_error_l2[-1] if stats.feature_error_l2 else None,
            ),
            frames=[_frame_record(r, stats, i) for i, r in enumerate(results)],
        )
    except ValidationError as e:
        raise NumericError(f"report holds non-finite or out-of-range values: {e}") from e


def summary_from_rows(report: RunReport) -> dict:
    """Recompute S and eta from the per-layer rows stored in a report"""
    keyframes = set(report.summary.keyframes)
    dense_rows: List[LayerWorkload] = []
    rrm_rows: List[LayerWorkload] = []
    wasted = 0
    for frame in report.frames:
        if not report.config.include_keyframes and frame.frame_index in keyframes:
            continue
        wasted += frame.wasted_multiplications
        dense_rows.extend(LayerWorkload(**w.model_dump()) for w in frame.dense)
        rrm_rows.extend(
            LayerWorkload(**w.model_dump(include={"layer_index", "kind", "dense_mults", "density", "zero_fraction"}))
            for w in frame.layers
        )
    eta = None if report.summary.speedup_infinite else speedup_ratio(dense_rows, rrm_rows, wasted)
    return {
        "overall_sparsity_dense": overall_sparsity(dense_rows),
        "overall_sparsity_rrm": delta_sparsity(rrm_rows),
        "speedup_ratio": eta,
    }


def sweep_row(epsilon: float, report: RunReport) -> SweepRow:
    return SweepRow(
        epsilon=epsilon,
        overall_sparsity=report.summary.overall_sparsity_rrm,
        speedup_ratio=report.summary.speedup_ratio,
        speedup_infinite=report.summary.speedup_infinite,
        final_feature_error=report.summary.final_feature_error,
    )


def build_sweep_report(epsilons: Sequence[float], runs: Sequence[RunReport]) -> SweepReport:
    return SweepReport(
        schema_version=settings.REPORT_SCHEMA_VERSION,
        generated_at=timestamp(),
        summary=[sweep_row(e, r) for e, r in zip(epsilons, runs)],
        runs=list(runs),
    )


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def write_report(report: Union[RunReport, SweepReport], path: PathLike) -> Path:
    """Write the JSON document and a CSV summary with the same stem"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2), encoding="utf-8")

    csv_path = path.with_suffix(".csv")
    if isinstance(report, SweepReport):
        _write_csv(
            csv_path,
            ["epsilon", "overall_sparsity", "speedup_ratio", "speedup_infinite", "final_feature_error"],
            [[r.epsilon, r.overall_sparsity, r.speedup_ratio, r.speedup_infinite, r.final_feature_error]
             for r in report.summary],
        )
    else:
        _write_csv(
            csv_path,
            ["frame_index", "mode", "forced", "multiplications", "wasted_multiplications",
             "accumulated_error", "feature_error_l2"],
            [[f.frame_index, f.mode, f.forced, f.multiplications, f.wasted_multiplications,
              f.accumulated_error, f.feature_error_l2] for f in report.frames],
        )
    logger.info(f"Report written to {path} (summary: {csv_path})")
    return path


def load_run_report(path: PathLike) -> RunReport:
    try:
        return RunReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataFormatError(f"{path}: not a run report: {e}") from e


def save_error_model(model: ErrorModel, epsilon: float, path: PathLike) -> Path:
    document = ErrorModelFile(
        schema_version=settings.REPORT_SCHEMA_VERSION,
        generated_at=timestamp(),
        epsilon=epsilon,
        mu=list(model.mu),
        normalized_mu=list(model.normalized_mu),
        x_mean=model.x_mean,
        x_scale=model.x_scale,
        offset=model.offset,
        threshold=_finite_or_none(model.threshold),
        calibration_points=list(model.calibration_points),
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Error model written to {path}")
    return path


def load_error_model(path: PathLike, threshold: Optional[float] = None) -> ErrorModel:
    """Read an error-model file; an explicit threshold overrides the stored one"""
    path = Path(path)
    try:
        document = ErrorModelFile.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise UsageError(f"cannot read error model {path}: {e}") from e
    except ValidationError as e:
        raise DataFormatError(f"{path}: not an error model file: {e}") from e
    if threshold is None:
        threshold = document.threshold if document.threshold is not None else math.inf
    return ErrorModel(
        mu=tuple(document.mu),
        threshold=threshold,
        calibration_points=tuple(document.calibration_points),
        x_mean=document.x_mean,
        x_scale=document.x_scale,
        offset=document.offset,
        normalized_mu=tuple(document.normalized_mu),
    )
