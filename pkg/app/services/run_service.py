"""
Run Service - end-to-end orchestration behind the CLI and the HTTP API:
single runs, threshold sweeps and error-model calibration.
"""
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from app.core.config import settings
from app.core.exceptions import UsageError
from app.core.monitoring import monitor_performance, track_metric
from app.models.error_model import ErrorModel
from app.models.network import NetworkModel
from app.models.tensor import Tensor
from app.schemas.frames import FrameSourceSpec
from app.schemas.report import RunConfigEcho, RunReport, SweepReport
from app.services import error_control, report_service
from app.services.calibration import calibrate
from app.services.rrm_engine import SequenceConfig, process_chunked

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
SourceEcho = Union[str, FrameSourceSpec]


def _echo(
    model: NetworkModel,
    model_label: Optional[str],
    source: Optional[SourceEcho],
    epsilon: float,
    chunks: int,
    oracle: bool,
    include_keyframes: bool,
    keyframe_interval: Optional[int],
    error_model: Optional[ErrorModel],
) -> RunConfigEcho:
    return RunConfigEcho(
        model=model_label or model.describe(),
        input_shape=model.input_shape,
        source=source if source is not None else "<in-memory>",
        epsilon=epsilon,
        chunks=chunks,
        oracle=oracle,
        include_keyframes=include_keyframes,
        keyframe_interval=keyframe_interval,
        error_model=report_service.error_model_echo(error_model),
    )


def execute_run(
    model: NetworkModel,
    frames: Sequence[Tensor],
    epsilon: float,
    error_model: Optional[ErrorModel] = None,
    chunks: int = 1,
    oracle: bool = False,
    include_keyframes: bool = True,
    keyframe_interval: Optional[int] = None,
    model_label: Optional[str] = None,
    source: Optional[SourceEcho] = None,
) -> RunReport:
    config = SequenceConfig(
        epsilon=epsilon,
        error_model=error_model,
        keyframe_interval=keyframe_interval,
        oracle=oracle,
    )
    results, stats = process_chunked(model, frames, config, chunks)
    echo = _echo(model, model_label, source, epsilon, chunks, oracle, include_keyframes, keyframe_interval, error_model)
    report = report_service.build_run_report(echo, results, stats)
    if report.summary.speedup_ratio is not None:
        track_metric("run.speedup_ratio", report.summary.speedup_ratio, tags={"epsilon": str(epsilon)})
    if oracle and report.summary.max_feature_error is not None and epsilon == 0:
        if report.summary.max_feature_error > settings.RRM_FEATURE_TOLERANCE:
            logger.warning(
                f"Exact mode drifted {report.summary.max_feature_error:.3e} from dense inference "
                f"(tolerance {settings.RRM_FEATURE_TOLERANCE:.0e})"
            )
    return report


@monitor_performance
def cmd_run(
    model: NetworkModel,
    frames: Sequence[Tensor],
    epsilon: Optional[float] = None,
    error_model: Optional[ErrorModel] = None,
    report_path: Optional[PathLike] = None,
    chunks: Optional[int] = None,
    oracle: Optional[bool] = None,
    include_keyframes: Optional[bool] = None,
    keyframe_interval: Optional[int] = None,
    model_label: Optional[str] = None,
    source: Optional[SourceEcho] = None,
) -> RunReport:
    epsilon = settings.RRM_EPSILON if epsilon is None else epsilon
    logger.info(f"Run: {len(frames)} frames, epsilon={epsilon}, error model={'on' if error_model else 'off'}")
    report = execute_run(
        model,
        frames,
        epsilon,
        error_model=error_model,
        chunks=settings.RRM_CHUNKS if chunks is None else chunks,
        oracle=settings.RRM_ORACLE if oracle is None else oracle,
        include_keyframes=settings.RRM_INCLUDE_KEYFRAMES if include_keyframes is None else include_keyframes,
        keyframe_interval=keyframe_interval,
        model_label=model_label,
        source=source,
    )
    if report_path is not None:
        report_service.write_report(report, report_path)
    return report


@monitor_performance
def cmd_sweep(
    model: NetworkModel,
    frames: Sequence[Tensor],
    epsilons: Sequence[float],
    report_path: Optional[PathLike] = None,
    chunks: Optional[int] = None,
    include_keyframes: Optional[bool] = None,
    oracle: Optional[bool] = True,
    error_model: Optional[ErrorModel] = None,
    model_label: Optional[str] = None,
    source: Optional[SourceEcho] = None,
) -> SweepReport:
    """
    One run per threshold plus an (epsilon, S, eta, error) table.

    Sweeps run the dense oracle by default so the error column is filled;
    oracle=None follows RRM_ORACLE like cmd_run. Each sub-report equals the
    cmd_run report for the same epsilon and options.
    """
    if not epsilons:
        raise UsageError("sweep needs at least one epsilon")
    runs = []
    for epsilon in epsilons:
        logger.info(f"Sweep: epsilon={epsilon}")
        runs.append(execute_run(
            model,
            frames,
            epsilon,
            error_model=error_model,
            chunks=settings.RRM_CHUNKS if chunks is None else chunks,
            oracle=settings.RRM_ORACLE if oracle is None else oracle,
            include_keyframes=settings.RRM_INCLUDE_KEYFRAMES if include_keyframes is None else include_keyframes,
            model_label=model_label,
            source=source,
        ))
    report = report_service.build_sweep_report(epsilons, runs)
    if report_path is not None:
        report_service.write_report(report, report_path)
    return report


@monitor_performance
def cmd_calibrate(
    model: NetworkModel,
    videos: Sequence[Sequence[Tensor]],
    epsilon: float,
    out_path: Optional[PathLike] = None,
    threshold: Optional[float] = None,
    pairs: Optional[Sequence[Tuple[float, float]]] = None,
) -> ErrorModel:
    """
    Collect (e_t, feature error) pairs and fit the quartic error model.

    `pairs` replaces the measured calibration data when given. When the data
    has fewer than five distinct e_t values (e.g. epsilon = 0, where nothing is
    ever truncated) a flat model at the largest measured error is produced.
    """
    if pairs is None:
        pairs = calibrate(model, videos, epsilon)
    pairs = list(pairs)
    threshold = settings.RRM_ERROR_THRESHOLD if threshold is None else threshold

    if len({e for e, _ in pairs}) < error_control.POLY_TERMS:
        logger.warning(f"Calibration produced fewer than {error_control.POLY_TERMS} distinct e_t values; "
                       f"falling back to a flat error model")
        fitted = error_control.constant_model(pairs, threshold)
    else:
        fitted = error_control.fit(pairs, threshold)

    if out_path is not None:
        report_service.save_error_model(fitted, epsilon, out_path)
    return fitted


def suggest_threshold(model: ErrorModel, fraction: float = 0.25) -> float:
    """Upper-bound error at a fraction of the largest calibrated e_t"""
    if not model.calibration_points:
        return math.inf
    largest = max(e for e, _ in model.calibration_points)
    return max(0.0, model.upper_bound(fraction * largest))
