"""
Accumulated error control: track truncated mass since the last keyframe,
predict the resulting feature error with a fitted quartic and decide when a
precise keyframe pass is due.
"""
import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from app.core.config import settings
from app.core.exceptions import NumericError, UsageError
from app.models.error_model import POLY_TERMS, Decision, ErrorAccumulator, ErrorModel

logger = logging.getLogger(__name__)


def accumulate(acc: ErrorAccumulator, frame_truncated_l2s: Iterable[float]) -> ErrorAccumulator:
    norms = [float(v) for v in frame_truncated_l2s]
    for v in norms:
        if math.isnan(v) or math.isinf(v):
            raise NumericError(f"truncated norm is not finite: {v}")
        if v < 0:
            raise UsageError(f"truncated norms must be >= 0, got {v}")
    return ErrorAccumulator(acc.e_t + math.fsum(norms))


def fit(points: Sequence[Tuple[float, float]], threshold: Optional[float] = None) -> ErrorModel:
    """
    Least-squares quartic through (e_t, measured_error) pairs.

    The design matrix is built on e_t shifted and scaled to zero mean and unit
    deviation; the normal equations are solved in that variable and the
    coefficients mapped back to e_t. The largest positive residual becomes the
    model's offset, so its upper bound covers every calibration point.
    """
    pts = [(float(x), float(y)) for x, y in points]
    distinct = len({x for x, _ in pts})
    if len(pts) < POLY_TERMS or distinct < POLY_TERMS:
        raise UsageError(
            f"quartic fit needs at least {POLY_TERMS} points with {POLY_TERMS} distinct e_t values, "
            f"got {len(pts)} points with {distinct} distinct"
        )

    x = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    x_mean = float(x.mean())
    x_scale = float(x.std())
    z = (x - x_mean) / x_scale

    design = np.vander(z, POLY_TERMS, increasing=True)
    normalized = np.linalg.solve(design.T @ design, design.T @ y)

    mu = Polynomial(normalized)(Polynomial([-x_mean / x_scale, 1.0 / x_scale])).coef
    mu = np.pad(mu, (0, POLY_TERMS - len(mu)))

    residual = design @ normalized - y
    offset = max(0.0, float(-residual.min()))
    logger.info(
        f"Fitted error model on {len(pts)} points, residual rms={float(np.sqrt(np.mean(residual ** 2))):.3e}, "
        f"offset={offset:.3e}"
    )
    return ErrorModel(
        mu=tuple(mu),
        threshold=settings.RRM_ERROR_THRESHOLD if threshold is None else threshold,
        calibration_points=tuple(pts),
        x_mean=x_mean,
        x_scale=x_scale,
        normalized_mu=tuple(normalized),
        offset=offset,
    )


def constant_model(points: Sequence[Tuple[float, float]], threshold: Optional[float] = None) -> ErrorModel:
    """Flat model at the largest measured error, for degenerate calibrations"""
    worst = max((float(y) for _, y in points), default=0.0)
    return ErrorModel(
        mu=(worst, 0.0, 0.0, 0.0, 0.0),
        threshold=settings.RRM_ERROR_THRESHOLD if threshold is None else threshold,
        calibration_points=tuple(points),
    )


def predict_and_decide(model: ErrorModel, acc: ErrorAccumulator) -> Decision:
    predicted = model.upper_bound(acc.e_t)
    if predicted > model.threshold:
        logger.debug(f"Predicted error {predicted:.3e} > {model.threshold:.3e} at e_t={acc.e_t:.3e}")
        return Decision.FORCE_KEYFRAME
    return Decision.CONTINUE
