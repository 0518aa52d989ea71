"""
Accumulated-error control types
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from app.core.exceptions import UsageError

POLY_TERMS = 5  # fourth order


class Decision(str, Enum):
    CONTINUE = "continue"
    FORCE_KEYFRAME = "force_keyframe"


@dataclass(frozen=True)
class ErrorAccumulator:
    """Running sum of per-layer truncated l2 norms since the last keyframe"""

    e_t: float = 0.0


@dataclass(frozen=True)
class ErrorModel:
    """
    Fourth-order polynomial mapping accumulated truncation e_t to a predicted
    feature error.

    mu holds the coefficients in e_t itself (constant term first). The fit is
    carried out on e_t normalized by x_mean/x_scale; those coefficients are
    kept in normalized_mu and used for evaluation.

    offset lifts the polynomial over every calibration point. upper_bound()
    adds it to the running maximum of the polynomial on [0, e_t] and is what
    keyframe decisions compare against the threshold.
    """

    mu: Tuple[float, ...]
    threshold: float
    calibration_points: Tuple[Tuple[float, float], ...] = ()
    x_mean: float = 0.0
    x_scale: float = 1.0
    normalized_mu: Optional[Tuple[float, ...]] = field(default=None)
    offset: float = 0.0

    def __post_init__(self):
        mu = tuple(float(c) for c in self.mu)
        if len(mu) != POLY_TERMS:
            raise UsageError(f"error model needs exactly {POLY_TERMS} coefficients, got {len(mu)}")
        if not self.threshold >= 0:
            raise UsageError(f"error threshold must be >= 0, got {self.threshold}")
        if not self.x_scale > 0:
            raise UsageError(f"x_scale must be > 0, got {self.x_scale}")
        if not (self.offset >= 0 and math.isfinite(self.offset)):
            raise UsageError(f"error model offset must be finite and >= 0, got {self.offset}")
        normalized = self.normalized_mu
        if normalized is None:
            normalized = Polynomial(mu)(Polynomial([self.x_mean, self.x_scale])).coef
        normalized = tuple(float(c) for c in np.pad(normalized, (0, POLY_TERMS - len(normalized))))
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "normalized_mu", normalized)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(
            self, "calibration_points", tuple((float(a), float(b)) for a, b in self.calibration_points)
        )

    def predict(self, e_t: float) -> float:
        z = (e_t - self.x_mean) / self.x_scale
        return float(Polynomial(self.normalized_mu)(z))

    def upper_bound(self, e_t: float) -> float:
        """Largest prediction over [0, e_t] plus offset; non-decreasing in e_t"""
        poly = Polynomial(self.normalized_mu)
        low = -self.x_mean / self.x_scale
        high = (max(e_t, 0.0) - self.x_mean) / self.x_scale
        candidates = [low, high]
        candidates.extend(
            float(r.real) for r in np.atleast_1d(poly.deriv().roots())
            if abs(r.imag) < 1e-12 and low < r.real < high
        )
        return float(max(poly(z) for z in candidates)) + self.offset

    def with_threshold(self, threshold: float) -> "ErrorModel":
        return ErrorModel(
            mu=self.mu,
            threshold=threshold,
            calibration_points=self.calibration_points,
            x_mean=self.x_mean,
            x_scale=self.x_scale,
            normalized_mu=self.normalized_mu,
            offset=self.offset,
        )
