"""Least-squares convergence orders: slope of log(residual) against log(parameter)."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

__all__ = ["SlopeFit", "fit_slope", "richardson_ratio"]

DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True)
class SlopeFit:
    """Fitted order; `exact` when every residual sits below the roundoff floor."""

    slope: float | None
    intercept: float | None
    exact: bool
    monotone: bool

    def passes(self, threshold: float) -> bool:
        return self.exact or (self.slope is not None and self.slope <= threshold)


def fit_slope(
    params: Sequence[float], residuals: Sequence[float], *, floor: float = DEFAULT_FLOOR
) -> SlopeFit:
    """Only a series lying entirely below `floor` is exact; fewer than two points above it
    leave the slope undefined, which fails every threshold."""
    x = np.asarray(params, dtype=float)
    r = np.asarray(residuals, dtype=float)
    monotone = bool(np.all(np.diff(r) <= 0))
    if not np.all(np.isfinite(r)):
        return SlopeFit(slope=None, intercept=None, exact=False, monotone=False)
    if np.all(r <= floor):
        return SlopeFit(slope=None, intercept=None, exact=True, monotone=monotone)
    keep = r > floor
    if np.count_nonzero(keep) < 2:
        return SlopeFit(slope=None, intercept=None, exact=False, monotone=monotone)
    slope, intercept = np.polyfit(np.log(x[keep]), np.log(r[keep]), 1)
    return SlopeFit(slope=float(slope), intercept=float(intercept), exact=False, monotone=monotone)


def richardson_ratio(coarse: float, fine: float) -> float:
    """Error ratio under step halving; about 2**p for an order-p method."""
    return float("inf") if fine == 0.0 else coarse / fine
