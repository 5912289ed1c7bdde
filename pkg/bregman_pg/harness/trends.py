"""Log-log trend fits for sample-complexity sweeps."""

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy.stats import linregress

from ..models import BregmanError, ErrorType


@dataclass
class TrendFit:
    """Least-squares line through (ln x, ln y)."""
    axis: str
    slope: float
    intercept: float
    r_squared: float
    points: int


def fit_trend(points: Iterable[Tuple[float, float]], axis: str = "x") -> TrendFit:
    """
    Fit ln y = slope ln x + intercept.

    Raises:
        BregmanError: DEGENERATE for fewer than 3 points, non-positive
            values, or coinciding x values
    """
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] != 2:
        raise BregmanError(ErrorType.DEGENERATE, "trend fit needs at least 3 (x, y) points")
    if np.any(data <= 0) or not np.all(np.isfinite(data)):
        raise BregmanError(ErrorType.DEGENERATE, "trend fit needs positive finite data")
    log_x, log_y = np.log(data[:, 0]), np.log(data[:, 1])
    if np.ptp(log_x) == 0:
        raise BregmanError(ErrorType.DEGENERATE, "trend fit needs distinct x values")
    fit = linregress(log_x, log_y)
    return TrendFit(
        axis=axis,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue ** 2),
        points=int(data.shape[0]),
    )
