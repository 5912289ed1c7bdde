"""Scalar root finding, finite-difference oracles, segment geometry and seeded random streams."""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .models import BregmanError, ErrorType

logger = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-5
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ScalarRootSpec:
    """Target value, bracket and stopping rule for a monotone scalar equation g(t) = target."""
    target: float
    bracket_lo: float
    bracket_hi: float
    abs_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not self.bracket_lo < self.bracket_hi:
            raise BregmanError(
                ErrorType.NO_BRACKET,
                f"bracket_lo={self.bracket_lo} must be below bracket_hi={self.bracket_hi}",
            )
        if not self.abs_tol > 0:
            raise BregmanError(ErrorType.DEGENERATE, f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_iter < 1:
            raise BregmanError(ErrorType.DEGENERATE, f"max_iter must be at least 1, got {self.max_iter}")


def _checked(value: float, where: float) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise BregmanError(ErrorType.NON_FINITE, f"non-finite function value at t={where}")
    return value


def solve_monotone(
    g: Callable[[float], float],
    spec: ScalarRootSpec,
    derivative: Optional[Callable[[float], float]] = None,
) -> float:
    """
    Solve g(t) = spec.target for a strictly monotone g on the bracket.

    Newton steps are taken while they stay inside the current bracket and
    shrink fast enough; otherwise the bracket is bisected. Without a
    derivative the method is plain bisection.

    Args:
        g: Strictly monotone function on [bracket_lo, bracket_hi]
        spec: Target, bracket and tolerances
        derivative: Optional derivative of g

    Returns:
        t with |g(t) - target| <= abs_tol, or the floating-point limit of the
        bracket when the residual cannot be reduced further

    Raises:
        BregmanError: NO_BRACKET if g(lo), g(hi) do not straddle the target,
            NO_CONVERGENCE after max_iter iterations
    """
    lo, hi = float(spec.bracket_lo), float(spec.bracket_hi)
    f_lo = _checked(g(lo), lo) - spec.target
    f_hi = _checked(g(hi), hi) - spec.target
    if abs(f_lo) <= spec.abs_tol:
        return lo
    if abs(f_hi) <= spec.abs_tol:
        return hi
    if f_lo * f_hi > 0:
        raise BregmanError(
            ErrorType.NO_BRACKET,
            f"g({lo})-target={f_lo:.3e} and g({hi})-target={f_hi:.3e} have the same sign",
        )

    # Orient so the residual is negative at x_neg.
    x_neg, x_pos = (lo, hi) if f_lo < 0 else (hi, lo)

    t = 0.5 * (lo + hi)
    dx_old = abs(hi - lo)
    dx = dx_old
    f = _checked(g(t), t) - spec.target
    df = _checked(derivative(t), t) if derivative is not None else 0.0

    for _ in range(spec.max_iter):
        if abs(f) <= spec.abs_tol:
            return t
        if f < 0:
            x_neg = t
        else:
            x_pos = t

        newton_ok = (
            derivative is not None
            and df != 0.0
            and ((t - x_pos) * df - f) * ((t - x_neg) * df - f) < 0.0
            and abs(2.0 * f) <= abs(dx_old * df)
        )
        previous = t
        dx_old = dx
        if newton_ok:
            dx = f / df
            t = t - dx
        else:
            dx = 0.5 * (x_pos - x_neg)
            t = x_neg + dx
        if t == previous:
            logger.debug("solve_monotone stalled at t=%r with residual %.3e", t, f)
            return t

        f = _checked(g(t), t) - spec.target
        if derivative is not None:
            df = _checked(derivative(t), t)

    if abs(f) <= spec.abs_tol:
        return t
    raise BregmanError(
        ErrorType.NO_CONVERGENCE,
        f"no root within {spec.max_iter} iterations, last residual {f:.3e}",
    )


def _as_point(x) -> np.ndarray:
    try:
        return np.atleast_1d(np.asarray_chkfinite(x, dtype=float)).copy()
    except ValueError as exc:
        raise BregmanError(ErrorType.NON_FINITE, "evaluation point is not finite") from exc


def fd_gradient(f: Callable[[np.ndarray], float], x, h_step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """
    Central-difference gradient of a scalar function.

    Args:
        f: Scalar function of a vector
        x: Evaluation point
        h_step: Difference step

    Returns:
        Gradient estimate with O(h_step**2) component error
    """
    if not h_step > 0:
        raise BregmanError(ErrorType.DEGENERATE, f"h_step must be positive, got {h_step}")
    a = _as_point(x)
    grad = np.empty_like(a)
    for i in range(a.size):
        xi = a[i]
        a[i] = xi + h_step
        f_right = _checked(f(a), a[i])
        a[i] = xi - h_step
        f_left = _checked(f(a), a[i])
        a[i] = xi
        grad[i] = (f_right - f_left) / (2.0 * h_step)
    return grad


def fd_hessian(f: Callable[[np.ndarray], float], x, h_step: Optional[float] = None) -> np.ndarray:
    """
    Second-order central-difference Hessian, symmetrized.

    The default step eps**(1/4) balances truncation and rounding for O(1)
    functions.
    """
    a = _as_point(x)
    if h_step is None:
        h_step = np.finfo(float).eps ** 0.25
    elif not h_step > 0:
        raise BregmanError(ErrorType.DEGENERATE, f"h_step must be positive, got {h_step}")

    n = a.size
    hess = np.empty((n, n))
    f_center = _checked(f(a), 0.0)
    step_sq = h_step * h_step

    for i in range(n):
        xi = a[i]
        a[i] = xi + h_step
        f_right = _checked(f(a), a[i])
        a[i] = xi - h_step
        f_left = _checked(f(a), a[i])
        a[i] = xi
        hess[i, i] = (f_right + f_left - 2.0 * f_center) / step_sq

        for j in range(i + 1, n):
            xj = a[j]
            values = []
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                a[i] = xi + si * h_step
                a[j] = xj + sj * h_step
                values.append(_checked(f(a), a[i]))
            a[i] = xi
            a[j] = xj
            hess[i, j] = (values[0] - values[1] - values[2] + values[3]) / (4.0 * step_sq)
            hess[j, i] = hess[i, j]

    return 0.5 * (hess + hess.T)


def segment_norm_extrema(a, b) -> Tuple[float, float]:
    """
    Smallest and largest Euclidean norm over the segment [a, b].

    Returns:
        (distance from the origin to the segment, max(||a||, ||b||))
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    d = b - a
    dd = float(d @ d)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if dd == 0.0:
        return norm_a, norm_a
    t = float(np.clip(-(a @ d) / dd, 0.0, 1.0))
    nearest = float(np.linalg.norm(a + t * d))
    return min(nearest, norm_a, norm_b), max(norm_a, norm_b)


class RandomStream:
    """
    Seeded random stream with reproducible substreams.

    Substream (s, k) is derived from the seed and the key path, never from
    the parent's position, so it does not depend on construction order.
    """

    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()):
        """
        Initialize the stream.

        Args:
            seed: 64-bit seed (negative values are wrapped)
            spawn_key: Key path of this stream below the root seed
        """
        self.seed = int(seed) & _SEED_MASK
        self.spawn_key = tuple(int(k) for k in spawn_key)
        self.position = 0
        self._rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.spawn_key))

    def substream(self, s: int, k: int) -> "RandomStream":
        """Independent stream for epoch s, step k."""
        return RandomStream(self.seed, self.spawn_key + (int(s), int(k)))

    def integers(self, high: int, size: int) -> np.ndarray:
        """Uniform indices in [0, high), drawn with replacement."""
        self.position += size
        return self._rng.integers(0, high, size=size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        """Uniform draws on [low, high)."""
        self.position += int(np.prod(size)) if size is not None else 1
        return self._rng.uniform(low, high, size=size)

    def normal(self, size=None):
        """Standard normal draws."""
        self.position += int(np.prod(size)) if size is not None else 1
        return self._rng.standard_normal(size=size)

    def unit_vector(self, dim: int) -> np.ndarray:
        """Uniformly distributed direction on the unit sphere."""
        while True:
            v = self.normal(dim)
            norm = float(np.linalg.norm(v))
            if norm > 1e-12:
                return v / norm

    def choice(self, n: int) -> int:
        """Single uniform index in [0, n)."""
        return int(self.integers(n, 1)[0])
