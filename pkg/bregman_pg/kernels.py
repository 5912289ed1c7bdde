"""Bregman kernels with exact gradients, Hessian eigenvalue bounds and conditioning constants."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .models import BregmanError, ErrorType, KernelKind
from .numerics import ScalarRootSpec, segment_norm_extrema, solve_monotone

logger = logging.getLogger(__name__)

# Stand-in for an unbounded diameter budget; the quadratic kernel is conditioned everywhere.
QUADRATIC_DELTA = 1e12


@dataclass(frozen=True)
class KernelRegularity:
    """Strong convexity, diameter budget and local conditioning bound of a kernel."""
    mu: float
    delta: float
    kappa_delta: float


@dataclass(frozen=True)
class KernelModel:
    """
    Legendre kernel h.

    Quadratic: h(x) = ||x||^2/2.
    Polynomial(r): h(x) = ||x||^2/2 + ||x||^(r+2)/(r+2).
    Monomial(r): h(x) = x^r/r on the half-line x >= 0 (one dimension only).
    """
    kind: KernelKind
    r: int = 0

    def __post_init__(self):
        if self.kind == KernelKind.POLYNOMIAL and (int(self.r) != self.r or self.r < 1):
            raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, f"polynomial kernel needs integer r >= 1, got {self.r}")
        if self.kind == KernelKind.MONOMIAL and (int(self.r) != self.r or self.r < 2):
            raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, f"monomial kernel needs integer r >= 2, got {self.r}")

    @classmethod
    def quadratic(cls) -> "KernelModel":
        return cls(KernelKind.QUADRATIC)

    @classmethod
    def polynomial(cls, r: int) -> "KernelModel":
        return cls(KernelKind.POLYNOMIAL, int(r))

    @classmethod
    def monomial(cls, r: int) -> "KernelModel":
        return cls(KernelKind.MONOMIAL, int(r))

    def describe(self) -> str:
        """Short label used in logs and output files."""
        if self.kind == KernelKind.QUADRATIC:
            return "quadratic"
        return f"{self.kind.value}(r={self.r})"

    # -- helpers -----------------------------------------------------------

    def _monomial_point(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != 1:
            raise BregmanError(ErrorType.DOMAIN_VIOLATION, f"monomial kernel is one-dimensional, got dim {x.size}")
        if x[0] < 0:
            raise BregmanError(ErrorType.DOMAIN_VIOLATION, f"monomial kernel needs x >= 0, got {x[0]}")
        return float(x[0])

    def _eig_bounds_at_norm(self, t: float, dim: int) -> Tuple[float, float]:
        """Hessian eigen extremes of the polynomial kernel at a point of norm t."""
        tr = t ** self.r
        top = (self.r + 1) * tr + 1.0
        if dim == 1:
            return top, top
        return tr + 1.0, top

    # -- values and derivatives --------------------------------------------

    def h_value(self, x) -> float:
        """Kernel value h(x)."""
        if self.kind == KernelKind.MONOMIAL:
            t = self._monomial_point(x)
            return t ** self.r / self.r
        n = float(np.linalg.norm(x))
        value = 0.5 * n * n
        if self.kind == KernelKind.POLYNOMIAL:
            value += n ** (self.r + 2) / (self.r + 2)
        return value

    def grad_h(self, x) -> np.ndarray:
        """Kernel gradient: x, (1 + ||x||^r) x, or x^(r-1)."""
        if self.kind == KernelKind.MONOMIAL:
            t = self._monomial_point(x)
            return np.array([t ** (self.r - 1)])
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == KernelKind.QUADRATIC:
            return x.copy()
        n = float(np.linalg.norm(x))
        return (1.0 + n ** self.r) * x

    def hessian(self, x) -> np.ndarray:
        """Full kernel Hessian matrix."""
        if self.kind == KernelKind.MONOMIAL:
            t = self._monomial_point(x)
            return np.array([[(self.r - 1) * t ** (self.r - 2)]])
        x = np.atleast_1d(np.asarray(x, dtype=float))
        eye = np.eye(x.size)
        if self.kind == KernelKind.QUADRATIC:
            return eye
        n = float(np.linalg.norm(x))
        if n == 0.0:
            return eye
        u = x / n
        nr = n ** self.r
        return (nr + 1.0) * eye + self.r * nr * np.outer(u, u)

    def hess_eig_bounds(self, x) -> Tuple[float, float]:
        """(lambda_min, lambda_max) of the Hessian at x, in closed form."""
        if self.kind == KernelKind.QUADRATIC:
            return 1.0, 1.0
        if self.kind == KernelKind.MONOMIAL:
            t = self._monomial_point(x)
            value = (self.r - 1) * t ** (self.r - 2)
            return value, value
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._eig_bounds_at_norm(float(np.linalg.norm(x)), x.size)

    def condition_number(self, x) -> float:
        """Local condition number lambda_max / lambda_min."""
        lo, hi = self.hess_eig_bounds(x)
        if lo <= 0:
            raise BregmanError(ErrorType.SINGULAR_HESSIAN, "kernel Hessian is singular")
        return hi / lo

    # -- set-wise bounds ---------------------------------------------------

    def mu_L_over_segment(self, a, b) -> Tuple[float, float]:
        """
        Exact (mu_h, L_h) over the segment [a, b].

        Polynomial eigenvalue extremes grow with ||x||, so they are attained
        at the nearest and farthest points of the segment from the origin.
        """
        if self.kind == KernelKind.QUADRATIC:
            return 1.0, 1.0
        if self.kind == KernelKind.MONOMIAL:
            ta, tb = self._monomial_point(a), self._monomial_point(b)
            lo = self.hess_eig_bounds(np.array([min(ta, tb)]))[0]
            hi = self.hess_eig_bounds(np.array([max(ta, tb)]))[1]
            return lo, hi
        a = np.atleast_1d(np.asarray(a, dtype=float))
        near, far = segment_norm_extrema(a, b)
        return self._eig_bounds_at_norm(near, a.size)[0], self._eig_bounds_at_norm(far, a.size)[1]

    def mu_L_over_ball(self, center, radius: float) -> Tuple[float, float]:
        """Exact (mu_h, L_h) over the closed ball B(center, radius)."""
        if radius < 0:
            raise BregmanError(ErrorType.DEGENERATE, f"radius must be nonnegative, got {radius}")
        if self.kind == KernelKind.QUADRATIC:
            return 1.0, 1.0
        if self.kind == KernelKind.MONOMIAL:
            raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, "monomial kernel has no ball bounds off the half-line")
        center = np.atleast_1d(np.asarray(center, dtype=float))
        c = float(np.linalg.norm(center))
        near = max(0.0, c - radius)
        far = c + radius
        return self._eig_bounds_at_norm(near, center.size)[0], self._eig_bounds_at_norm(far, center.size)[1]

    def bregman_div(self, y, x) -> float:
        """D_h(y, x) = h(y) - h(x) - <grad h(x), y - x>."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == KernelKind.QUADRATIC:
            diff = y - x
            return 0.5 * float(diff @ diff)
        value = self.h_value(y) - self.h_value(x) - float(self.grad_h(x) @ (y - x))
        return max(value, 0.0)

    def regularity_constants(self) -> KernelRegularity:
        """(mu, delta, kappa_delta) of the kernel."""
        if self.kind == KernelKind.QUADRATIC:
            return KernelRegularity(mu=1.0, delta=QUADRATIC_DELTA, kappa_delta=1.0)
        if self.kind == KernelKind.POLYNOMIAL:
            return KernelRegularity(mu=1.0, delta=1.0 / self.r, kappa_delta=3.0 * self.r + 4.0)
        raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, f"{self.describe()} is not globally strongly convex")

    def global_condition_bound(self) -> float:
        """sup_x of the local condition number."""
        if self.kind == KernelKind.QUADRATIC:
            return 1.0
        if self.kind == KernelKind.POLYNOMIAL:
            return self.r + 1.0
        raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, f"{self.describe()} has no global condition bound")

    # -- inverses ----------------------------------------------------------

    def grad_h_inverse(self, w) -> np.ndarray:
        """
        Solve grad h(y) = w for y.

        For the polynomial kernel y = (t / ||w||) w where t + t^(r+1) = ||w||.
        """
        w = np.atleast_1d(np.asarray(w, dtype=float))
        if not np.all(np.isfinite(w)):
            raise BregmanError(ErrorType.NON_FINITE, "grad_h_inverse received a non-finite vector")
        if self.kind == KernelKind.QUADRATIC:
            return w.copy()
        if self.kind == KernelKind.MONOMIAL:
            if w.size != 1 or w[0] < 0:
                raise BregmanError(ErrorType.DOMAIN_VIOLATION, f"monomial kernel cannot invert {w}")
            return np.array([w[0] ** (1.0 / (self.r - 1))])

        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            return np.zeros_like(w)
        r = self.r
        spec = ScalarRootSpec(
            target=wn,
            bracket_lo=0.0,
            bracket_hi=min(wn, wn ** (1.0 / (r + 1))),
            abs_tol=1e-12 * (1.0 + wn),
        )
        t = solve_monotone(lambda s: s + s ** (r + 1), spec, derivative=lambda s: 1.0 + (r + 1) * s ** r)
        return (t / wn) * w

    def hessian_solve(self, x, g) -> np.ndarray:
        """
        Solve hessian(x) y = g.

        Polynomial Hessians are alpha I + beta u u^T with a unit vector u, so
        Sherman-Morrison gives y = g/alpha - beta/(alpha (alpha + beta)) u (u^T g).
        """
        g = np.atleast_1d(np.asarray(g, dtype=float))
        if self.kind == KernelKind.QUADRATIC:
            return g.copy()
        if self.kind == KernelKind.MONOMIAL:
            curvature = self.hess_eig_bounds(x)[0]
            if curvature <= 0:
                raise BregmanError(ErrorType.SINGULAR_HESSIAN, f"monomial Hessian vanishes at x={x}")
            return g / curvature
        x = np.atleast_1d(np.asarray(x, dtype=float))
        n = float(np.linalg.norm(x))
        if n == 0.0:
            return g.copy()
        u = x / n
        alpha = n ** self.r + 1.0
        beta = self.r * n ** self.r
        return g / alpha - (beta / (alpha * (alpha + beta))) * u * float(u @ g)
