"""Bregman proximal mapping for zero, l1, ball and l1-plus-ball composite terms."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .kernels import KernelModel
from .models import BOUNDARY_TOL, Ball, BregmanError, ErrorType, KernelKind, TermKind
from .numerics import ScalarRootSpec, solve_monotone

logger = logging.getLogger(__name__)

INNER_TOL = 1e-10
INNER_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class CompositeTerm:
    """Convex nonsmooth term phi: zero, weight*||.||_1, a ball indicator, or l1 plus ball."""
    kind: TermKind
    weight: float = 0.0
    ball: Optional[Ball] = None

    def __post_init__(self):
        if self.weight < 0:
            raise BregmanError(ErrorType.UNSUPPORTED_TERM, f"l1 weight must be nonnegative, got {self.weight}")
        needs_ball = self.kind in (TermKind.BALL, TermKind.L1_PLUS_BALL)
        if needs_ball and self.ball is None:
            raise BregmanError(ErrorType.UNSUPPORTED_TERM, f"{self.kind.value} term needs a ball")
        if not needs_ball and self.ball is not None:
            raise BregmanError(ErrorType.UNSUPPORTED_TERM, f"{self.kind.value} term cannot carry a ball")

    @classmethod
    def zero(cls) -> "CompositeTerm":
        return cls(TermKind.ZERO)

    @classmethod
    def l1(cls, weight: float) -> "CompositeTerm":
        return cls(TermKind.L1, weight=float(weight))

    @classmethod
    def ball_indicator(cls, center, radius: float) -> "CompositeTerm":
        return cls(TermKind.BALL, ball=Ball(center, radius))

    @classmethod
    def l1_plus_ball(cls, weight: float, center, radius: float) -> "CompositeTerm":
        return cls(TermKind.L1_PLUS_BALL, weight=float(weight), ball=Ball(center, radius))

    @property
    def l1_weight(self) -> float:
        """Weight of the l1 part (zero when absent)."""
        return self.weight if self.kind in (TermKind.L1, TermKind.L1_PLUS_BALL) else 0.0

    def has_ball(self) -> bool:
        return self.ball is not None

    def rho(self, dim: int) -> float:
        """Bound on ||u|| over the l1 subdifferential; ball normal cones are not bounded."""
        return self.l1_weight * math.sqrt(dim)

    def value(self, x) -> float:
        """phi(x), +inf outside the ball."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.ball is not None and not self.ball.contains(x, tol=BOUNDARY_TOL):
            return math.inf
        return self.l1_weight * float(np.sum(np.abs(x)))

    def without_ball(self) -> "CompositeTerm":
        """The term with its ball constraint dropped."""
        return CompositeTerm.l1(self.weight) if self.l1_weight > 0 else CompositeTerm.zero()

    def with_ball(self, ball: Ball) -> "CompositeTerm":
        """phi plus the indicator of an extra ball (epoch bound)."""
        if self.ball is not None:
            raise BregmanError(ErrorType.UNSUPPORTED_TERM, "intersection of two balls is not supported")
        if self.kind == TermKind.L1:
            return CompositeTerm(TermKind.L1_PLUS_BALL, weight=self.weight, ball=ball)
        return CompositeTerm(TermKind.BALL, ball=ball)

    def describe(self) -> str:
        if self.kind == TermKind.ZERO:
            return "zero"
        parts = []
        if self.l1_weight > 0 or self.kind == TermKind.L1:
            parts.append(f"l1(w={self.weight:g})")
        if self.ball is not None:
            parts.append(f"ball(r={self.ball.radius:g})")
        return "+".join(parts)


@dataclass
class ProxResult:
    """Output of one Bregman proximal step."""
    y: np.ndarray
    u: np.ndarray
    kkt_residual: float
    used_closed_form: bool
    on_boundary: bool = False


def soft_threshold(w, threshold: float) -> np.ndarray:
    """Componentwise shrinkage; |w_i| equal to the threshold maps to 0."""
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - threshold, 0.0)


def _l1_polynomial_scale(r: int, z: np.ndarray) -> np.ndarray:
    """y = z / s with s >= 1 solving s^(r+1) - s^r = ||z||^r."""
    zn = float(np.linalg.norm(z))
    if zn == 0.0:
        return np.zeros_like(z)
    target = zn ** r
    spec = ScalarRootSpec(target=target, bracket_lo=1.0, bracket_hi=1.0 + zn, abs_tol=1e-12 * (1.0 + target))
    s = solve_monotone(
        lambda t: t ** (r + 1) - t ** r,
        spec,
        derivative=lambda t: (r + 1) * t ** r - r * t ** (r - 1),
    )
    return z / s


def _prox_unconstrained(kernel: KernelModel, phi: CompositeTerm, x, v, lam: float) -> np.ndarray:
    w = kernel.grad_h(x) - lam * np.asarray(v, dtype=float)
    weight = phi.l1_weight
    if weight == 0.0:
        return kernel.grad_h_inverse(w)
    z = soft_threshold(w, lam * weight)
    if kernel.kind == KernelKind.QUADRATIC:
        return z
    if kernel.kind == KernelKind.POLYNOMIAL:
        return _l1_polynomial_scale(kernel.r, z)
    return kernel.grad_h_inverse(z)


def _euclidean_prox_l1_ball(p: np.ndarray, alpha: float, ball: Ball) -> np.ndarray:
    """
    argmin_y ||y - p||^2/2 + alpha ||y||_1 over the ball.

    On an active constraint y(nu) = soft((p + nu c)/(1 + nu), alpha/(1 + nu))
    with the multiplier nu > 0 chosen so that ||y(nu) - c|| = R.
    """
    if alpha == 0.0:
        return ball.project(p)
    y = soft_threshold(p, alpha)
    if ball.contains(y):
        return y
    c, radius = ball.center, ball.radius

    def y_of(nu: float) -> np.ndarray:
        return soft_threshold((p + nu * c) / (1.0 + nu), alpha / (1.0 + nu))

    def gap(nu: float) -> float:
        return float(np.linalg.norm(y_of(nu) - c))

    hi = 1.0
    while gap(hi) > radius:
        hi *= 2.0
        if hi > 1e300:
            raise BregmanError(ErrorType.NO_CONVERGENCE, "multiplier search for the l1 ball prox diverged")
    spec = ScalarRootSpec(target=radius, bracket_lo=0.0, bracket_hi=hi, abs_tol=1e-13 * (1.0 + radius), max_iter=400)
    return y_of(solve_monotone(gap, spec))


def prox_map_constrained_inner(
    kernel: KernelModel,
    phi: CompositeTerm,
    x,
    v,
    lam: float,
    tol: float = INNER_TOL,
    use_fast_path: bool = True,
    y0=None,
) -> np.ndarray:
    """
    Solve the prox subproblem by proximal gradient in y.

    The smooth part <v, y> + D_h(y, x)/lam is handled with step lam / L_h
    over the ball; the l1 part and the ball indicator through their
    Euclidean prox. Terms without a ball are solved over a ball around
    the mirror step grad h^{-1}(grad h(x) - lam v) that reaches x and
    contains the minimizer. Without the fast path or y0 the iteration
    starts at x.

    Args:
        kernel: Bregman kernel
        phi: Composite term
        x: Prox center
        v: Linear term
        lam: Step size
        tol: Stop when the subproblem gradient-mapping norm is at most tol
        use_fast_path: Try the unconstrained closed form first and accept it
            when it lies in the ball
        y0: Optional starting point

    Returns:
        Approximate minimizer

    Raises:
        BregmanError: NO_CONVERGENCE after the inner iteration budget
    """
    if not lam > 0:
        raise BregmanError(ErrorType.DEGENERATE, f"lambda must be positive, got {lam}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    grad_hx = kernel.grad_h(x)
    w = grad_hx - lam * v

    start = x
    if use_fast_path:
        candidate = _prox_unconstrained(kernel, phi.without_ball(), x, v, lam)
        if phi.ball is None or phi.ball.contains(candidate):
            return candidate
        start = candidate
    if y0 is not None:
        start = np.atleast_1d(np.asarray(y0, dtype=float))

    if phi.ball is not None:
        region = phi.ball
    elif kernel.kind == KernelKind.MONOMIAL:
        bound = float(np.linalg.norm(w)) + lam * phi.rho(x.size)
        region = Ball(np.zeros_like(x), max(bound, 1e-12) * (1.0 + 1e-9))
    else:
        # grad h^{-1} is 1-Lipschitz, so the minimizer is within lam rho of the mirror step
        center = kernel.grad_h_inverse(w)
        radius = lam * phi.rho(x.size) + float(np.linalg.norm(x - center))
        region = Ball(center, radius + 1e-9 * (1.0 + float(np.linalg.norm(center))))

    _, lip = kernel.mu_L_over_ball(region.center, region.radius)
    step = lam / lip
    alpha = step * phi.l1_weight
    y = region.project(start)
    for it in range(INNER_MAX_ITER):
        grad = v + (kernel.grad_h(y) - grad_hx) / lam
        y_next = _euclidean_prox_l1_ball(y - step * grad, alpha, region)
        if float(np.linalg.norm(y - y_next)) / step <= tol:
            logger.debug("inner prox converged in %d iterations", it + 1)
            return y_next
        y = y_next
    raise BregmanError(
        ErrorType.NO_CONVERGENCE,
        f"inner prox did not reach tol={tol:g} within {INNER_MAX_ITER} iterations",
    )


def subgrad_witness(kernel: KernelModel, x, y, v, lam: float) -> np.ndarray:
    """u = (grad h(x) - grad h(y))/lam - v, the element of d phi(y) certified by the prox optimality condition."""
    return (kernel.grad_h(x) - kernel.grad_h(y)) / lam - np.atleast_1d(np.asarray(v, dtype=float))


def _l1_clipped_residual(base: np.ndarray, y: np.ndarray, scaled_weight: float) -> np.ndarray:
    """Residual base + lam*u after choosing u in the l1 subdifferential coordinatewise."""
    fixed = y != 0.0
    out = base.copy()
    out[fixed] = base[fixed] + scaled_weight * np.sign(y[fixed])
    free = ~fixed
    out[free] = np.sign(base[free]) * np.maximum(np.abs(base[free]) - scaled_weight, 0.0)
    return out


def kkt_residual_check(kernel: KernelModel, phi: CompositeTerm, x, v, lam: float, y) -> float:
    """
    min over u in d phi(y) of ||lam (v + u) + grad h(y) - grad h(x)||.

    The l1 part is minimized coordinatewise; the ball normal-cone multiplier
    nu >= 0 is fitted on the coordinates where y is nonzero and then polished
    with a bounded scalar search.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    base = lam * np.atleast_1d(np.asarray(v, dtype=float)) + kernel.grad_h(y) - kernel.grad_h(x)
    scaled_weight = lam * phi.l1_weight
    if phi.ball is None or not phi.ball.on_boundary(y):
        return float(np.linalg.norm(_l1_clipped_residual(base, y, scaled_weight)))

    # lam * nu * (y - c) folded into a single multiplier.
    normal = y - phi.ball.center

    def residual(nu: float) -> float:
        return float(np.linalg.norm(_l1_clipped_residual(base + nu * normal, y, scaled_weight)))

    candidates = [0.0]
    fixed = (y != 0.0) if scaled_weight > 0 else np.ones_like(y, dtype=bool)
    nn = float(normal[fixed] @ normal[fixed])
    if nn > 0:
        shifted = base[fixed] + scaled_weight * np.sign(y[fixed])
        candidates.append(max(0.0, -float(shifted @ normal[fixed]) / nn))
    upper = 2.0 * (float(np.linalg.norm(base)) + scaled_weight * math.sqrt(y.size)) / max(
        float(np.linalg.norm(normal)), 1e-300
    ) + 1.0
    search = minimize_scalar(residual, bounds=(0.0, upper), method="bounded", options={"xatol": 1e-14})
    candidates.append(float(search.x))
    return min(residual(nu) for nu in candidates)


def prox_map(kernel: KernelModel, phi: CompositeTerm, x, v, lam: float) -> ProxResult:
    """
    Bregman proximal step argmin_y <v, y> + phi(y) + D_h(y, x)/lam.

    Zero and l1 terms use closed forms; terms with a ball go through
    prox_map_constrained_inner.

    Raises:
        BregmanError: NO_CONVERGENCE from the inner solver, DOMAIN_VIOLATION
            for monomial kernels pushed off the half-line
    """
    if not lam > 0:
        raise BregmanError(ErrorType.DEGENERATE, f"lambda must be positive, got {lam}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))

    if phi.ball is None:
        y = _prox_unconstrained(kernel, phi, x, v, lam)
        closed = True
    else:
        if kernel.kind == KernelKind.MONOMIAL:
            raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, "ball terms need a globally convex kernel")
        fast = _prox_unconstrained(kernel, phi.without_ball(), x, v, lam)
        if phi.ball.contains(fast):
            y, closed = fast, True
        else:
            logger.debug("prox left the ball, switching to the inner solver")
            y = prox_map_constrained_inner(kernel, phi, x, v, lam, use_fast_path=False, y0=phi.ball.project(fast))
            closed = False

    on_boundary = phi.ball is not None and phi.ball.distance_to_boundary(y) <= BOUNDARY_TOL
    residual = kkt_residual_check(kernel, phi, x, v, lam, y)
    if residual > 1e-9 * (1.0 + float(np.linalg.norm(v))):
        logger.warning("prox KKT residual %.3e above tolerance", residual)
    return ProxResult(
        y=y,
        u=subgrad_witness(kernel, x, y, v, lam),
        kkt_residual=residual,
        used_closed_form=closed,
        on_boundary=on_boundary,
    )
