"""Test problems: two smooth-adaptable counterexamples and cubic finite-sum / expectation instances."""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy.linalg import eigh

from .kernels import KernelModel
from .models import BregmanError, ErrorType, ProblemStructure
from .numerics import RandomStream, ScalarRootSpec, fd_hessian, solve_monotone
from .prox import CompositeTerm

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass(eq=False)
class Problem:
    """
    Composite problem min f(x) + phi(x).

    Stochastic access goes through draw_batch / batch_grad: a batch is an
    index array for finite sums and an array of samples for expectations.
    """
    name: str
    dim: int
    structure: ProblemStructure
    f: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hessian: Optional[Callable[[np.ndarray], np.ndarray]]
    phi: CompositeTerm
    smad_L: float
    kernel: KernelModel
    x0: np.ndarray
    n: int = 1
    sample_grads: Optional[Callable[[np.ndarray, Any], np.ndarray]] = None
    draw: Optional[Callable[[RandomStream, int], Any]] = None
    component_L: Optional[np.ndarray] = None
    L_max: Optional[float] = None
    sigma_fn: Optional[Callable[[np.ndarray], float]] = None
    psi_lower_bound: Optional[float] = None
    sample_region: Tuple[float, float] = (-3.0, 3.0)
    params: Dict[str, Any] = field(default_factory=dict)

    def f_value(self, x) -> float:
        return float(self.f(np.atleast_1d(np.asarray(x, dtype=float))))

    def grad_f(self, x) -> np.ndarray:
        return np.atleast_1d(self.grad(np.atleast_1d(np.asarray(x, dtype=float))))

    def psi(self, x) -> float:
        """Full objective f(x) + phi(x)."""
        return self.f_value(x) + self.phi.value(x)

    def draw_batch(self, stream: RandomStream, size: int):
        """Uniform indices with replacement (finite sum) or i.i.d. samples (expectation)."""
        if self.structure == ProblemStructure.FINITE_SUM:
            return stream.integers(self.n, size)
        if self.structure == ProblemStructure.EXPECTATION and self.draw is not None:
            return self.draw(stream, size)
        raise BregmanError(ErrorType.CONFIG_ERROR, f"problem {self.name} has no stochastic oracle")

    def batch_grad(self, x, batch) -> np.ndarray:
        """Mean of the sampled component gradients over a batch."""
        if self.sample_grads is None:
            raise BregmanError(ErrorType.CONFIG_ERROR, f"problem {self.name} has no stochastic oracle")
        return self.sample_grads(np.atleast_1d(np.asarray(x, dtype=float)), batch).mean(axis=0)

    def component_grads(self, x) -> np.ndarray:
        """All n component gradients of a finite sum, one per row."""
        if self.structure != ProblemStructure.FINITE_SUM:
            raise BregmanError(ErrorType.CONFIG_ERROR, f"problem {self.name} is not a finite sum")
        return self.sample_grads(np.atleast_1d(np.asarray(x, dtype=float)), np.arange(self.n))

    def delta_psi(self, x0=None) -> Optional[float]:
        """Psi(x0) minus the known lower bound, or None for unbounded instances."""
        if self.psi_lower_bound is None:
            return None
        start = self.x0 if x0 is None else x0
        return max(self.psi(start) - self.psi_lower_bound, 0.0)


# -- first counterexample ------------------------------------------------------

def _example1_barrier(x1: float) -> Tuple[float, float, float]:
    """b(t) = 1/q(t) with q(t) = sqrt(2) + ln(1 + t^2), and its first two derivatives."""
    q = SQRT2 + math.log1p(x1 * x1)
    dq = 2.0 * x1 / (1.0 + x1 * x1)
    d2q = 2.0 * (1.0 - x1 * x1) / (1.0 + x1 * x1) ** 2
    return 1.0 / q, -dq / q ** 2, -d2q / q ** 2 + 2.0 * dq * dq / q ** 3


def _example1_hessian(r: int, x: np.ndarray) -> np.ndarray:
    x1, x2 = float(x[0]), float(x[1])
    _, _, b2 = _example1_barrier(x1)
    h11 = b2 + r * (r - 1) * x1 ** (r - 2) * x2 * x2
    h12 = 2.0 * r * x1 ** (r - 1) * x2
    h22 = 2.0 * x1 ** r
    return np.array([[h11, h12], [h12, h22]])


@lru_cache(maxsize=None)
def _example1_smad_constant(r: int, half_width: float = 20.0, points: int = 81) -> float:
    """Twice the largest |generalized eigenvalue| of (hess f, hess h) over a grid, at least 1."""
    kernel = KernelModel.polynomial(r)
    worst = 0.0
    for x1 in np.linspace(-half_width, half_width, points):
        for x2 in np.linspace(-half_width, half_width, points):
            x = np.array([x1, x2])
            values = eigh(_example1_hessian(r, x), kernel.hessian(x), eigvals_only=True)
            worst = max(worst, float(np.max(np.abs(values))))
    return max(1.0, 2.0 * worst)


def make_example1(r: int = 4, x0=None) -> Problem:
    """
    f(x1, x2) = 1/(sqrt(2) + ln(1 + x1^2)) + x1^r x2^2 with the degree r+2 polynomial kernel.

    Starting on the x1 axis, BPG iterates stay on the axis and drift to
    infinity while the gradient decays.
    """
    if r < 4 or r % 2:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"example1 needs an even r >= 4, got {r}")

    def f(x):
        b, _, _ = _example1_barrier(float(x[0]))
        return b + float(x[0]) ** r * float(x[1]) ** 2

    def grad(x):
        x1, x2 = float(x[0]), float(x[1])
        _, b1, _ = _example1_barrier(x1)
        return np.array([b1 + r * x1 ** (r - 1) * x2 * x2, 2.0 * x1 ** r * x2])

    return Problem(
        name="example1",
        dim=2,
        structure=ProblemStructure.DETERMINISTIC,
        f=f,
        grad=grad,
        hessian=lambda x: _example1_hessian(r, x),
        phi=CompositeTerm.zero(),
        smad_L=_example1_smad_constant(r),
        kernel=KernelModel.polynomial(r),
        x0=np.array([1.0, 0.0]) if x0 is None else np.asarray(x0, dtype=float),
        psi_lower_bound=0.0,
        sample_region=(-5.0, 5.0),
        params={"r": r},
    )


def example1_escape_radius(r: int, eps: float) -> float:
    """
    The x1 > 1 where the on-axis squared gradient norm of example1 drops to eps.

    Returns 1.0 when the gradient is already below sqrt(eps) at x1 = 1.
    """
    if not eps > 0:
        raise BregmanError(ErrorType.DEGENERATE, f"eps must be positive, got {eps}")

    def squared_grad(t: float) -> float:
        return _example1_barrier(t)[1] ** 2

    if squared_grad(1.0) <= eps:
        return 1.0
    hi = 2.0
    while squared_grad(hi) > eps:
        hi *= 2.0
    spec = ScalarRootSpec(target=eps, bracket_lo=1.0, bracket_hi=hi, abs_tol=1e-3 * eps, max_iter=500)
    return solve_monotone(squared_grad, spec)


# -- second counterexample -----------------------------------------------------

def make_example2(r: int = 4) -> Problem:
    """f(x) = -x on the half-line with h(x) = x^r / r; BPG from 0 gives x_k = k^(1/(r-1))."""
    if r < 4 or r % 2:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"example2 needs an even r >= 4, got {r}")
    return Problem(
        name="example2",
        dim=1,
        structure=ProblemStructure.DETERMINISTIC,
        f=lambda x: -float(x[0]),
        grad=lambda x: np.array([-1.0]),
        hessian=lambda x: np.zeros((1, 1)),
        phi=CompositeTerm.zero(),
        smad_L=0.5,
        kernel=KernelModel.monomial(r),
        x0=np.zeros(1),
        psi_lower_bound=None,
        sample_region=(0.0, 10.0),
        params={"r": r},
    )


# -- cubic finite sum ----------------------------------------------------------

def make_cubic_finite_sum(n: int, dim: int = 2, seed: int = 0, l1_weight: float = 0.0, x0=None) -> Problem:
    """
    f(x) = (1/n) sum_i (a_i^T x - b_i)^3 / 3 with antithetic pairs (a, b), (-a, b) and b < 0.

    For even n the pairs make f bounded below with its minimum at the origin.
    The cubic terms of a pair cancel, so the average f is a convex quadratic
    plus a constant; only the components f_i are nonconvex. Odd n leaves one
    unpaired cubic, f is unbounded below and no lower bound is set.
    Every component satisfies ||hess f_i(x)|| <= L_i (1 + ||x||) with
    L_i = 2 ||a_i||^2 max(||a_i||, |b_i|), the Hessian of the r = 1 kernel.
    """
    if n < 1 or dim < 1:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"cubic_fs needs n >= 1 and dim >= 1, got n={n}, dim={dim}")
    stream = RandomStream(seed)
    rows, offsets = [], []
    for _ in range((n + 1) // 2):
        a = stream.uniform(0.5, 1.0) * stream.unit_vector(dim)
        b = -(0.5 + stream.uniform())
        rows.extend([a, -a])
        offsets.extend([b, b])
    A = np.array(rows[:n])
    b = np.array(offsets[:n])

    a_norms = np.linalg.norm(A, axis=1)
    component_L = 2.0 * a_norms ** 2 * np.maximum(a_norms, np.abs(b))
    L = float(np.sqrt(np.mean(component_L ** 2)))

    def residuals(x):
        return A @ x - b

    def sample_grads(x, idx):
        idx = np.asarray(idx, dtype=int)
        res = A[idx] @ x - b[idx]
        return (res ** 2)[:, None] * A[idx]

    def grad(x):
        return A.T @ (residuals(x) ** 2) / n

    def hessian(x):
        return 2.0 * (A.T * residuals(x)) @ A / n

    lower = float(np.mean(np.abs(b) ** 3) / 3.0) if n % 2 == 0 else None
    start = np.full(dim, 2.0 / math.sqrt(dim)) if x0 is None else np.asarray(x0, dtype=float)
    phi = CompositeTerm.l1(l1_weight) if l1_weight > 0 else CompositeTerm.zero()
    logger.debug("cubic_fs n=%d dim=%d L=%.4g L_max=%.4g", n, dim, L, float(component_L.max()))
    return Problem(
        name="cubic_fs",
        dim=dim,
        structure=ProblemStructure.FINITE_SUM,
        f=lambda x: float(np.mean(residuals(x) ** 3) / 3.0),
        grad=grad,
        hessian=hessian,
        phi=phi,
        smad_L=L,
        kernel=KernelModel.polynomial(1),
        x0=start,
        n=n,
        sample_grads=sample_grads,
        component_L=component_L,
        L_max=float(component_L.max()),
        psi_lower_bound=lower,
        params={"n": n, "dim": dim, "seed": seed, "l1_weight": l1_weight},
    )


# -- expectation instances -----------------------------------------------------

def cubic_expectation_variance(x) -> float:
    """Exact E[(grad f_xi(x) - grad f(x))^2] = 15 x^4 + 18 x^2 + 3 for Gaussian xi."""
    t = float(np.atleast_1d(x)[0])
    return 15.0 * t ** 4 + 18.0 * t ** 2 + 3.0


def make_cubic_expectation(seed: int = 0, x0=None) -> Problem:
    """
    f(x) = E[(xi1 x - xi2)^3 / 3] with xi1, xi2 standard normal.

    Odd Gaussian moments vanish, so f and its gradient are identically zero
    while the sampled gradient xi1 (xi1 x - xi2)^2 has variance
    15 x^4 + 18 x^2 + 3. The seed only labels the instance; sampling always
    uses the stream handed to draw_batch.
    """

    def draw(stream: RandomStream, size: int) -> np.ndarray:
        return stream.normal((size, 2))

    def sample_grads(x, xi):
        xi = np.asarray(xi, dtype=float)
        return (xi[:, 0] * (xi[:, 0] * x[0] - xi[:, 1]) ** 2)[:, None]

    return Problem(
        name="cubic_exp",
        dim=1,
        structure=ProblemStructure.EXPECTATION,
        f=lambda x: 0.0,
        grad=lambda x: np.zeros(1),
        hessian=lambda x: np.zeros((1, 1)),
        phi=CompositeTerm.zero(),
        smad_L=6.0 * SQRT2,
        kernel=KernelModel.polynomial(1),
        x0=np.array([2.0]) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float)),
        sample_grads=sample_grads,
        draw=draw,
        sigma_fn=lambda x: math.sqrt(cubic_expectation_variance(x)),
        psi_lower_bound=0.0,
        params={"seed": seed},
    )


def make_sampled_finite_sum(problem: Problem) -> Problem:
    """
    View a finite sum as an expectation over a uniformly drawn component.

    sigma_fn is the exact standard deviation sqrt(mean ||grad f_i - grad f||^2).
    """
    if problem.structure != ProblemStructure.FINITE_SUM:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"{problem.name} is not a finite sum")

    def sigma(x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        spread = problem.component_grads(x) - problem.grad_f(x)
        return math.sqrt(float(np.mean(np.sum(spread ** 2, axis=1))))

    return Problem(
        name=f"{problem.name}_sampled",
        dim=problem.dim,
        structure=ProblemStructure.EXPECTATION,
        f=problem.f,
        grad=problem.grad,
        hessian=problem.hessian,
        phi=problem.phi,
        smad_L=problem.smad_L,
        kernel=problem.kernel,
        x0=problem.x0.copy(),
        n=problem.n,
        sample_grads=problem.sample_grads,
        draw=lambda stream, size: stream.integers(problem.n, size),
        component_L=problem.component_L,
        L_max=problem.L_max,
        sigma_fn=sigma,
        psi_lower_bound=problem.psi_lower_bound,
        sample_region=problem.sample_region,
        params=dict(problem.params),
    )


# -- smooth adaptability certification -----------------------------------------

@dataclass
class SmadReport:
    """Sampled smooth-adaptability check of f against a kernel."""
    L: float
    num_samples: int
    max_eig_ratio: float
    max_eig_violation: float
    max_direction_violation: float
    max_descent_violation: float

    @property
    def passed(self) -> bool:
        return max(self.max_eig_violation, self.max_direction_violation, self.max_descent_violation) <= 1e-9


def _sample_point(problem: Problem, stream: RandomStream) -> np.ndarray:
    lo, hi = problem.sample_region
    return np.atleast_1d(stream.uniform(lo, hi, size=problem.dim))


def smad_check(problem: Problem, kernel: KernelModel, L: float, num_samples: int = 200, seed: int = 0) -> SmadReport:
    """
    Sample -L hess h <= hess f <= L hess h and the extended descent lemma.

    Violations are relative to the kernel side of each inequality and
    reported, never raised.
    """
    if num_samples < 1:
        raise BregmanError(ErrorType.DEGENERATE, f"num_samples must be at least 1, got {num_samples}")
    stream = RandomStream(seed)
    lo, hi = problem.sample_region
    points = [np.zeros(problem.dim)] if lo < 0.0 < hi else []
    points += [_sample_point(problem, stream) for _ in range(num_samples)]

    max_ratio = 0.0
    direction_violation = 0.0
    for x in points:
        hess_f = problem.hessian(x) if problem.hessian is not None else fd_hessian(problem.f, x)
        hess_h = kernel.hessian(x)
        values = eigh(hess_f, hess_h, eigvals_only=True)
        max_ratio = max(max_ratio, float(np.max(np.abs(values))))
        d = stream.unit_vector(problem.dim)
        curvature = float(d @ hess_h @ d)
        direction_violation = max(direction_violation, (abs(float(d @ hess_f @ d)) - L * curvature) / curvature)

    descent_violation = 0.0
    for _ in range(num_samples):
        x, y = _sample_point(problem, stream), _sample_point(problem, stream)
        gap = abs(problem.f_value(x) - problem.f_value(y) - float(problem.grad_f(y) @ (x - y)))
        bound = L * kernel.bregman_div(x, y)
        descent_violation = max(descent_violation, (gap - bound) / (1.0 + bound))

    return SmadReport(
        L=L,
        num_samples=len(points),
        max_eig_ratio=max_ratio,
        max_eig_violation=max(0.0, max_ratio - L) / L,
        max_direction_violation=max(0.0, direction_violation),
        max_descent_violation=max(0.0, descent_violation),
    )


# -- registry ------------------------------------------------------------------

PROBLEM_BUILDERS: Dict[str, Callable[..., Problem]] = {
    "example1": make_example1,
    "example2": make_example2,
    "cubic_fs": make_cubic_finite_sum,
    "cubic_exp": make_cubic_expectation,
    "cubic_fs_sampled": lambda **params: make_sampled_finite_sum(make_cubic_finite_sum(**params)),
}


def make_problem(name: str, **params) -> Problem:
    """Build a registered problem by name."""
    builder = PROBLEM_BUILDERS.get(name)
    if builder is None:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"unknown problem '{name}', expected one of {sorted(PROBLEM_BUILDERS)}")
    try:
        return builder(**params)
    except TypeError as exc:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"bad parameters for problem '{name}': {exc}") from exc
