"""Brute-force reference checks: grid prox, exhaustive SARAH enumeration, Monte Carlo moments and finite differences."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from ..kernels import KernelModel
from ..models import BregmanError
from ..numerics import RandomStream, fd_gradient, fd_hessian
from ..problems import (
    cubic_expectation_variance,
    make_cubic_expectation,
    make_cubic_finite_sum,
    make_example1,
)
from ..prox import CompositeTerm, prox_map
from ..solvers.estimator import sarah_step

logger = logging.getLogger(__name__)

GRID_PROX_TOL = 1e-3
SARAH_TOL = 1e-12
FD_TOL = 1e-5
MC_SIGMAS = 5.0


@dataclass
class OracleResult:
    """Outcome of one oracle."""
    name: str
    passed: bool
    max_residual: float
    detail: str = ""


@dataclass
class OracleReport:
    """All oracle outcomes of one seed."""
    seed: int
    results: List[OracleResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> List[OracleResult]:
        return [r for r in self.results if not r.passed]


# -- grid prox -----------------------------------------------------------------

def _prox_objective_grid(kernel: KernelModel, phi: CompositeTerm, x, v, lam: float, ys: np.ndarray) -> np.ndarray:
    """<v, y> + phi(y) + D_h(y, x)/lam for rows of ys; +inf outside the ball."""
    norms = np.linalg.norm(ys, axis=1)
    h_y = 0.5 * norms ** 2 + norms ** (kernel.r + 2) / (kernel.r + 2)
    div = h_y - kernel.h_value(x) - (ys - x) @ kernel.grad_h(x)
    values = ys @ v + phi.l1_weight * np.abs(ys).sum(axis=1) + div / lam
    outside = np.linalg.norm(ys - phi.ball.center, axis=1) > phi.ball.radius
    values[outside] = np.inf
    return values


def grid_prox_minimizer(kernel: KernelModel, phi: CompositeTerm, x, v, lam: float, points: int = 201) -> np.ndarray:
    """Two-level grid search over the bounding box of the ball (2D polynomial kernels)."""
    center, radius = phi.ball.center, phi.ball.radius
    lo, hi = center - radius, center + radius
    best = center
    for _ in range(3):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(2)]
        ys = np.array(np.meshgrid(*axes, indexing="ij")).reshape(2, -1).T
        values = _prox_objective_grid(kernel, phi, x, v, lam, ys)
        best = ys[int(np.argmin(values))]
        width = (hi - lo) / (points - 1)
        lo, hi = best - 2 * width, best + 2 * width
    return best


def grid_prox_oracle(seed: int, instances: int = 20) -> OracleResult:
    """Constrained polynomial-kernel prox against grid search in 2D."""
    stream = RandomStream(seed).substream(0, 0)
    kernel = KernelModel.polynomial(2)
    worst = 0.0
    for _ in range(instances):
        x = stream.uniform(-1.0, 1.0, size=2)
        v = stream.uniform(-3.0, 3.0, size=2)
        lam = float(stream.uniform(0.1, 1.0))
        radius = float(stream.uniform(0.2, 0.6))
        weight = float(stream.uniform(0.0, 0.5))
        phi = CompositeTerm.l1_plus_ball(weight, x, radius) if weight > 0.25 else CompositeTerm.ball_indicator(x, radius)
        y = prox_map(kernel, phi, x, v, lam).y
        reference = grid_prox_minimizer(kernel, phi, x, v, lam)
        worst = max(worst, float(np.linalg.norm(y - reference)))
    return OracleResult("grid_prox", worst <= GRID_PROX_TOL, worst, f"{instances} instances")


# -- exhaustive SARAH enumeration ----------------------------------------------

def _batches(n: int, b: int):
    return [np.array(batch) for batch in itertools.product(range(n), repeat=b)]


def sarah_martingale_oracle(seed: int, n: int = 6, b: int = 2) -> OracleResult:
    """E[v_k - grad f(x_k) | past] = v_{k-1} - grad f(x_{k-1}) over all batches with replacement."""
    problem = make_cubic_finite_sum(n, dim=2, seed=seed)
    stream = RandomStream(seed).substream(1, 0)
    x_prev = stream.uniform(-1.0, 1.0, size=2)
    x_cur = stream.uniform(-1.0, 1.0, size=2)
    v_prev = problem.grad_f(x_prev) + stream.normal(2)
    batches = _batches(n, b)
    mean_error = np.mean([sarah_step(problem, v_prev, batch, x_cur, x_prev) for batch in batches], axis=0) - problem.grad_f(x_cur)
    residual = float(np.linalg.norm(mean_error - (v_prev - problem.grad_f(x_prev))))
    return OracleResult("sarah_martingale", residual <= SARAH_TOL, residual, f"n={n}, b={b}, {len(batches)} batches")


def sarah_variance_oracle(seed: int, n: int = 4, b: int = 2, tau: int = 3, step: float = 0.1) -> OracleResult:
    """
    E||v_k - grad f(x_k)||^2 <= (1/(b n)) E sum_j sum_i ||grad f_i(x_{j+1}) - grad f_i(x_j)||^2.

    Every batch sequence of an epoch is enumerated; the iterates follow
    Euclidean gradient steps with the estimate, so they depend on the batches.
    """
    problem = make_cubic_finite_sum(n, dim=2, seed=seed)
    x0 = RandomStream(seed).substream(2, 0).uniform(-1.0, 1.0, size=2)
    batches = _batches(n, b)
    lhs, rhs = [], []
    for sequence in itertools.product(batches, repeat=tau - 1):
        x = x0.copy()
        v = problem.grad_f(x)
        spread = 0.0
        x_next = x - step * v
        for batch in sequence:
            diffs = problem.component_grads(x_next) - problem.component_grads(x)
            spread += float(np.sum(diffs ** 2))
            v = sarah_step(problem, v, batch, x_next, x)
            x, x_next = x_next, x_next - step * v
        error = v - problem.grad_f(x)
        lhs.append(float(error @ error))
        rhs.append(spread / (b * n))
    excess = float(np.mean(lhs) - np.mean(rhs))
    return OracleResult(
        "sarah_variance", excess <= SARAH_TOL, max(excess, 0.0),
        f"n={n}, b={b}, tau={tau}, {len(lhs)} sequences",
    )


# -- Monte Carlo moments -------------------------------------------------------

def cubic_moments_oracle(seed: int, samples: int = 200_000) -> OracleResult:
    """Sample mean 0 and variance 15x^4 + 18x^2 + 3 of the cubic expectation gradient."""
    problem = make_cubic_expectation(seed)
    worst = 0.0
    for i, x in enumerate((0.0, 0.5, 1.0)):
        draws = problem.draw_batch(RandomStream(seed).substream(3, i), samples)
        grads = problem.sample_grads(np.array([x]), draws)[:, 0]
        variance = cubic_expectation_variance(x)
        mean_z = abs(float(grads.mean())) / math.sqrt(variance / samples)
        # the sample variance has standard error of order the fourth-moment spread
        var_err = abs(float(grads.var()) - variance) / (float(np.std(grads ** 2)) / math.sqrt(samples))
        worst = max(worst, mean_z, var_err)
    return OracleResult("cubic_moments", worst <= MC_SIGMAS, worst, f"{samples} samples, in standard errors")


# -- finite differences --------------------------------------------------------

def fd_oracle(seed: int, points: int = 10) -> OracleResult:
    """Analytic gradients and Hessians of problems and kernels against central differences."""
    stream = RandomStream(seed).substream(4, 0)
    example = make_example1(4)
    cubic = make_cubic_finite_sum(8, dim=3, seed=seed)
    kernel = KernelModel.polynomial(3)
    worst = 0.0
    for _ in range(points):
        x2 = stream.uniform(-1.5, 1.5, size=2)
        x3 = stream.uniform(-1.5, 1.5, size=3)
        checks = [
            (fd_gradient(example.f_value, x2), example.grad_f(x2)),
            (fd_gradient(cubic.f_value, x3), cubic.grad_f(x3)),
            (fd_gradient(kernel.h_value, x3), kernel.grad_h(x3)),
            (fd_hessian(kernel.h_value, x3), kernel.hessian(x3)),
            (fd_hessian(cubic.f_value, x3), cubic.hessian(x3)),
        ]
        for numeric, exact in checks:
            worst = max(worst, float(np.max(np.abs(numeric - exact)) / (1.0 + np.max(np.abs(exact)))))
    return OracleResult("finite_differences", worst <= FD_TOL, worst, f"{points} points")


ORACLES: List[Callable[[int], OracleResult]] = [
    grid_prox_oracle,
    sarah_martingale_oracle,
    sarah_variance_oracle,
    cubic_moments_oracle,
    fd_oracle,
]


def oracle_suite(seed: int = 0) -> OracleReport:
    """Run every oracle; failures and numerical errors are reported, never raised."""
    report = OracleReport(seed=seed)
    for oracle in ORACLES:
        try:
            result = oracle(seed)
        except BregmanError as exc:
            result = OracleResult(oracle.__name__, False, math.inf, str(exc))
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, "oracle %s: passed=%s residual=%.3e", result.name, result.passed, result.max_residual)
        report.results.append(result)
    return report
