"""Per-module property suites run by the `verify` subcommand."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List

import numpy as np

from ..kernels import KernelModel
from ..mappings import gradient_mappings, limiting_map
from ..models import BregmanError, SolverConfig
from ..numerics import RandomStream, ScalarRootSpec, fd_gradient, segment_norm_extrema, solve_monotone
from ..problems import make_cubic_finite_sum, make_example1, make_example2, smad_check
from ..prox import CompositeTerm, prox_map, prox_map_constrained_inner
from ..solvers import alg2_run, bpg_deterministic, tbpg_run
from .trends import fit_trend

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """One named invariant check with its worst observed residual."""
    suite: str
    name: str
    passed: bool
    max_residual: float = 0.0
    detail: str = ""


@dataclass
class VerificationReport:
    seed: int
    results: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]


def _check(suite: str, name: str, residual: float, tol: float, detail: str = "") -> CheckResult:
    return CheckResult(suite, name, bool(residual <= tol), float(residual), detail)


# -- suites --------------------------------------------------------------------

def numerics_suite(seed: int) -> List[CheckResult]:
    root = solve_monotone(lambda t: t + t ** 5, ScalarRootSpec(target=34.0, bracket_lo=0.0, bracket_hi=34.0))
    grad = fd_gradient(lambda x: 0.5 * float(x @ x), np.array([1.0, 2.0]))
    near, far = segment_norm_extrema([1.0, 1.0], [2.0, 1.0])
    first = RandomStream(seed).substream(3, 7).normal(5)
    again = RandomStream(seed).substream(3, 7).normal(5)
    return [
        _check("numerics", "root_of_t_plus_t5", abs(root - 2.0), 1e-12),
        _check("numerics", "fd_gradient_quadratic", float(np.max(np.abs(grad - [1.0, 2.0]))), 1e-8),
        _check("numerics", "segment_extrema", abs(near - math.sqrt(2)) + abs(far - math.sqrt(5)), 1e-12),
        _check("numerics", "substream_reproducible", float(np.max(np.abs(first - again))), 0.0),
    ]


def kernels_suite(seed: int, points: int = 2000, balls: int = 200) -> List[CheckResult]:
    stream = RandomStream(seed).substream(10, 0)
    results = []
    for r in (1, 2, 4, 8):
        kernel = KernelModel.polynomial(r)
        reg = kernel.regularity_constants()
        point_excess = 0.0
        for _ in range(points):
            x = stream.normal(3) * float(stream.uniform(0.0, 3.0))
            point_excess = max(point_excess, kernel.condition_number(x) - (r + 1))
        ball_excess = 0.0
        for _ in range(balls):
            center = stream.normal(3) * float(stream.uniform(0.0, 3.0))
            mu_h, L_h = kernel.mu_L_over_ball(center, reg.delta / 2.0)
            ball_excess = max(ball_excess, L_h / mu_h - reg.kappa_delta)
        w = stream.normal(3) * 5.0
        inverse_error = float(np.linalg.norm(kernel.grad_h(kernel.grad_h_inverse(w)) - w))
        x, g = stream.normal(3), stream.normal(3)
        solve_error = float(np.linalg.norm(kernel.hessian(x) @ kernel.hessian_solve(x, g) - g))
        results += [
            _check("kernels", f"pointwise_condition_r{r}", point_excess, 1e-9),
            _check("kernels", f"ball_condition_r{r}", ball_excess, 1e-9),
            _check("kernels", f"grad_h_inverse_r{r}", inverse_error, 1e-9 * (1.0 + float(np.linalg.norm(w)))),
            _check("kernels", f"hessian_solve_r{r}", solve_error, 1e-9),
        ]
    return results


def prox_suite(seed: int, instances: int = 50) -> List[CheckResult]:
    stream = RandomStream(seed).substream(11, 0)
    closed_gap = 0.0
    kkt = 0.0
    for i in range(instances):
        kernel = KernelModel.polynomial(1 + i % 4)
        x, v = stream.normal(2), stream.normal(2) * 2.0
        lam = float(stream.uniform(0.05, 1.0))
        phi = CompositeTerm.l1(float(stream.uniform(0.0, 0.5))) if i % 2 else CompositeTerm.zero()
        closed = prox_map(kernel, phi, x, v, lam).y
        generic = prox_map_constrained_inner(kernel, phi, x, v, lam, use_fast_path=False)
        closed_gap = max(closed_gap, float(np.linalg.norm(closed - generic)))
        ball_phi = CompositeTerm.l1_plus_ball(phi.l1_weight, x, 0.3) if i % 2 else CompositeTerm.ball_indicator(x, 0.3)
        kkt = max(kkt, prox_map(kernel, ball_phi, x, v, lam).kkt_residual)
    return [
        _check("prox", "closed_form_matches_inner_solver", closed_gap, 1e-8),
        _check("prox", "kkt_residual", kkt, 1e-9),
    ]


def mappings_suite(seed: int, instances: int = 100) -> List[CheckResult]:
    stream = RandomStream(seed).substream(12, 0)
    problem = make_cubic_finite_sum(8, dim=2, seed=seed)
    sandwich = 0.0
    smooth_gap = 0.0
    for i in range(instances):
        kernel = KernelModel.polynomial(1 + i % 3)
        x = stream.normal(2)
        lam = float(stream.uniform(0.01, 0.5))
        phi = CompositeTerm.l1(0.1) if i % 2 else CompositeTerm.zero()
        old, new, prox = gradient_mappings(kernel, phi, problem, x, lam)
        norm_old = float(np.linalg.norm(old))
        if norm_old > 1e-12:
            mu_h, L_h = kernel.mu_L_over_segment(x, prox.y)
            ratio = float(np.linalg.norm(new)) / norm_old
            sandwich = max(sandwich, (mu_h - ratio) / mu_h, (ratio - L_h) / L_h)
        if phi.l1_weight == 0.0:
            smooth_gap = max(smooth_gap, float(np.linalg.norm(new - problem.grad_f(x))))

    # old mapping converges to the limiting mapping at first order in lambda
    kernel = KernelModel.polynomial(2)
    orders = []
    for _ in range(10):
        x = stream.normal(2)
        target = limiting_map(kernel, problem, x)
        errors = [float(np.linalg.norm(gradient_mappings(kernel, problem.phi, problem, x, lam)[0] - target))
                  for lam in (1e-2, 1e-3, 1e-4)]
        if min(errors) > 0:
            orders.append(fit_trend([(lam, e) for lam, e in zip((1e-2, 1e-3, 1e-4), errors)], "lambda").slope)
    worst_order = min(orders) if orders else 1.0
    return [
        _check("mappings", "mapping_sandwich", sandwich, 1e-9),
        _check("mappings", "smooth_new_mapping_is_gradient", smooth_gap, 1e-9),
        _check("mappings", "limiting_map_order", 0.9 - worst_order, 0.0, f"min order {worst_order:.3f}"),
    ]


def problems_suite(seed: int) -> List[CheckResult]:
    example = make_example1(4)
    cubic = make_cubic_finite_sum(16, dim=2, seed=seed)
    results = []
    for problem in (example, cubic):
        report = smad_check(problem, problem.kernel, problem.smad_L, num_samples=100, seed=seed)
        worst = max(report.max_eig_violation, report.max_direction_violation, report.max_descent_violation)
        results.append(_check("problems", f"smad_{problem.name}", worst, 1e-9))
    return results


def solvers_suite(seed: int) -> List[CheckResult]:
    example2 = make_example2(4)
    run = bpg_deterministic(example2, example2.kernel, 1.0, max_iter=200)
    closed = max(abs(rec.x[0] - rec.k ** (1.0 / 3.0)) for rec in run.trace.records)
    unit_D = max(abs(rec.norm_D - 1.0) for rec in run.trace.records)

    example1 = make_example1(4)
    tbpg = tbpg_run(example1, example1.kernel, SolverConfig(epsilon=1e-2, max_iter=500))

    cubic = make_cubic_finite_sum(16, dim=2, seed=seed)
    config = SolverConfig(epsilon=1e-3, epochs=3, seed=seed)
    first = alg2_run(cubic, cubic.kernel, config)
    second = alg2_run(cubic, cubic.kernel, config)
    replay = max(float(np.max(np.abs(a.x - b.x))) for a, b in zip(first.trace.records, second.trace.records))
    return [
        _check("solvers", "example2_closed_form", closed, 1e-9),
        _check("solvers", "example2_new_mapping_unit", unit_D, 1e-9),
        _check("solvers", "tbpg_descent", float(tbpg.diagnostics.get("descent_violations", 1)), 0.0),
        _check("solvers", "tbpg_step_within_delta", tbpg.diagnostics.get("max_step_over_delta", math.inf) - 1.0, 1e-12),
        _check("solvers", "alg2_reproducible", replay, 0.0),
    ]


SUITES: Dict[str, Callable[[int], List[CheckResult]]] = {
    "numerics": numerics_suite,
    "kernels": kernels_suite,
    "prox": prox_suite,
    "mappings": mappings_suite,
    "problems": problems_suite,
    "solvers": solvers_suite,
}


def run_verification(suites: List[str], seed: int = 0) -> VerificationReport:
    """
    Run the named suites (all when empty).

    A suite that raises is reported as a single failed check.
    """
    names = suites or list(SUITES)
    report = VerificationReport(seed=seed)
    for name in names:
        if name not in SUITES:
            report.results.append(CheckResult(name, "unknown_suite", False, math.inf, f"expected one of {sorted(SUITES)}"))
            continue
        try:
            results = SUITES[name](seed)
        except BregmanError as exc:
            results = [CheckResult(name, "suite_error", False, math.inf, str(exc))]
        for result in results:
            if not result.passed:
                logger.warning("%s/%s failed: residual %.3e %s", result.suite, result.name, result.max_residual, result.detail)
        report.results.extend(results)
    return report
