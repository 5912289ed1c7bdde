"""Deterministic Bregman proximal gradient with a fixed step and with the travel-controlled adaptive step."""

import logging
import math
from typing import Optional

import numpy as np

from ..kernels import KernelModel
from ..mappings import dist_to_subdifferential, gradient_mappings
from ..models import BregmanError, ErrorType, EventCensus, SolverConfig, TermKind
from ..trace_collector import RunResult, TraceCollector
from .base import first_samples_below, resolve_delta_psi, resolve_x0

logger = logging.getLogger(__name__)

DESCENT_TOL = 1e-10


def bpg_deterministic(
    problem,
    kernel: KernelModel,
    lam: float,
    x0=None,
    max_iter: int = 1000,
    record_mappings: bool = True,
) -> RunResult:
    """
    x_{k+1} = T_lam(x_k, grad f(x_k)).

    Records x_0 .. x_K with both mapping norms; stops early at a fixed point.

    Args:
        problem: Problem with an exact gradient
        kernel: Bregman kernel
        lam: Step size, at most 1/L for monotone descent
        x0: Start point (problem default if None)
        max_iter: Number of steps
        record_mappings: Store ||G|| and ||D|| per record

    Returns:
        RunResult; a failing prox gives success=False and the partial trace
    """
    if not lam > 0:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"lambda must be positive, got {lam}")
    if lam > 1.0 / problem.smad_L * (1 + 1e-12):
        logger.warning("step %.4g exceeds 1/L=%.4g, descent is not guaranteed", lam, 1.0 / problem.smad_L)
    x = np.atleast_1d(np.asarray(problem.x0 if x0 is None else x0, dtype=float)).copy()
    collector = TraceCollector({"algorithm": "bpg", "lam": lam, "max_iter": max_iter, "kernel": kernel.describe()})
    collector.start_timing()
    logger.info("bpg: %s, kernel %s, lam=%.4g, max_iter=%d", problem.name, kernel.describe(), lam, max_iter)

    reason = "max_iter"
    try:
        for k in range(max_iter + 1):
            old, new, prox = gradient_mappings(kernel, problem.phi, problem, x, lam)
            collector.add_samples(1)
            metrics = {}
            if record_mappings:
                metrics = {"norm_G": float(np.linalg.norm(old)), "norm_D": float(np.linalg.norm(new))}
            collector.record(0, k, x, problem.psi(x), lam, **metrics)
            if k == max_iter:
                break
            if np.array_equal(prox.y, x):
                reason = "fixed_point"
                break
            x = prox.y
    except BregmanError as exc:
        logger.warning("bpg stopped: %s", exc)
        trace = collector.finish(f"error: {exc.error_type.value}")
        return RunResult(success=False, error=exc.error_type, trace=trace, x_out=x, message=str(exc))

    trace = collector.finish(reason)
    last = trace.last()
    diagnostics = {
        "final_norm_G_sq": None if last.norm_G is None else last.norm_G ** 2,
        "final_norm_D_sq": None if last.norm_D is None else last.norm_D ** 2,
    }
    census = EventCensus(steps=len(trace) - 1, epochs=1)
    return RunResult(success=True, trace=trace, census=census, x_out=x.copy(), diagnostics=diagnostics)


def bpg_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """Config-driven wrapper of bpg_deterministic; auto lambda is 1/(2L)."""
    lam = config.lam if config.lam is not None else 0.5 / problem.smad_L
    result = bpg_deterministic(
        problem, kernel, lam, resolve_x0(problem, config), config.max_iter, config.record_mappings
    )
    result.diagnostics["samples_to_eps"] = first_samples_below(result.trace.records, "norm_G", config.epsilon)
    return result


def tbpg_step_size(L: float, mu: float, delta: float, rho: float, grad_norm: float) -> float:
    """min{1/(2L), mu delta/(3 rho), mu delta/(||grad|| + rho)} with empty branches dropped."""
    candidates = [0.5 / L]
    if rho > 0:
        candidates.append(mu * delta / (3.0 * rho))
    if grad_norm + rho > 0:
        candidates.append(mu * delta / (grad_norm + rho))
    return min(candidates)


def travel_bound(L: float, mu: float, delta: float, rho: float, kappa: float, gap: float, epsilon: float) -> float:
    """(4/3) sqrt(max{1, 3 rho/(2 L mu delta)}) sqrt(kappa) gap / sqrt(epsilon)."""
    factor = max(1.0, 3.0 * rho / (2.0 * L * mu * delta))
    return (4.0 / 3.0) * math.sqrt(factor) * math.sqrt(kappa) * gap / math.sqrt(epsilon)


def tbpg_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    Adaptive-step BPG that keeps successive iterates delta-close.

    Runs until ||D(x_k)||^2 <= epsilon with the step of that iteration and
    reports the hitting index T_eps, the travel R_eps and the per-step
    checks: ||x_{k+1} - x_k|| <= delta and
    Psi(x_{k+1}) <= Psi(x_k) - (3 L mu_h([x_k, x_{k+1}])/2) ||x_{k+1} - x_k||^2.
    """
    reg = kernel.regularity_constants()
    L = problem.smad_L
    rho = problem.phi.rho(problem.dim)
    x0 = resolve_x0(problem, config)
    x = x0.copy()
    collector = TraceCollector({
        "algorithm": "tbpg", "epsilon": config.epsilon, "L": L, "mu": reg.mu,
        "delta": reg.delta, "kappa": reg.kappa_delta, "rho": rho, "kernel": kernel.describe(),
    })
    collector.start_timing()
    logger.info("tbpg: %s, kernel %s, eps=%.3g, rho=%.3g", problem.name, kernel.describe(), config.epsilon, rho)

    path_length = 0.0
    max_distance = 0.0
    max_step_ratio = 0.0
    descent_violations = 0
    hit: Optional[int] = None
    termination = {}
    try:
        for k in range(config.max_iter + 1):
            grad_norm = float(np.linalg.norm(problem.grad_f(x)))
            lam = tbpg_step_size(L, reg.mu, reg.delta, rho, grad_norm)
            old, new, prox = gradient_mappings(kernel, problem.phi, problem, x, lam)
            collector.add_samples(1)
            norm_D = float(np.linalg.norm(new))
            psi_x = problem.psi(x)
            collector.record(0, k, x, psi_x, lam, norm_G=float(np.linalg.norm(old)), norm_D=norm_D)
            y = prox.y
            if norm_D ** 2 <= config.epsilon:
                hit = k
                if problem.phi.kind in (TermKind.ZERO, TermKind.L1):
                    termination = {
                        "termination_dist_sq": dist_to_subdifferential(problem, problem.phi, y) ** 2,
                        "termination_bound": (1.0 + reg.kappa_delta / 2.0) ** 2 * config.epsilon,
                    }
                break
            if k == config.max_iter:
                break

            step = float(np.linalg.norm(y - x))
            max_step_ratio = max(max_step_ratio, step / reg.delta)
            mu_seg, _ = kernel.mu_L_over_segment(x, y)
            required = psi_x - 1.5 * L * mu_seg * step ** 2
            if problem.psi(y) > required + DESCENT_TOL * (1.0 + abs(psi_x)):
                descent_violations += 1
                logger.warning("tbpg descent check failed at k=%d", k)
            path_length += step
            x = y
            max_distance = max(max_distance, float(np.linalg.norm(x - x0)))
    except BregmanError as exc:
        logger.warning("tbpg stopped: %s", exc)
        trace = collector.finish(f"error: {exc.error_type.value}")
        return RunResult(success=False, error=exc.error_type, trace=trace, x_out=x, message=str(exc))

    reached = hit is not None
    trace = collector.finish("eps_reached" if reached else "budget_exhausted")
    gap = resolve_delta_psi(problem, config, x0)
    horizon_gap = problem.psi(x0) - problem.psi(x)
    bound = travel_bound(
        L, reg.mu, reg.delta, rho, reg.kappa_delta, gap if gap is not None else horizon_gap, config.epsilon
    )
    diagnostics = {
        "path_length": path_length,
        "travel_bound": bound,
        "travel_within_bound": path_length <= bound,
        "max_step_over_delta": max_step_ratio,
        "descent_violations": descent_violations,
        "horizon_gap": horizon_gap,
        "final_norm_D_sq": trace.last().norm_D ** 2,
        "samples_to_eps": trace.last().samples if reached else None,
        **termination,
    }
    census = EventCensus(R_eps=max_distance, T_eps=hit, epochs=1, steps=len(trace) - 1)
    if not reached:
        return RunResult(
            success=False, error=ErrorType.BUDGET_EXHAUSTED, trace=trace, census=census, x_out=x,
            message=f"||D||^2 > {config.epsilon:g} after {config.max_iter} steps", diagnostics=diagnostics,
        )
    logger.info("tbpg: T_eps=%d, R_eps=%.4g, path %.4g <= bound %.4g", hit, max_distance, path_length, bound)
    return RunResult(success=True, trace=trace, census=census, x_out=x.copy(), diagnostics=diagnostics)
