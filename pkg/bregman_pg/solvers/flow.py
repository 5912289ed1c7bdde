"""Continuation flow dx/dt = -[hess h(x)]^{-1} grad f(x), the vanishing-step limit of Bregman gradient descent."""

import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from ..kernels import KernelModel
from ..models import Algorithm, BregmanError, ErrorType, EventCensus, SolverConfig, TermKind
from ..trace_collector import RunResult, TraceCollector
from .base import resolve_delta_psi, resolve_x0

logger = logging.getLogger(__name__)

FLOW_RTOL = 1e-8
FLOW_ATOL = 1e-10


def flow_travel_bound(kappa0: float, gap: float, epsilon: float) -> float:
    """sqrt(kappa0) gap / sqrt(eps): arc length before ||grad f||^2 first reaches eps."""
    return math.sqrt(kappa0) * gap / math.sqrt(epsilon)


def bpg_flow_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    Integrate the limiting-map flow until ||grad f(x(t))||^2 = eps.

    The state carries the arc length as an extra coordinate. The horizon is
    t in [0, config.max_iter].

    Returns:
        RunResult with hitting_time, arc_length and travel_bound in
        diagnostics; BUDGET_EXHAUSTED when the event does not fire
    """
    if problem.phi.kind != TermKind.ZERO:
        raise BregmanError(ErrorType.UNSUPPORTED_TERM, "the continuation flow is defined for smooth problems only")
    x0 = resolve_x0(problem, config)
    dim = x0.size
    eps = config.epsilon
    kappa0 = kernel.global_condition_bound()
    t_max = float(config.max_iter)

    collector = TraceCollector({
        "algorithm": Algorithm.FLOW.value, "kernel": kernel.describe(), "epsilon": eps,
        "kappa0": kappa0, "t_max": t_max, "seed": config.seed,
    })
    collector.start_timing()
    logger.info("flow: %s, kernel %s, eps=%.3g, t_max=%g", problem.name, kernel.describe(), eps, t_max)

    def rhs(t, state):
        direction = kernel.hessian_solve(state[:dim], problem.grad_f(state[:dim]))
        return np.concatenate([-direction, [np.linalg.norm(direction)]])

    def reached(t, state):
        grad = problem.grad_f(state[:dim])
        return float(grad @ grad) - eps

    reached.terminal = True
    reached.direction = -1

    grad0 = problem.grad_f(x0)
    try:
        if float(grad0 @ grad0) <= eps:
            times, states, hit = np.array([0.0]), np.concatenate([x0, [0.0]])[:, None], 0.0
            evaluations = 1
        else:
            sol = solve_ivp(
                rhs, (0.0, t_max), np.concatenate([x0, [0.0]]),
                method="RK45", events=reached, rtol=FLOW_RTOL, atol=FLOW_ATOL,
            )
            if sol.status == -1:
                raise BregmanError(ErrorType.NO_CONVERGENCE, f"flow integration failed: {sol.message}")
            times, states = sol.t, sol.y
            hit = float(sol.t_events[0][0]) if sol.t_events[0].size else None
            evaluations = sol.nfev
    except BregmanError as exc:
        logger.warning("flow stopped: %s", exc)
        trace = collector.finish(f"error: {exc.error_type.value}")
        return RunResult(success=False, error=exc.error_type, trace=trace, x_out=x0, message=str(exc))

    collector.add_samples(evaluations)
    for k, (t, state) in enumerate(zip(times, states.T)):
        x = state[:dim]
        grad = problem.grad_f(x)
        collector.record(
            0, k, x, problem.psi(x), t,
            norm_G=float(np.linalg.norm(kernel.hessian_solve(x, grad))),
            norm_D=float(np.linalg.norm(grad)),
        )

    trace = collector.finish("eps_reached" if hit is not None else "budget_exhausted")
    x_end = states[:dim, -1].copy()
    arc = float(states[dim, -1])
    gap = resolve_delta_psi(problem, config, x0)
    horizon_gap = problem.psi(x0) - problem.psi(x_end)
    bound = flow_travel_bound(kappa0, gap if gap is not None else horizon_gap, eps)
    diagnostics = {
        "hitting_time": hit,
        "arc_length": arc,
        "travel_bound": bound,
        "travel_within_bound": arc <= bound * (1.0 + 1e-6),
        "horizon_gap": horizon_gap,
        "final_norm_D_sq": trace.last().norm_D ** 2,
    }
    travel = max(float(np.linalg.norm(rec.x - x0)) for rec in trace.records)
    census = EventCensus(R_eps=travel, epochs=1, steps=len(trace) - 1)
    if hit is None:
        return RunResult(
            success=False, error=ErrorType.BUDGET_EXHAUSTED, trace=trace, census=census, x_out=x_end,
            message=f"||grad f||^2 > {eps:g} up to t={t_max:g}", diagnostics=diagnostics,
        )
    logger.info("flow: hitting time %.4g, arc length %.4g <= bound %.4g", hit, arc, bound)
    return RunResult(success=True, trace=trace, census=census, x_out=x_end, diagnostics=diagnostics)
