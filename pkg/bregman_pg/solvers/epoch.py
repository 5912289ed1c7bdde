"""Epoch-bounded SARAH variants: fixed-step with travel census, averaged step with early break, and the expectation version."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from ..kernels import KernelModel
from ..mappings import gradient_mappings
from ..models import (
    Algorithm,
    Ball,
    BregmanError,
    ErrorType,
    OutputSelection,
    ProblemStructure,
    SolverConfig,
)
from ..numerics import RandomStream
from ..prox import prox_map
from ..trace_collector import RunResult, TraceCollector
from .base import (
    OUTPUT_STREAM_KEY,
    epoch_ball,
    first_samples_below,
    resolve_delta_psi,
    resolve_epochs,
    resolve_x0,
    select_output,
)
from .census import census_bounds, event_census
from .estimator import SarahEstimator

logger = logging.getLogger(__name__)


@dataclass
class EpochPlan:
    """Resolved parameters of an epoch-bounded run."""
    algorithm: Algorithm
    step: float
    gamma: float
    tau: int
    b: int
    epochs: int
    early_break: bool
    output_selection: OutputSelection
    anchor_size: Optional[Callable[[int, np.ndarray, Ball], int]] = None


def _require(problem, structure: ProblemStructure, label: str) -> None:
    if problem.structure != structure:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"{label} needs a {structure.value} problem, got {problem.name}")


def _run_epochs(problem, kernel: KernelModel, config: SolverConfig, plan: EpochPlan, params: Dict) -> RunResult:
    """Shared epoch loop: anchor, recursive estimator, ball-constrained prox, optional averaging and early break."""
    reg = kernel.regularity_constants()
    quarter = reg.delta / 4.0
    x = resolve_x0(problem, config)
    stream = RandomStream(config.seed)
    estimator = SarahEstimator(problem)
    collector = TraceCollector(params)
    collector.start_timing()
    logger.info(
        "%s: %s, step=%.4g gamma=%.4g tau=%d b=%d S=%d",
        plan.algorithm.value, problem.name, plan.step, plan.gamma, plan.tau, plan.b, plan.epochs,
    )

    reason = "epochs_done"
    error: Optional[BregmanError] = None
    try:
        for s in range(plan.epochs):
            ball = epoch_ball(kernel, x)
            collector.open_epoch(s, ball)
            phi_s = problem.phi.with_ball(ball)

            anchor_batch = None
            cost = problem.n if plan.anchor_size is None else plan.anchor_size(s, x, ball)
            if collector.samples + cost > config.max_total_samples:
                reason = "budget_exhausted"
                break
            if plan.anchor_size is not None:
                anchor_batch = problem.draw_batch(stream.substream(s, 0), cost)
            collector.add_samples(estimator.anchor(x, anchor_batch))

            length = plan.tau
            for k in range(plan.tau):
                if k > 0:
                    if collector.samples + plan.b > config.max_total_samples:
                        reason = "budget_exhausted"
                        length = k
                        break
                    batch = problem.draw_batch(stream.substream(s, k), plan.b)
                    collector.add_samples(plan.b)
                    estimator.step(batch, x)
                v = estimator.v

                realized = prox_map(kernel, phi_s, x, v, plan.step)
                exact = prox_map(kernel, phi_s, x, problem.grad_f(x), plan.step)
                dist = ball.distance_to_boundary(x)
                metrics = {
                    "dist_boundary": dist,
                    "eligible": dist >= quarter,
                    "hit_boundary": exact.on_boundary,
                    "prox_on_boundary": realized.on_boundary,
                    "norm_restricted_G": float(np.linalg.norm(x - exact.y)) / plan.step,
                }
                if config.record_mappings:
                    old, new, _ = gradient_mappings(kernel, problem.phi, problem, x, plan.step)
                    metrics["norm_G"] = float(np.linalg.norm(old))
                    metrics["norm_D"] = float(np.linalg.norm(new))
                    metrics["norm_E"] = float(np.linalg.norm(estimator.error(x)))
                collector.record(s, k, x, problem.psi(x), plan.step, **metrics)

                if plan.gamma == 1.0:
                    x = realized.y
                else:
                    x = (1.0 - plan.gamma) * x + plan.gamma * realized.y
                if plan.early_break and ball.distance_to_boundary(x) <= quarter:
                    length = k + 1
                    break
            collector.close_epoch(s, length)
            logger.debug("%s epoch %d: length %d, samples %d", plan.algorithm.value, s, length, collector.samples)
            if reason == "budget_exhausted":
                break
    except BregmanError as exc:
        logger.warning("%s stopped: %s", plan.algorithm.value, exc)
        error = exc
        reason = f"error: {exc.error_type.value}"

    collector.set_param("x_final", [float(t) for t in x])
    trace = collector.finish(reason)
    census = event_census(trace, reg.delta)

    if error is not None:
        return RunResult(success=False, error=error.error_type, trace=trace, census=census, x_out=x, message=str(error))

    x_out = select_output(trace.records, plan.output_selection, stream.substream(*OUTPUT_STREAM_KEY))
    diagnostics = {"samples_to_eps": first_samples_below(trace.records, "norm_G", config.epsilon)}
    if x_out is not None:
        old, new, _ = gradient_mappings(kernel, problem.phi, problem, x_out, plan.step)
        diagnostics["output_norm_G_sq"] = float(old @ old)
        diagnostics["output_norm_D_sq"] = float(new @ new)
    last = trace.last()
    if last is not None and last.norm_G is not None:
        diagnostics["final_norm_G_sq"] = last.norm_G ** 2
        diagnostics["final_norm_D_sq"] = last.norm_D ** 2

    bounds = census_bounds(plan.algorithm, trace.params)
    diagnostics["bounds"] = bounds
    diagnostics["bounds_applicable"] = bounds.applicable
    diagnostics["bounds_compliant"] = bounds.compliant(census)
    if not bounds.applicable:
        logger.info("%s: eps=%.3g above the accuracy condition %.3g, census bounds not checked",
                    plan.algorithm.value, config.epsilon, bounds.eps_condition)

    if reason == "budget_exhausted":
        return RunResult(
            success=False, error=ErrorType.BUDGET_EXHAUSTED, trace=trace, census=census, x_out=x_out,
            message="sample budget exhausted before the last epoch", diagnostics=diagnostics,
        )
    return RunResult(success=True, trace=trace, census=census, x_out=x_out, diagnostics=diagnostics)


def _base_params(problem, kernel: KernelModel, config: SolverConfig, algorithm: Algorithm) -> Dict:
    reg = kernel.regularity_constants()
    x0 = resolve_x0(problem, config)
    return {
        "algorithm": algorithm.value,
        "kernel": kernel.describe(),
        "n": problem.n,
        "L": problem.smad_L,
        "mu": reg.mu,
        "delta": reg.delta,
        "kappa": reg.kappa_delta,
        "epsilon": config.epsilon,
        "q": config.q,
        "seed": config.seed,
        "delta_psi": resolve_delta_psi(problem, config, x0),
    }


def alg1_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    SARAH with epoch balls and exact full-gradient anchors.

    Auto parameters: b = tau = ceil(sqrt(n)), lambda = 1/((2 kappa + 1) L),
    S = ceil(32 gap/(lambda mu tau eps)). The output is drawn from iterates
    at least delta/4 inside their epoch ball. An epoch draws n + b (tau - 1)
    samples: the anchor replaces the batch at k = 0.
    """
    _require(problem, ProblemStructure.FINITE_SUM, "alg1")
    params = _base_params(problem, kernel, config, Algorithm.ALG1)
    n, L, mu, kappa = problem.n, params["L"], params["mu"], params["kappa"]
    root_n = math.ceil(math.sqrt(n))
    tau = int(config.tau or root_n)
    b = int(config.b or root_n)
    lam_rule = 1.0 / ((2.0 * kappa + 1.0) * L)
    lam = config.lam if config.lam is not None else lam_rule
    if lam > lam_rule * (1 + 1e-12):
        logger.warning("alg1: lambda=%.4g above 1/((2 kappa + 1) L)=%.4g", lam, lam_rule)
    gap = params["delta_psi"]
    auto = None if gap is None else 32.0 * gap / (lam * mu * tau * config.epsilon)
    epochs = resolve_epochs(config, auto, n + b * (tau - 1), "alg1", epoch_steps=tau)
    params.update({"lam": lam, "tau": tau, "b": b, "epochs": epochs, "epoch_rule": "travel"})
    plan = EpochPlan(
        algorithm=Algorithm.ALG1, step=lam, gamma=1.0, tau=tau, b=b, epochs=epochs, early_break=False,
        output_selection=config.output_selection or OutputSelection.UNIFORM_INTERIOR,
    )
    return _run_epochs(problem, kernel, config, plan, params)


def alg2_step_sizes(tau: int, b: int, L: float, kappa: float):
    """eta = sqrt(2 tau)/(sqrt(7 tau) + sqrt(2 b)), gamma = min{1, sqrt(b)/(L kappa sqrt(tau))}."""
    eta = math.sqrt(2.0 * tau) / (math.sqrt(7.0 * tau) + math.sqrt(2.0 * b))
    gamma = min(1.0, math.sqrt(b) / (L * kappa * math.sqrt(tau)))
    return eta, gamma


def alg2_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    Averaged SARAH step x_{s,k+1} = (1 - gamma) x_{s,k} + gamma x_bar with early epoch break.

    An epoch ends once the iterate comes within delta/4 of the epoch
    boundary. Auto parameters: b = ceil(sqrt(n)), tau = ceil(n/b),
    S = ceil(16 gap/(tau gamma eta mu eps)).
    """
    _require(problem, ProblemStructure.FINITE_SUM, "alg2")
    params = _base_params(problem, kernel, config, Algorithm.ALG2)
    n, L, mu, kappa = problem.n, params["L"], params["mu"], params["kappa"]
    b = int(config.b or math.ceil(math.sqrt(n)))
    tau = int(config.tau or math.ceil(n / b))
    eta_rule, gamma_rule = alg2_step_sizes(tau, b, L, kappa)
    eta = config.eta if config.eta is not None else eta_rule
    gamma = min(1.0, config.gamma) if config.gamma is not None else gamma_rule
    gap = params["delta_psi"]
    auto = None if gap is None else 16.0 * gap / (tau * gamma * eta * mu * config.epsilon)
    epochs = resolve_epochs(config, auto, n + b * (tau - 1), "alg2", epoch_steps=tau)
    params.update({"eta": eta, "gamma": gamma, "tau": tau, "b": b, "epochs": epochs, "epoch_rule": "early_break"})
    plan = EpochPlan(
        algorithm=Algorithm.ALG2, step=eta, gamma=gamma, tau=tau, b=b, epochs=epochs, early_break=True,
        output_selection=config.output_selection or OutputSelection.UNIFORM_ALL,
    )
    return _run_epochs(problem, kernel, config, plan, params)


def anchor_batch_size(sigma_sq: float, mu_h: float, big_batch: float) -> int:
    """ceil(sigma^2 / mu_h * B), at least 1."""
    return max(1, math.ceil(sigma_sq / mu_h * big_batch))


def alg2_expectation_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    Averaged SARAH for expectations with a locally sized anchor batch.

    B = 320 b tau/(mu delta^2 L^2 kappa^2 q), tau = ceil(q/(eps b)),
    |anchor| = ceil(sigma^2(x_{s,0}) / mu_h(X_s) * B),
    S = ceil(256 gamma tau gap/(mu eta delta^2 q)).
    """
    _require(problem, ProblemStructure.EXPECTATION, "alg2_expectation")
    if problem.sigma_fn is None:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"{problem.name} has no variance profile")
    params = _base_params(problem, kernel, config, Algorithm.ALG2_EXPECTATION)
    L, mu, delta, kappa, q = params["L"], params["mu"], params["delta"], params["kappa"], config.q
    b = int(config.b or 1)
    tau = int(config.tau or math.ceil(q / (config.epsilon * b)))
    big_batch = 320.0 * b * tau / (mu * delta ** 2 * L ** 2 * kappa ** 2 * q)
    eta_rule, gamma_rule = alg2_step_sizes(tau, b, L, kappa)
    eta = config.eta if config.eta is not None else eta_rule
    gamma = min(1.0, config.gamma) if config.gamma is not None else gamma_rule

    anchors = {"anchor_batch_sizes": [], "anchor_mu_h": [], "anchor_sigma_sq": []}

    def size_at(s: int, x: np.ndarray, ball: Ball) -> int:
        mu_h, _ = kernel.mu_L_over_ball(ball.center, ball.radius)
        sigma_sq = problem.sigma_fn(x) ** 2
        size = anchor_batch_size(sigma_sq, mu_h, big_batch)
        if s >= 0:
            anchors["anchor_batch_sizes"].append(size)
            anchors["anchor_mu_h"].append(mu_h)
            anchors["anchor_sigma_sq"].append(sigma_sq)
        return size

    x0 = resolve_x0(problem, config)
    gap = params["delta_psi"]
    auto = None if gap is None else 256.0 * gamma * tau * gap / (mu * eta * delta ** 2 * q)
    epoch_cost = size_at(-1, x0, epoch_ball(kernel, x0)) + b * (tau - 1)
    epochs = resolve_epochs(config, auto, epoch_cost, "alg2_expectation", epoch_steps=tau)
    params.update({
        "eta": eta, "gamma": gamma, "tau": tau, "b": b, "epochs": epochs,
        "big_batch": big_batch, "epoch_rule": "early_break",
    })
    plan = EpochPlan(
        algorithm=Algorithm.ALG2_EXPECTATION, step=eta, gamma=gamma, tau=tau, b=b, epochs=epochs,
        early_break=True, output_selection=config.output_selection or OutputSelection.UNIFORM_ALL,
        anchor_size=size_at,
    )
    result = _run_epochs(problem, kernel, config, plan, params)
    result.diagnostics.update(anchors)
    return result
