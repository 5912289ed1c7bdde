"""Travel-controlled adaptive steps driven by a SARAH estimate, with per-epoch batch sizes from a high-probability error bound."""

import logging
import math

import numpy as np

from ..kernels import KernelModel
from ..mappings import grad_map_D
from ..models import Algorithm, BregmanError, ErrorType, EventCensus, ProblemStructure, SolverConfig
from ..numerics import RandomStream
from ..prox import prox_map
from ..trace_collector import RunResult, TraceCollector
from .base import resolve_delta_psi, resolve_x0
from .deterministic import DESCENT_TOL
from .estimator import SarahEstimator

logger = logging.getLogger(__name__)


def svr_failure_probability(q: float, s: int, tau: int) -> float:
    """p_s = 6q/(pi^2 s^2 tau) for the 1-indexed epoch s; the p_s sum to at most q/tau."""
    return 6.0 * q / (math.pi ** 2 * s ** 2 * tau)


def svr_batch_size(n: int, p_s: float, L_max: float, L: float) -> int:
    """ceil(8 ceil(sqrt(n)) (2 + 6 ln(1/p_s)) L_max^2 / L^2)."""
    return math.ceil(8 * math.ceil(math.sqrt(n)) * (2.0 + 6.0 * math.log(1.0 / p_s)) * L_max ** 2 / L ** 2)


def svr_step_size(L: float, mu: float, delta: float, kappa: float, rho: float, v_norm: float) -> float:
    """min{1/(2 kappa L), mu delta/(3 rho), mu delta/(||v|| + rho)} with empty branches dropped."""
    candidates = [0.5 / (kappa * L)]
    if rho > 0:
        candidates.append(mu * delta / (3.0 * rho))
    if v_norm + rho > 0:
        candidates.append(mu * delta / (v_norm + rho))
    return min(candidates)


def svr_averaging(L: float, kappa: float, epsilon: float, move: float) -> float:
    """gamma = min{1, (sqrt(eps)/(2 L kappa^2)) / ||grad h(x) - grad h(x_bar)||}."""
    if move <= 0:
        return 1.0
    return min(1.0, math.sqrt(epsilon) / (2.0 * L * kappa ** 2) / move)


def tbpg_svr_run(problem, kernel: KernelModel, config: SolverConfig) -> RunResult:
    """
    Adaptive-step SARAH without epoch balls or early breaks.

    x_bar = T_eta(x, v) with the travel-controlled eta, then
    x <- x + gamma (x_bar - x). Stops at the first step whose surrogate
    mapping (grad h(x) - grad h(x_bar))/eta has squared norm at most eps
    and records the exact mapping there for the 2.5 eps check.

    Returns:
        RunResult with the stopping pair (S_eps, K_eps), R_eps and the
        final exact mapping in diagnostics; BUDGET_EXHAUSTED when the
        sample budget or max_iter steps run out first
    """
    if problem.structure != ProblemStructure.FINITE_SUM:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"tbpg_svr needs a finite-sum problem, got {problem.name}")
    reg = kernel.regularity_constants()
    mu, delta, kappa = reg.mu, reg.delta, reg.kappa_delta
    L = problem.smad_L
    L_max = problem.L_max if problem.L_max is not None else L
    n = problem.n
    rho = problem.phi.rho(problem.dim)
    tau = int(config.tau or math.ceil(math.sqrt(n)))
    eps = config.epsilon
    x0 = resolve_x0(problem, config)
    x = x0.copy()

    collector = TraceCollector({
        "algorithm": Algorithm.TBPG_SVR.value, "kernel": kernel.describe(), "n": n, "tau": tau,
        "L": L, "L_max": L_max, "mu": mu, "delta": delta, "kappa": kappa, "rho": rho,
        "epsilon": eps, "q": config.q, "seed": config.seed,
        "delta_psi": resolve_delta_psi(problem, config, x0),
    })
    collector.start_timing()
    logger.info("tbpg_svr: %s, n=%d tau=%d eps=%.3g q=%.3g", problem.name, n, tau, eps, config.q)

    stream = RandomStream(config.seed)
    estimator = SarahEstimator(problem)
    error_bound = math.sqrt(eps) / (2.0 * kappa)
    max_step_ratio = 0.0
    descent_violations = 0
    stop = None
    batch_sizes = []
    steps = 0
    exhausted = False
    reason = "budget_exhausted"
    try:
        s = 0
        while stop is None and not exhausted and steps < config.max_iter:
            p_s = svr_failure_probability(config.q, s + 1, tau)
            b_s = svr_batch_size(n, p_s, L_max, L)
            full_batch = b_s >= n
            batch_sizes.append(n if full_batch else b_s)
            if collector.samples + n > config.max_total_samples:
                break
            collector.add_samples(estimator.anchor(x))

            length = tau
            for k in range(tau):
                if k > 0:
                    cost = n if full_batch else b_s
                    if collector.samples + cost > config.max_total_samples:
                        exhausted = True
                        length = k
                        break
                    batch = np.arange(n) if full_batch else problem.draw_batch(stream.substream(s, k), b_s)
                    collector.add_samples(cost)
                    estimator.step(batch, x)
                v = estimator.v

                eta = svr_step_size(L, mu, delta, kappa, rho, float(np.linalg.norm(v)))
                x_bar = prox_map(kernel, problem.phi, x, v, eta).y
                move = float(np.linalg.norm(kernel.grad_h(x) - kernel.grad_h(x_bar)))
                surrogate = move / eta
                err = float(np.linalg.norm(v - problem.grad_f(x)))
                psi_x = problem.psi(x)
                collector.record(
                    s, k, x, psi_x, eta,
                    norm_D_surrogate=surrogate,
                    norm_E=err,
                    estimator_full_batch=full_batch,
                )
                step_len = float(np.linalg.norm(x_bar - x))
                max_step_ratio = max(max_step_ratio, step_len / delta)
                if surrogate ** 2 <= eps:
                    stop = (s, k, eta, err)
                    length = k + 1
                    break

                gamma = svr_averaging(L, kappa, eps, move)
                x_next = x + gamma * (x_bar - x)
                if err <= error_bound:
                    required = psi_x - math.sqrt(eps) * float(np.linalg.norm(x_next - x)) / (4.0 * kappa)
                    if problem.psi(x_next) > required + DESCENT_TOL * (1.0 + abs(psi_x)):
                        descent_violations += 1
                        logger.warning("tbpg_svr descent check failed at (s=%d, k=%d)", s, k)
                x = x_next
                steps += 1
                if steps >= config.max_iter:
                    length = k + 1
                    break
            collector.close_epoch(s, length)
            s += 1
        if stop is not None:
            reason = "eps_reached"
    except BregmanError as exc:
        logger.warning("tbpg_svr stopped: %s", exc)
        trace = collector.finish(f"error: {exc.error_type.value}")
        return RunResult(success=False, error=exc.error_type, trace=trace, x_out=x, message=str(exc))

    collector.set_param("batch_sizes", batch_sizes)
    trace = collector.finish(reason)
    travel = max((float(np.linalg.norm(rec.x - x0)) for rec in trace.records), default=0.0)
    diagnostics = {
        "max_step_over_delta": max_step_ratio,
        "descent_violations": descent_violations,
        "batch_sizes": batch_sizes,
    }
    census = EventCensus(R_eps=travel, epochs=len(trace.epoch_lengths), steps=len(trace))
    if stop is None:
        return RunResult(
            success=False, error=ErrorType.BUDGET_EXHAUSTED, trace=trace, census=census, x_out=x,
            message=f"surrogate mapping above eps={eps:g} when the budget ran out", diagnostics=diagnostics,
        )

    s_eps, k_eps, eta, err = stop
    exact = grad_map_D(kernel, problem.phi, problem, x, eta)
    census.T_eps = len(trace) - 1
    diagnostics.update({
        "stopping_pair": [s_eps, k_eps],
        "final_norm_D_sq": float(exact @ exact),
        "final_norm_D_surrogate_sq": trace.last().norm_D_surrogate ** 2,
        "error_within_bound": err <= error_bound,
        "samples_to_eps": trace.last().samples,
    })
    logger.info(
        "tbpg_svr: stop at (s=%d, k=%d), ||D||^2=%.3g, R_eps=%.4g, samples %d",
        s_eps, k_eps, diagnostics["final_norm_D_sq"], travel, trace.last().samples,
    )
    return RunResult(success=True, trace=trace, census=census, x_out=x.copy(), diagnostics=diagnostics)
