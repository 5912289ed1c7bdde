"""Solver runs keyed by algorithm name."""

from typing import Callable, Dict

from ..models import Algorithm, BregmanError, ErrorType
from ..trace_collector import RunResult
from .adaptive import tbpg_svr_run
from .census import CensusBounds, census_bounds, event_census
from .deterministic import bpg_deterministic, bpg_run, tbpg_run
from .epoch import alg1_run, alg2_expectation_run, alg2_run
from .estimator import SarahEstimator, sarah_step
from .flow import bpg_flow_run

SOLVERS: Dict[Algorithm, Callable[..., RunResult]] = {
    Algorithm.BPG: bpg_run,
    Algorithm.ALG1: alg1_run,
    Algorithm.ALG2: alg2_run,
    Algorithm.ALG2_EXPECTATION: alg2_expectation_run,
    Algorithm.TBPG: tbpg_run,
    Algorithm.TBPG_SVR: tbpg_svr_run,
    Algorithm.FLOW: bpg_flow_run,
}


def run_solver(algorithm: Algorithm, problem, kernel, config) -> RunResult:
    """Dispatch to the run function of an algorithm."""
    try:
        solver = SOLVERS[algorithm]
    except KeyError:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"unknown algorithm {algorithm}") from None
    return solver(problem, kernel, config)


__all__ = [
    "SOLVERS",
    "run_solver",
    "bpg_deterministic",
    "bpg_run",
    "tbpg_run",
    "alg1_run",
    "alg2_run",
    "alg2_expectation_run",
    "tbpg_svr_run",
    "bpg_flow_run",
    "SarahEstimator",
    "sarah_step",
    "event_census",
    "census_bounds",
    "CensusBounds",
]
