"""Parameter resolution, epoch geometry and output selection shared by the solvers."""

import logging
import math
from typing import List, Optional

import numpy as np

from ..kernels import KernelModel
from ..models import Ball, BregmanError, ErrorType, KernelKind, OutputSelection, SolverConfig
from ..numerics import RandomStream
from ..trace_collector import IterRecord

logger = logging.getLogger(__name__)

# Stream key reserved for output selection; batch keys (s, k) never reach it.
OUTPUT_STREAM_KEY = (2 ** 31, 0)


def resolve_x0(problem, config: SolverConfig) -> np.ndarray:
    start = problem.x0 if config.x0 is None else config.x0
    x0 = np.atleast_1d(np.asarray(start, dtype=float)).copy()
    if x0.size != problem.dim:
        raise BregmanError(ErrorType.CONFIG_ERROR, f"x0 has dimension {x0.size}, problem {problem.name} has {problem.dim}")
    return x0


def resolve_delta_psi(problem, config: SolverConfig, x0: np.ndarray) -> Optional[float]:
    """Psi(x0) minus the configured or instance lower bound; None when neither exists."""
    if config.psi_lower_bound is not None:
        return max(problem.psi(x0) - config.psi_lower_bound, 0.0)
    return problem.delta_psi(x0)


def epoch_radius(kernel: KernelModel, anchor: np.ndarray) -> float:
    """max{1/(2r), ||anchor||/(2r+1)}, keeping the ball inside the conditioned regime."""
    if kernel.kind == KernelKind.QUADRATIC:
        return math.inf
    if kernel.kind != KernelKind.POLYNOMIAL:
        raise BregmanError(ErrorType.UNSUPPORTED_KERNEL, f"no epoch bound for {kernel.describe()}")
    r = kernel.r
    return max(1.0 / (2 * r), float(np.linalg.norm(anchor)) / (2 * r + 1))


def epoch_ball(kernel: KernelModel, anchor: np.ndarray) -> Ball:
    return Ball(anchor.copy(), epoch_radius(kernel, anchor))


def resolve_epochs(
    config: SolverConfig,
    auto_epochs: Optional[float],
    epoch_cost: int,
    label: str,
    epoch_steps: int = 1,
) -> int:
    """
    Number of epochs S.

    An explicit S that does not fit the sample budget is an error; an auto S
    is capped by the budget with a warning. Without a gap estimate (no
    lower bound on Psi) the run is limited to max_iter inner steps, i.e.
    max_iter // epoch_steps epochs, and by the budget.
    """
    affordable = config.max_total_samples // max(epoch_cost, 1)
    if config.epochs is not None:
        if config.epochs * epoch_cost > config.max_total_samples:
            raise BregmanError(
                ErrorType.INSUFFICIENT_BUDGET,
                f"{label}: S={config.epochs} epochs need {config.epochs * epoch_cost} samples, "
                f"budget is {config.max_total_samples}",
            )
        return int(config.epochs)
    if affordable < 1:
        raise BregmanError(
            ErrorType.INSUFFICIENT_BUDGET,
            f"{label}: one epoch costs {epoch_cost} samples, budget is {config.max_total_samples}",
        )
    if auto_epochs is None:
        epochs = min(affordable, max(1, config.max_iter // max(epoch_steps, 1)))
        logger.warning(
            "%s: no objective gap available (set epochs or psi_lower_bound), running %d epochs", label, epochs
        )
        return int(epochs)
    epochs = max(1, math.ceil(auto_epochs))
    if epochs > affordable:
        logger.warning("%s: auto S=%d capped to %d by the sample budget", label, epochs, affordable)
        return int(affordable)
    return epochs


def select_output(records: List[IterRecord], rule: OutputSelection, stream: RandomStream) -> Optional[np.ndarray]:
    """Uniform draw over all records or over records flagged delta/4-away from their epoch boundary."""
    if not records:
        return None
    pool = records
    if rule == OutputSelection.UNIFORM_INTERIOR:
        pool = [rec for rec in records if rec.eligible]
        if not pool:
            logger.warning("no iterate is delta/4 away from its epoch boundary, drawing from all iterates")
            pool = records
    return pool[stream.choice(len(pool))].x.copy()


def first_samples_below(records: List[IterRecord], attr: str, epsilon: float) -> Optional[int]:
    """Samples spent when the squared record attribute first drops to epsilon."""
    for rec in records:
        value = getattr(rec, attr)
        if value is not None and value * value <= epsilon:
            return rec.samples
    return None
