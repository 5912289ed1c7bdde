"""Recursive SARAH gradient estimator."""

from typing import Optional

import numpy as np

from ..models import BregmanError, ErrorType, ProblemStructure


def sarah_step(problem, v_prev: np.ndarray, batch, x_cur, x_prev) -> np.ndarray:
    """
    v = v_prev + mean_{i in batch}(grad f_i(x_cur) - grad f_i(x_prev)).

    The same batch is evaluated at both points.
    """
    x_cur = np.atleast_1d(np.asarray(x_cur, dtype=float))
    x_prev = np.atleast_1d(np.asarray(x_prev, dtype=float))
    diff = problem.sample_grads(x_cur, batch) - problem.sample_grads(x_prev, batch)
    return v_prev + diff.mean(axis=0)


class SarahEstimator:
    """
    Estimator state within an epoch.

    anchor() resets the buffer at the epoch start with the full gradient
    (finite sums) or a big-batch mean (expectations); step() applies the
    recursive correction against the previously seen point.
    """

    def __init__(self, problem):
        self.problem = problem
        self.v: Optional[np.ndarray] = None
        self.x_prev: Optional[np.ndarray] = None

    def anchor(self, x, batch=None) -> int:
        """
        Reset at x.

        Args:
            x: Epoch anchor point
            batch: Anchor batch; None means the exact full gradient

        Returns:
            Number of component gradients spent
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if batch is None:
            if self.problem.structure == ProblemStructure.EXPECTATION:
                raise BregmanError(ErrorType.CONFIG_ERROR, "expectation problems need an anchor batch")
            self.v = self.problem.grad_f(x)
            cost = self.problem.n
        else:
            self.v = self.problem.batch_grad(x, batch)
            cost = len(batch)
        self.x_prev = x.copy()
        return cost

    def step(self, batch, x_cur) -> np.ndarray:
        """Recursive update with a fresh batch of component indices or samples."""
        if self.v is None:
            raise BregmanError(ErrorType.CONFIG_ERROR, "estimator used before anchor()")
        x_cur = np.atleast_1d(np.asarray(x_cur, dtype=float))
        self.v = sarah_step(self.problem, self.v, batch, x_cur, self.x_prev)
        self.x_prev = x_cur.copy()
        return self.v

    def error(self, x_cur) -> np.ndarray:
        """v - grad f(x_cur), by exact replay."""
        return self.v - self.problem.grad_f(x_cur)
