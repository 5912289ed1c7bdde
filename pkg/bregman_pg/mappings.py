"""Stationarity measures: old and new gradient mappings, restricted and surrogate variants, limiting mapping."""

from typing import Tuple

import numpy as np

from .kernels import KernelModel
from .models import Ball, BregmanError, ErrorType, TermKind
from .prox import CompositeTerm, ProxResult, prox_map


def prox_at_gradient(kernel: KernelModel, phi: CompositeTerm, problem, x, lam: float) -> ProxResult:
    """One Bregman proximal gradient step from x with the exact gradient."""
    return prox_map(kernel, phi, x, problem.grad_f(x), lam)


def gradient_mappings(kernel: KernelModel, phi: CompositeTerm, problem, x, lam: float) -> Tuple[np.ndarray, np.ndarray, ProxResult]:
    """Old mapping, new mapping and the prox result they share."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    result = prox_at_gradient(kernel, phi, problem, x, lam)
    old = (x - result.y) / lam
    new = (kernel.grad_h(x) - kernel.grad_h(result.y)) / lam
    return old, new, result


def grad_map_G(kernel: KernelModel, phi: CompositeTerm, problem, x, lam: float) -> np.ndarray:
    """(x - T(x, grad f(x))) / lam."""
    return gradient_mappings(kernel, phi, problem, x, lam)[0]


def grad_map_D(kernel: KernelModel, phi: CompositeTerm, problem, x, lam: float) -> np.ndarray:
    """(grad h(x) - grad h(T(x, grad f(x)))) / lam; equals grad f(x) when phi is zero."""
    return gradient_mappings(kernel, phi, problem, x, lam)[1]


def grad_map_restricted(kernel: KernelModel, phi: CompositeTerm, ball: Ball, problem, x, lam: float) -> np.ndarray:
    """Old mapping of phi plus the indicator of ball."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    result = prox_at_gradient(kernel, phi.with_ball(ball), problem, x, lam)
    return (x - result.y) / lam


def grad_map_D_surrogate(kernel: KernelModel, phi: CompositeTerm, x, v, eta: float) -> np.ndarray:
    """New mapping evaluated with an estimated direction v in place of grad f(x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = prox_map(kernel, phi, x, v, eta).y
    return (kernel.grad_h(x) - kernel.grad_h(y)) / eta


def limiting_map(kernel: KernelModel, problem, x) -> np.ndarray:
    """[hess h(x)]^{-1} grad f(x), the small-step limit of the old mapping."""
    if problem.phi.kind != TermKind.ZERO:
        raise BregmanError(ErrorType.UNSUPPORTED_TERM, "limiting mapping is defined for smooth problems only")
    return kernel.hessian_solve(x, problem.grad_f(x))


def dist_to_subdifferential(problem, phi: CompositeTerm, x) -> float:
    """
    dist(0, grad f(x) + d phi(x)) for zero and l1 terms.

    Ball terms have unbounded normal cones on the sphere; use
    witness_stationarity_bound for them.
    """
    if phi.has_ball():
        raise BregmanError(ErrorType.UNSUPPORTED_TERM, "distance to the subdifferential is not computed for ball terms")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.atleast_1d(problem.grad_f(x))
    weight = phi.l1_weight
    if weight == 0.0:
        return float(np.linalg.norm(grad))
    gap = np.where(
        x != 0.0,
        np.abs(grad + weight * np.sign(x)),
        np.maximum(np.abs(grad) - weight, 0.0),
    )
    return float(np.linalg.norm(gap))


def witness_stationarity_bound(problem, prox_result: ProxResult) -> float:
    """||grad f(y) + u|| for a prox output y with witness u, an upper bound on dist(0, dPsi(y))."""
    return float(np.linalg.norm(problem.grad_f(prox_result.y) + prox_result.u))
