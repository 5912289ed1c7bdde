"""Realized mismatch sets of epoch-bounded runs and the expected-count bounds they are checked against."""

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..models import Algorithm, Ball, BregmanError, ErrorType, EventCensus
from ..trace_collector import Trace


@dataclass
class CensusBounds:
    """Bounds on E|I1|, E|I2| and the success probability, with the accuracy condition they need."""
    expected_I1: Optional[float]
    expected_I2: Optional[float]
    success_probability: Optional[float]
    eps_condition: float
    applicable: bool
    accuracy_guarantee: Optional[float] = None

    def compliant(self, census: EventCensus) -> Optional[bool]:
        """Realized counts within the expected-count bounds; None when the bounds do not apply."""
        if not self.applicable:
            return None
        ok = True
        if self.expected_I1 is not None:
            ok = ok and len(census.I1) <= self.expected_I1
        if self.expected_I2 is not None:
            ok = ok and len(census.I2) <= self.expected_I2
        return ok


def event_census(trace: Trace, delta: float, epoch_balls: Optional[Dict[int, Ball]] = None) -> EventCensus:
    """
    Recompute I1 and I2 from stored iterates.

    I1: epochs whose iterates travel at least delta/4 from the anchor
    (travel rule), or epochs that ended before tau steps (early-break rule,
    selected by trace.params["epoch_rule"]). The epoch end point is the next
    epoch's anchor.
    I2: pairs (s, k) whose exact-gradient restricted prox from x_{s,k} lands
    on the epoch boundary while x_{s,k} is within delta/4 of the anchor.
    """
    balls = trace.epoch_balls if epoch_balls is None else epoch_balls
    rule = trace.params.get("epoch_rule", "travel")
    tau = trace.params.get("tau")
    quarter = delta / 4.0

    by_epoch: Dict[int, list] = {}
    for rec in trace.records:
        by_epoch.setdefault(rec.s, []).append(rec)
    epochs = sorted(by_epoch)

    census = EventCensus(epochs=len(epochs), steps=len(trace.records))
    x_start = trace.records[0].x if trace.records else None
    for idx, s in enumerate(epochs):
        records = by_epoch[s]
        anchor = balls[s].center if s in balls else records[0].x
        points = [rec.x for rec in records]
        if idx + 1 < len(epochs):
            points.append(by_epoch[epochs[idx + 1]][0].x)
        elif "x_final" in trace.params:
            points.append(np.asarray(trace.params["x_final"], dtype=float))
        travel = max(float(np.linalg.norm(p - anchor)) for p in points)

        if rule == "early_break":
            length = trace.epoch_lengths.get(s, len(records))
            if tau is not None and length < tau:
                census.I1.add(s)
        elif travel >= quarter:
            census.I1.add(s)

        for rec in records:
            if rec.hit_boundary and float(np.linalg.norm(rec.x - anchor)) <= quarter:
                census.I2.add((s, rec.k))
        census.R_eps = max(census.R_eps, max(float(np.linalg.norm(p - x_start)) for p in points))
    return census


def census_bounds(algorithm: Algorithm, params: Dict[str, float]) -> CensusBounds:
    """
    Expected-count bounds evaluated with a run's resolved constants.

    params needs n, tau, b, L, mu, delta, kappa, epsilon, delta_psi and
    lam (ALG1), eta and gamma (ALG2), or q (ALG2_EXPECTATION).
    """
    tau, L = float(params["tau"]), float(params["L"])
    mu, delta, kappa = float(params["mu"]), float(params["delta"]), float(params["kappa"])
    eps = float(params["epsilon"])
    gap = params.get("delta_psi")

    if algorithm == Algorithm.ALG1:
        n, lam = float(params["n"]), float(params["lam"])
        condition = (kappa * L * delta / (4.0 * tau)) ** 2
        return CensusBounds(
            expected_I1=None if gap is None else 128.0 * tau * gap / (3.0 * mu * kappa * L * delta ** 2),
            expected_I2=None if gap is None else 128.0 * lam * gap / (mu * delta ** 2),
            success_probability=1.0 - 8.0 * math.sqrt(n * eps) / (3.0 * kappa * L * delta),
            eps_condition=condition,
            applicable=gap is not None and eps <= condition,
        )

    if algorithm == Algorithm.ALG2:
        b, eta, gamma = float(params["b"]), float(params["eta"]), float(params["gamma"])
        condition = delta ** 2 / 16.0 * min(L ** 2 * kappa ** 2 / (b * tau), 1.0 / (9.0 * eta ** 2))
        return CensusBounds(
            expected_I1=None if gap is None else 32.0 * gamma * tau * gap / (eta * mu * delta ** 2),
            expected_I2=None if gap is None else 128.0 * eta * gap / (gamma * mu * delta ** 2),
            success_probability=1.0
            - 8.0 * eta * tau * b * eps / (L ** 2 * kappa ** 2 * delta ** 2)
            - 4.0 * math.sqrt(eps) / delta,
            eps_condition=condition,
            applicable=gap is not None and eps <= condition,
        )

    if algorithm == Algorithm.ALG2_EXPECTATION:
        q = float(params["q"])
        condition = 1.0 / (16.0 * L ** 2 * kappa ** 2 * q)
        return CensusBounds(
            expected_I1=None,
            expected_I2=None,
            success_probability=1.0 - q,
            eps_condition=condition,
            applicable=eps <= condition,
            accuracy_guarantee=L ** 2 * kappa ** 2 * delta ** 2 * eps / 2.0,
        )

    raise BregmanError(ErrorType.CONFIG_ERROR, f"no census bounds for {algorithm.value}")
