"""Unit tests for the mismatch census and its expected-count bounds."""

import numpy as np
import pytest

from bregman_pg.models import Algorithm, Ball, BregmanError, ErrorType, EventCensus
from bregman_pg.solvers.census import CensusBounds, census_bounds, event_census
from bregman_pg.trace_collector import TraceCollector


def two_epoch_trace(rule: str = "travel"):
    """
    Epoch 0 anchored at the origin travels 0.3; epoch 1 anchored at (0.3, 0) travels 0.1.

    Boundary hits: (0, 1) near the anchor, (0, 2) beyond delta/4, (1, 1) near the anchor.
    """
    collector = TraceCollector({"epoch_rule": rule, "tau": 3, "x_final": [0.4, 0.0]})
    collector.open_epoch(0, Ball([0.0, 0.0], 1.0))
    collector.record(0, 0, [0.0, 0.0], 1.0, 0.1)
    collector.record(0, 1, [0.1, 0.0], 1.0, 0.1, hit_boundary=True)
    collector.record(0, 2, [0.28, 0.0], 1.0, 0.1, hit_boundary=True)
    collector.close_epoch(0, 3)
    collector.open_epoch(1, Ball([0.3, 0.0], 1.0))
    collector.record(1, 0, [0.3, 0.0], 1.0, 0.1)
    collector.record(1, 1, [0.35, 0.0], 1.0, 0.1, hit_boundary=True)
    collector.close_epoch(1, 2)
    return collector.finish("epochs_done")


class TestEventCensus:
    """Tests for event_census."""

    def test_travel_rule(self):
        """Test an epoch whose end point is delta/4 away joins I1."""
        census = event_census(two_epoch_trace(), delta=1.0)
        assert census.I1 == {0}
        assert census.epochs == 2
        assert census.steps == 5

    def test_boundary_hits_near_anchor(self):
        """Test I2 keeps hits within delta/4 of the anchor only."""
        census = event_census(two_epoch_trace(), delta=1.0)
        assert census.I2 == {(0, 1), (1, 1)}

    def test_travel_radius_includes_final_point(self):
        """Test R_eps reaches the final iterate."""
        census = event_census(two_epoch_trace(), delta=1.0)
        assert census.R_eps == pytest.approx(0.4)

    def test_early_break_rule(self):
        """Test epochs shorter than tau join I1 under the early-break rule."""
        census = event_census(two_epoch_trace("early_break"), delta=1.0)
        assert census.I1 == {1}

    def test_larger_delta_shrinks_I1(self):
        """Test no epoch travels delta/4 when delta is large."""
        assert event_census(two_epoch_trace(), delta=4.0).I1 == set()

    def test_explicit_balls_override(self):
        """Test passing balls recomputes travel from other anchors."""
        balls = {0: Ball([0.3, 0.0], 1.0), 1: Ball([0.3, 0.0], 1.0)}
        census = event_census(two_epoch_trace(), delta=1.0, epoch_balls=balls)
        assert 0 in census.I1
        assert (0, 1) in census.I2
        assert (0, 2) in census.I2

    def test_empty_trace(self):
        """Test an empty trace gives an empty census."""
        census = event_census(TraceCollector().finish("epochs_done"), delta=1.0)
        assert census.epochs == 0
        assert census.I1 == set()


BASE = {"n": 64, "tau": 8, "b": 8, "L": 2.0, "mu": 1.0, "delta": 1.0, "kappa": 7.0, "delta_psi": 0.5}


class TestCensusBounds:
    """Tests for census_bounds."""

    def test_alg1_values(self):
        """Test the fixed-step bounds."""
        params = {**BASE, "epsilon": 1e-6, "lam": 1.0 / 30.0}
        bounds = census_bounds(Algorithm.ALG1, params)
        assert bounds.expected_I1 == pytest.approx(128.0 * 8 * 0.5 / (3.0 * 7.0 * 2.0))
        assert bounds.expected_I2 == pytest.approx(128.0 * 0.5 / 30.0)
        assert bounds.eps_condition == pytest.approx((7.0 * 2.0 / 32.0) ** 2)
        assert bounds.applicable

    def test_alg2_values(self):
        """Test the averaged-step bounds."""
        params = {**BASE, "epsilon": 1e-6, "eta": 0.4, "gamma": 0.1}
        bounds = census_bounds(Algorithm.ALG2, params)
        assert bounds.expected_I1 == pytest.approx(32.0 * 0.1 * 8 * 0.5 / 0.4)
        assert bounds.expected_I2 == pytest.approx(128.0 * 0.4 * 0.5 / 0.1)
        assert bounds.success_probability < 1.0

    def test_expectation_values(self):
        """Test the expectation variant only bounds the success probability."""
        params = {**BASE, "epsilon": 1e-6, "q": 0.1}
        bounds = census_bounds(Algorithm.ALG2_EXPECTATION, params)
        assert bounds.expected_I1 is None
        assert bounds.success_probability == pytest.approx(0.9)
        assert bounds.accuracy_guarantee == pytest.approx(4.0 * 49.0 * 1e-6 / 2.0)

    def test_large_eps_not_applicable(self):
        """Test bounds are flagged inapplicable above the accuracy condition."""
        bounds = census_bounds(Algorithm.ALG1, {**BASE, "epsilon": 10.0, "lam": 0.03})
        assert not bounds.applicable
        assert bounds.compliant(EventCensus()) is None

    def test_missing_gap_not_applicable(self):
        """Test bounds need an objective gap."""
        bounds = census_bounds(Algorithm.ALG2, {**BASE, "delta_psi": None, "epsilon": 1e-6, "eta": 0.4, "gamma": 0.1})
        assert bounds.expected_I1 is None
        assert not bounds.applicable

    def test_compliance(self):
        """Test realized counts are compared with the expected counts."""
        bounds = CensusBounds(expected_I1=1.5, expected_I2=0.5, success_probability=None, eps_condition=1.0, applicable=True)
        assert bounds.compliant(EventCensus(I1={0}))
        assert not bounds.compliant(EventCensus(I1={0}, I2={(0, 1)}))

    def test_unsupported_algorithm(self):
        """Test algorithms without a census raise CONFIG_ERROR."""
        with pytest.raises(BregmanError) as exc_info:
            census_bounds(Algorithm.TBPG, {**BASE, "epsilon": 1e-3})
        assert exc_info.value.error_type == ErrorType.CONFIG_ERROR
