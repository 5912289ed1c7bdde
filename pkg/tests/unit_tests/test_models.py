"""Unit tests for core data models."""

import math

import numpy as np
import pytest

from bregman_pg.models import (
    Ball, BregmanError, ErrorType, EventCensus, SolverConfig
)


class TestBall:
    """Tests for Ball class."""

    def test_distance_to_boundary_inside(self):
        """Test signed distance of an interior point."""
        ball = Ball([0.0, 0.0], 1.0)
        assert ball.distance_to_boundary(np.array([0.5, 0.0])) == pytest.approx(0.5)

    def test_distance_to_boundary_outside_is_negative(self):
        """Test that points outside have negative distance."""
        ball = Ball([0.0, 0.0], 1.0)
        assert ball.distance_to_boundary(np.array([3.0, 4.0])) == pytest.approx(-4.0)

    def test_contains_point_on_boundary(self):
        """Test that a point on the sphere is contained."""
        ball = Ball([1.0, 1.0], 2.0)
        assert ball.contains(np.array([3.0, 1.0]))
        assert ball.on_boundary(np.array([3.0, 1.0]))

    def test_project_outside_point(self):
        """Test projection of an exterior point onto the sphere."""
        ball = Ball([0.0, 0.0], 1.0)
        np.testing.assert_allclose(ball.project(np.array([3.0, 4.0])), [0.6, 0.8])

    def test_project_inside_point_is_identity(self):
        """Test that interior points are not moved."""
        ball = Ball([0.0, 0.0], 1.0)
        np.testing.assert_array_equal(ball.project(np.array([0.2, -0.1])), [0.2, -0.1])

    def test_infinite_radius_contains_everything(self):
        """Test the unbounded ball used by the quadratic kernel."""
        ball = Ball([0.0], math.inf)
        assert ball.contains(np.array([1e12]))
        np.testing.assert_array_equal(ball.project(np.array([1e12])), [1e12])

    def test_nonpositive_radius_rejected(self):
        """Test that a zero radius raises DEGENERATE."""
        with pytest.raises(BregmanError) as exc_info:
            Ball([0.0], 0.0)
        assert exc_info.value.error_type == ErrorType.DEGENERATE


class TestSolverConfig:
    """Tests for SolverConfig validation."""

    def test_defaults_are_auto(self):
        """Test that tunable parameters default to auto."""
        config = SolverConfig()
        assert config.lam is None
        assert config.eta is None
        assert config.tau is None
        assert config.epochs is None
        assert config.epsilon == 1e-3

    def test_nonpositive_epsilon_rejected(self):
        """Test that epsilon must be positive."""
        with pytest.raises(BregmanError) as exc_info:
            SolverConfig(epsilon=0.0)
        assert exc_info.value.error_type == ErrorType.CONFIG_ERROR

    def test_q_outside_range_rejected(self):
        """Test that q must lie strictly between 0 and 1/2."""
        with pytest.raises(BregmanError):
            SolverConfig(q=0.5)
        with pytest.raises(BregmanError):
            SolverConfig(q=0.0)

    def test_zero_batch_rejected(self):
        """Test that integer parameters must be at least 1."""
        with pytest.raises(BregmanError) as exc_info:
            SolverConfig(b=0)
        assert "b must be at least 1" in exc_info.value.message

    def test_negative_step_rejected(self):
        """Test that explicit step sizes must be positive."""
        with pytest.raises(BregmanError):
            SolverConfig(lam=-1.0)


class TestEventCensus:
    """Tests for EventCensus class."""

    def test_fractions(self):
        """Test |I1|/S and |I2|/(S tau)."""
        census = EventCensus(I1={0, 2}, I2={(0, 1)}, epochs=4, steps=8)
        assert census.fraction_I1() == pytest.approx(0.5)
        assert census.fraction_I2(2) == pytest.approx(1.0 / 8.0)

    def test_empty_run_fractions_are_zero(self):
        """Test that an empty census reports zero fractions."""
        census = EventCensus()
        assert census.fraction_I1() == 0.0
        assert census.fraction_I2(5) == 0.0

    def test_as_dict_is_sorted(self):
        """Test the JSON view orders the sets."""
        census = EventCensus(I1={3, 1}, I2={(2, 1), (0, 4)}, R_eps=1.5, T_eps=7, epochs=4)
        view = census.as_dict()
        assert view["I1"] == [1, 3]
        assert view["I2"] == [[0, 4], [2, 1]]
        assert view["T_eps"] == 7


class TestBregmanError:
    """Tests for BregmanError class."""

    def test_message_includes_type(self):
        """Test the string form carries the error type."""
        error = BregmanError(ErrorType.CONFIG_ERROR, "bad key")
        assert str(error) == "config_error: bad key"
        assert error.error_type == ErrorType.CONFIG_ERROR
        assert error.message == "bad key"

    def test_message_optional(self):
        """Test an error without a message."""
        assert str(BregmanError(ErrorType.NO_BRACKET)) == "no_bracket"
