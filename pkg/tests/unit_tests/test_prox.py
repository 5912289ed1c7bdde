"""Unit tests for the Bregman proximal mapping."""

import logging
import math

import numpy as np
import pytest

from bregman_pg.kernels import KernelModel
from bregman_pg.models import Ball, BregmanError, ErrorType, TermKind
from bregman_pg.prox import (
    CompositeTerm, _prox_unconstrained, kkt_residual_check, prox_map, prox_map_constrained_inner, soft_threshold
)


class TestCompositeTerm:
    """Tests for CompositeTerm class."""

    def test_l1_value(self):
        """Test phi(x) = w ||x||_1."""
        assert CompositeTerm.l1(0.5).value(np.array([1.0, -3.0])) == pytest.approx(2.0)

    def test_ball_value_outside_is_infinite(self):
        """Test the indicator is +inf outside the ball."""
        term = CompositeTerm.ball_indicator([0.0, 0.0], 1.0)
        assert term.value(np.array([0.5, 0.0])) == 0.0
        assert term.value(np.array([2.0, 0.0])) == math.inf

    def test_rho(self):
        """Test the subgradient bound w sqrt(d)."""
        assert CompositeTerm.l1(0.5).rho(4) == pytest.approx(1.0)
        assert CompositeTerm.zero().rho(4) == 0.0

    def test_negative_weight_rejected(self):
        """Test that a negative l1 weight raises UNSUPPORTED_TERM."""
        with pytest.raises(BregmanError) as exc_info:
            CompositeTerm.l1(-1.0)
        assert exc_info.value.error_type == ErrorType.UNSUPPORTED_TERM

    def test_with_ball(self):
        """Test adding an epoch ball to zero and l1 terms."""
        ball = Ball([0.0, 0.0], 1.0)
        assert CompositeTerm.zero().with_ball(ball).kind == TermKind.BALL
        combined = CompositeTerm.l1(0.2).with_ball(ball)
        assert combined.kind == TermKind.L1_PLUS_BALL
        assert combined.l1_weight == pytest.approx(0.2)

    def test_second_ball_rejected(self):
        """Test that intersecting two balls is unsupported."""
        with pytest.raises(BregmanError):
            CompositeTerm.ball_indicator([0.0], 1.0).with_ball(Ball([0.0], 2.0))

    def test_without_ball(self):
        """Test dropping the ball keeps the l1 part."""
        term = CompositeTerm.l1_plus_ball(0.3, [0.0, 0.0], 1.0)
        assert term.without_ball().kind == TermKind.L1
        assert CompositeTerm.ball_indicator([0.0], 1.0).without_ball().kind == TermKind.ZERO


class TestSoftThreshold:
    """Tests for soft_threshold."""

    def test_shrinkage(self):
        """Test componentwise shrinkage, with the threshold itself mapping to zero."""
        np.testing.assert_array_equal(soft_threshold([3.0, -0.5, 1.0, -4.0], 1.0), [2.0, 0.0, 0.0, -3.0])


class TestProxMap:
    """Tests for prox_map."""

    def test_quadratic_zero_term_is_gradient_step(self):
        """Test y = x - lam v for the Euclidean kernel."""
        result = prox_map(KernelModel.quadratic(), CompositeTerm.zero(), np.array([1.0, 2.0]), np.array([0.5, -1.0]), 0.4)
        np.testing.assert_allclose(result.y, [0.8, 2.4])
        assert result.used_closed_form

    def test_quadratic_l1_is_soft_threshold(self):
        """Test the Euclidean l1 prox."""
        x, v = np.array([1.0, 0.1]), np.array([-1.0, 0.0])
        result = prox_map(KernelModel.quadratic(), CompositeTerm.l1(0.5), x, v, 1.0)
        np.testing.assert_allclose(result.y, soft_threshold(x - v, 0.5))

    def test_polynomial_zero_term_solves_mirror_step(self):
        """Test grad h(y) = grad h(x) - lam v."""
        kernel = KernelModel.polynomial(2)
        x, v = np.array([0.5, -1.0]), np.array([2.0, 1.0])
        y = prox_map(kernel, CompositeTerm.zero(), x, v, 0.3).y
        np.testing.assert_allclose(kernel.grad_h(y), kernel.grad_h(x) - 0.3 * v, atol=1e-10)

    def test_polynomial_l1_closed_form_matches_inner_solver(self):
        """Test the scaled soft-threshold formula against proximal gradient in y."""
        kernel = KernelModel.polynomial(3)
        phi = CompositeTerm.l1(0.4)
        x, v = np.array([0.8, -0.2]), np.array([1.5, 0.3])
        closed = prox_map(kernel, phi, x, v, 0.5).y
        inner = prox_map_constrained_inner(kernel, phi, x, v, 0.5, use_fast_path=False)
        np.testing.assert_allclose(closed, inner, atol=1e-8)

    def test_inner_solver_agrees_across_starting_points(self):
        """Test runs from different y0 reach the same minimizer as the closed form."""
        kernel = KernelModel.polynomial(2)
        phi = CompositeTerm.l1(0.3)
        x, v = np.array([1.5, -0.7]), np.array([0.4, 2.0])
        closed = _prox_unconstrained(kernel, phi, x, v, 0.2)
        from_origin = prox_map_constrained_inner(kernel, phi, x, v, 0.2, use_fast_path=False, y0=np.zeros(2))
        from_far = prox_map_constrained_inner(kernel, phi, x, v, 0.2, use_fast_path=False, y0=np.array([5.0, 5.0]))
        np.testing.assert_allclose(from_origin, from_far, atol=1e-8)
        np.testing.assert_allclose(from_origin, closed, atol=1e-8)

    def test_inner_solver_iterates_from_prox_center(self, caplog):
        """Test the generic solve starts away from the closed form and still reaches it."""
        caplog.set_level(logging.DEBUG, logger="bregman_pg.prox")
        kernel = KernelModel.polynomial(2)
        phi = CompositeTerm.l1(0.3)
        x, v = np.array([1.5, -0.7]), np.array([0.4, 2.0])
        inner = prox_map_constrained_inner(kernel, phi, x, v, 0.2, use_fast_path=False)
        np.testing.assert_allclose(inner, _prox_unconstrained(kernel, phi, x, v, 0.2), atol=1e-8)
        counts = [int(r.getMessage().split()[-2]) for r in caplog.records if "inner prox converged" in r.getMessage()]
        assert counts and counts[-1] > 1

    def test_inner_solver_large_mirror_step(self):
        """Test a high-degree kernel far from the origin still converges within the budget."""
        kernel = KernelModel.polynomial(4)
        phi = CompositeTerm.l1(0.1)
        x, v = np.array([3.0, -2.0]), np.array([-1.0, 0.5])
        inner = prox_map_constrained_inner(kernel, phi, x, v, 0.5, use_fast_path=False)
        np.testing.assert_allclose(inner, _prox_unconstrained(kernel, phi, x, v, 0.5), atol=1e-7)

    def test_ball_constraint_projects_euclidean_step(self):
        """Test the Euclidean prox over a ball is the projected gradient step."""
        phi = CompositeTerm.ball_indicator([0.0, 0.0], 1.0)
        result = prox_map(KernelModel.quadratic(), phi, np.zeros(2), np.array([-10.0, 0.0]), 1.0)
        np.testing.assert_allclose(result.y, [1.0, 0.0], atol=1e-9)
        assert result.on_boundary
        assert not result.used_closed_form

    def test_ball_inactive_uses_closed_form(self):
        """Test an interior solution is taken from the closed form."""
        kernel = KernelModel.polynomial(1)
        phi = CompositeTerm.ball_indicator([0.0, 0.0], 5.0)
        result = prox_map(kernel, phi, np.array([0.1, 0.1]), np.array([0.1, 0.0]), 0.5)
        assert result.used_closed_form
        assert not result.on_boundary

    def test_polynomial_ball_kkt(self):
        """Test the KKT residual of an active polynomial-kernel ball prox."""
        kernel = KernelModel.polynomial(2)
        x = np.array([0.5, 0.5])
        phi = CompositeTerm.l1_plus_ball(0.1, x, 0.2)
        v = np.array([4.0, -3.0])
        result = prox_map(kernel, phi, x, v, 0.8)
        assert phi.ball.contains(result.y, tol=1e-9)
        assert result.on_boundary
        assert kkt_residual_check(kernel, phi, x, v, 0.8, result.y) <= 1e-8

    def test_witness_satisfies_optimality(self):
        """Test u = (grad h(x) - grad h(y))/lam - v lies in the l1 subdifferential at y."""
        kernel = KernelModel.polynomial(1)
        x, v = np.array([1.0, 0.05]), np.array([0.5, 0.0])
        result = prox_map(kernel, CompositeTerm.l1(0.3), x, v, 1.0)
        nonzero = result.y != 0.0
        np.testing.assert_allclose(result.u[nonzero], 0.3 * np.sign(result.y[nonzero]), atol=1e-9)
        assert np.all(np.abs(result.u[~nonzero]) <= 0.3 + 1e-9)

    def test_nonpositive_step_rejected(self):
        """Test lam <= 0 raises DEGENERATE."""
        with pytest.raises(BregmanError) as exc_info:
            prox_map(KernelModel.quadratic(), CompositeTerm.zero(), np.zeros(1), np.zeros(1), 0.0)
        assert exc_info.value.error_type == ErrorType.DEGENERATE

    def test_monomial_kernel_with_ball_rejected(self):
        """Test ball terms need a globally convex kernel."""
        with pytest.raises(BregmanError) as exc_info:
            prox_map(KernelModel.monomial(4), CompositeTerm.ball_indicator([1.0], 0.5), np.array([1.0]), np.array([1.0]), 1.0)
        assert exc_info.value.error_type == ErrorType.UNSUPPORTED_KERNEL

    def test_monomial_step_off_half_line(self):
        """Test a monomial prox pushed below zero raises DOMAIN_VIOLATION."""
        with pytest.raises(BregmanError) as exc_info:
            prox_map(KernelModel.monomial(4), CompositeTerm.zero(), np.array([1.0]), np.array([5.0]), 1.0)
        assert exc_info.value.error_type == ErrorType.DOMAIN_VIOLATION
