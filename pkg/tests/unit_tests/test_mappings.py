"""Unit tests for gradient mappings and stationarity measures."""

import numpy as np
import pytest

from bregman_pg.kernels import KernelModel
from bregman_pg.mappings import (
    dist_to_subdifferential,
    grad_map_D,
    grad_map_D_surrogate,
    grad_map_G,
    grad_map_restricted,
    gradient_mappings,
    limiting_map,
    witness_stationarity_bound,
)
from bregman_pg.models import Ball, BregmanError, ErrorType
from bregman_pg.problems import make_cubic_finite_sum, make_example2
from bregman_pg.prox import CompositeTerm


@pytest.fixture
def cubic():
    return make_cubic_finite_sum(8, dim=2, seed=3)


class TestGradientMappings:
    """Tests for the old and new gradient mappings."""

    def test_new_mapping_is_gradient_for_smooth_problems(self, cubic):
        """Test D(x) = grad f(x) when phi is zero, for any step."""
        kernel = KernelModel.polynomial(1)
        x = np.array([0.7, -1.2])
        for lam in (0.01, 0.3, 2.0):
            np.testing.assert_allclose(grad_map_D(kernel, cubic.phi, cubic, x, lam), cubic.grad_f(x), atol=1e-9)

    def test_mappings_coincide_for_euclidean_kernel(self, cubic):
        """Test G = D under the quadratic kernel."""
        kernel = KernelModel.quadratic()
        phi = CompositeTerm.l1(0.1)
        old, new, _ = gradient_mappings(kernel, phi, cubic, np.array([0.4, 0.9]), 0.2)
        np.testing.assert_allclose(old, new)

    def test_sandwich(self, cubic):
        """Test mu_h ||G|| <= ||D|| <= L_h ||G|| over the step segment."""
        kernel = KernelModel.polynomial(2)
        x = np.array([1.3, -0.4])
        old, new, prox = gradient_mappings(kernel, CompositeTerm.l1(0.05), cubic, x, 0.1)
        mu_h, L_h = kernel.mu_L_over_segment(x, prox.y)
        norm_old, norm_new = np.linalg.norm(old), np.linalg.norm(new)
        assert mu_h * norm_old <= norm_new * (1 + 1e-9)
        assert norm_new <= L_h * norm_old * (1 + 1e-9)

    def test_unit_new_mapping_on_half_line(self):
        """Test ||D|| = 1 for f(x) = -x under h = x^4/4 at every point."""
        problem = make_example2(4)
        for point in (0.0, 1.0, 8.0, 1e3):
            new = grad_map_D(problem.kernel, problem.phi, problem, np.array([point]), 1.0)
            assert np.linalg.norm(new) == pytest.approx(1.0, rel=1e-6)

    def test_old_mapping_vanishes_on_half_line(self):
        """Test ||G|| decays far out on the half-line while ||D|| stays one."""
        problem = make_example2(4)
        near = grad_map_G(problem.kernel, problem.phi, problem, np.array([1.0]), 1.0)
        far = grad_map_G(problem.kernel, problem.phi, problem, np.array([1e3]), 1.0)
        assert np.linalg.norm(far) < 1e-5 < np.linalg.norm(near)

    def test_restricted_mapping_with_large_ball(self, cubic):
        """Test a ball containing the step does not change G."""
        kernel = KernelModel.polynomial(1)
        x = np.array([0.2, 0.3])
        restricted = grad_map_restricted(kernel, cubic.phi, Ball(x, 100.0), cubic, x, 0.1)
        np.testing.assert_allclose(restricted, grad_map_G(kernel, cubic.phi, cubic, x, 0.1), atol=1e-10)

    def test_restricted_mapping_with_small_ball(self, cubic):
        """Test the restricted step is at most the radius."""
        kernel = KernelModel.polynomial(1)
        x = np.array([1.5, 1.5])
        restricted = grad_map_restricted(kernel, cubic.phi, Ball(x, 1e-3), cubic, x, 1.0)
        assert np.linalg.norm(restricted) <= 1e-3 + 1e-9

    def test_surrogate_with_exact_gradient(self, cubic):
        """Test the surrogate equals D when v is the exact gradient."""
        kernel = KernelModel.polynomial(1)
        x = np.array([0.5, -0.5])
        np.testing.assert_allclose(
            grad_map_D_surrogate(kernel, cubic.phi, x, cubic.grad_f(x), 0.2),
            grad_map_D(kernel, cubic.phi, cubic, x, 0.2),
        )


class TestLimitingMap:
    """Tests for limiting_map."""

    def test_small_step_limit(self, cubic):
        """Test G approaches [hess h]^{-1} grad f as lam shrinks."""
        kernel = KernelModel.polynomial(2)
        x = np.array([0.8, 0.6])
        target = limiting_map(kernel, cubic, x)
        errors = [np.linalg.norm(grad_map_G(kernel, cubic.phi, cubic, x, lam) - target) for lam in (1e-2, 1e-4)]
        assert errors[1] < errors[0]
        assert errors[1] < 1e-3

    def test_nonsmooth_problem_rejected(self):
        """Test the limiting map needs phi = 0."""
        problem = make_cubic_finite_sum(4, l1_weight=0.1)
        with pytest.raises(BregmanError) as exc_info:
            limiting_map(KernelModel.polynomial(1), problem, np.ones(2))
        assert exc_info.value.error_type == ErrorType.UNSUPPORTED_TERM


class TestStationarity:
    """Tests for dist_to_subdifferential and the witness bound."""

    def test_smooth_distance_is_gradient_norm(self, cubic):
        """Test dist(0, grad f(x)) = ||grad f(x)||."""
        x = np.array([1.0, 2.0])
        assert dist_to_subdifferential(cubic, cubic.phi, x) == pytest.approx(np.linalg.norm(cubic.grad_f(x)))

    def test_origin_is_stationary_with_l1(self):
        """Test the antithetic cubic with an l1 term is stationary at the origin."""
        problem = make_cubic_finite_sum(8, l1_weight=0.2)
        assert dist_to_subdifferential(problem, problem.phi, np.zeros(2)) == pytest.approx(0.0, abs=1e-12)

    def test_ball_terms_rejected(self, cubic):
        """Test the distance is not computed for ball terms."""
        with pytest.raises(BregmanError):
            dist_to_subdifferential(cubic, CompositeTerm.ball_indicator([0.0, 0.0], 1.0), np.zeros(2))

    def test_witness_bound_small_near_solution(self, cubic):
        """Test ||grad f(y) + u|| is of the order of the step mapping."""
        kernel = KernelModel.polynomial(1)
        x = np.array([0.01, -0.02])
        _, _, prox = gradient_mappings(kernel, CompositeTerm.zero(), cubic, x, 0.1)
        assert witness_stationarity_bound(cubic, prox) <= 2.0 * np.linalg.norm(cubic.grad_f(x)) + 1e-12
