"""Property-based tests for the Bregman proximal step."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bregman_pg.kernels import KernelModel
from bregman_pg.prox import CompositeTerm, prox_map

unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
slope = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def prox_objective(kernel, phi, x, v, lam, y):
    return float(v @ y) + phi.value(y) + kernel.bregman_div(y, x) / lam


class TestConstrainedProxProperties:
    """Properties of prox_map with a ball term."""

    @settings(max_examples=50, deadline=None)
    @given(
        x=st.tuples(unit, unit),
        v=st.tuples(slope, slope),
        lam=st.floats(min_value=0.1, max_value=1.0),
        radius=st.floats(min_value=0.2, max_value=0.6),
        weight=st.floats(min_value=0.0, max_value=0.5),
    )
    def test_feasible_optimal_and_kkt(self, x, v, lam, radius, weight):
        """Test the step stays in the ball, beats the center and satisfies KKT."""
        kernel = KernelModel.polynomial(2)
        x, v = np.array(x), np.array(v)
        phi = CompositeTerm.l1_plus_ball(weight, x, radius) if weight > 0 else CompositeTerm.ball_indicator(x, radius)
        result = prox_map(kernel, phi, x, v, lam)
        assert phi.ball.contains(result.y, tol=1e-9)
        assert result.kkt_residual <= 1e-7 * (1.0 + float(np.linalg.norm(v)))
        centered = prox_objective(kernel, phi.without_ball(), x, v, lam, x)
        assert prox_objective(kernel, phi.without_ball(), x, v, lam, result.y) <= centered + 1e-8

    @settings(max_examples=50, deadline=None)
    @given(
        x=st.tuples(unit, unit),
        v=st.tuples(slope, slope),
        lam=st.floats(min_value=0.1, max_value=1.0),
        weight=st.floats(min_value=0.0, max_value=0.5),
    )
    def test_unconstrained_closed_form_kkt(self, x, v, lam, weight):
        """Test the closed-form l1 step satisfies its optimality condition."""
        kernel = KernelModel.polynomial(3)
        result = prox_map(kernel, CompositeTerm.l1(weight), np.array(x), np.array(v), lam)
        assert result.used_closed_form
        assert result.kkt_residual <= 1e-9 * (1.0 + float(np.linalg.norm(v)))


class TestThreePointProperty:
    """Three-point inequality of the unconstrained Bregman prox."""

    @settings(max_examples=60, deadline=None)
    @given(
        z=st.tuples(unit, unit),
        v=st.tuples(slope, slope),
        point=st.tuples(slope, slope),
        lam=st.floats(min_value=0.1, max_value=1.0),
        weight=st.sampled_from([0.0, 0.1, 0.5]),
        r=st.integers(min_value=1, max_value=3),
    )
    def test_three_point_inequality(self, z, v, point, lam, weight, r):
        """Test lam phi_v(p) + D(p, z) >= lam phi_v(y) + D(y, z) + D(p, y) at every p."""
        kernel = KernelModel.polynomial(r)
        phi = CompositeTerm.l1(weight)
        z, v, point = np.array(z), np.array(v), np.array(point)
        y = prox_map(kernel, phi, z, v, lam).y

        def linear_part(u):
            return lam * (float(v @ u) + phi.value(u))

        lhs = linear_part(point) + kernel.bregman_div(point, z)
        rhs = linear_part(y) + kernel.bregman_div(y, z) + kernel.bregman_div(point, y)
        assert rhs <= lhs + 1e-8 * (1.0 + abs(lhs))
