"""Property-based tests for the gradient mappings."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bregman_pg.kernels import KernelModel
from bregman_pg.mappings import dist_to_subdifferential, gradient_mappings, witness_stationarity_bound
from bregman_pg.problems import make_cubic_finite_sum
from bregman_pg.prox import CompositeTerm

PROBLEM = make_cubic_finite_sum(8, dim=2, seed=1)
coordinate = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


class TestMappingProperties:
    """Properties of gradient_mappings."""

    @settings(max_examples=50, deadline=None)
    @given(
        x=st.tuples(coordinate, coordinate),
        lam=st.floats(min_value=0.01, max_value=1.0),
        r=st.integers(min_value=1, max_value=3),
        weight=st.sampled_from([0.0, 0.05, 0.3]),
    )
    def test_sandwich(self, x, lam, r, weight):
        """Test mu_h ||G|| <= ||D|| <= L_h ||G|| on the step segment."""
        kernel = KernelModel.polynomial(r)
        x = np.array(x)
        old, new, prox = gradient_mappings(kernel, CompositeTerm.l1(weight), PROBLEM, x, lam)
        mu_h, L_h = kernel.mu_L_over_segment(x, prox.y)
        norm_old, norm_new = float(np.linalg.norm(old)), float(np.linalg.norm(new))
        assert mu_h * norm_old <= norm_new * (1.0 + 1e-8) + 1e-12
        assert norm_new <= L_h * norm_old * (1.0 + 1e-8) + 1e-12

    @settings(max_examples=50, deadline=None)
    @given(x=st.tuples(coordinate, coordinate), lam=st.floats(min_value=0.01, max_value=1.0))
    def test_smooth_new_mapping_is_gradient(self, x, lam):
        """Test D equals grad f for every step size when phi is zero."""
        kernel = KernelModel.polynomial(2)
        x = np.array(x)
        _, new, _ = gradient_mappings(kernel, CompositeTerm.zero(), PROBLEM, x, lam)
        np.testing.assert_allclose(new, PROBLEM.grad_f(x), rtol=1e-7, atol=1e-7)

    @settings(max_examples=60, deadline=None)
    @given(
        x=st.tuples(coordinate, coordinate),
        fraction=st.floats(min_value=0.05, max_value=1.0),
        weight=st.sampled_from([0.0, 0.05, 0.3]),
    )
    def test_near_stationarity_of_prox_output(self, x, fraction, weight):
        """Test dist(0, dPsi(x+)) <= (1 + L lam kappa) ||D(x)|| whenever ||x - x+|| <= delta."""
        kernel = PROBLEM.kernel
        reg = kernel.regularity_constants()
        L = PROBLEM.smad_L
        lam = fraction / L
        phi = CompositeTerm.l1(weight)
        x = np.array(x)
        _, new, prox = gradient_mappings(kernel, phi, PROBLEM, x, lam)
        assume(float(np.linalg.norm(x - prox.y)) <= reg.delta)
        bound = (1.0 + L * lam * reg.kappa_delta) * float(np.linalg.norm(new))
        assert witness_stationarity_bound(PROBLEM, prox) <= bound * (1.0 + 1e-8) + 1e-10
        assert dist_to_subdifferential(PROBLEM, phi, prox.y) <= bound * (1.0 + 1e-8) + 1e-9
