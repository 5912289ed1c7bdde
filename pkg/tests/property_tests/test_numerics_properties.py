"""Property-based tests for the scalar solver and segment geometry."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bregman_pg.numerics import RandomStream, ScalarRootSpec, segment_norm_extrema, solve_monotone

coordinate = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
point = st.tuples(coordinate, coordinate)


class TestSolveMonotoneProperties:
    """Properties of solve_monotone."""

    @settings(max_examples=50, deadline=None)
    @given(target=st.floats(min_value=1e-3, max_value=1e4))
    def test_root_residual(self, target):
        """Test t + t^5 = target is solved to near machine precision."""
        spec = ScalarRootSpec(target=target, bracket_lo=0.0, bracket_hi=max(target, target ** 0.2))
        root = solve_monotone(lambda t: t + t ** 5, spec, derivative=lambda t: 1.0 + 5.0 * t ** 4)
        assert abs(root + root ** 5 - target) <= 1e-9 * (1.0 + target)

    @settings(max_examples=50, deadline=None)
    @given(target=st.floats(min_value=1e-3, max_value=1e3))
    def test_bisection_agrees_with_newton(self, target):
        """Test the derivative-free path finds the same root."""
        spec = ScalarRootSpec(target=target, bracket_lo=0.0, bracket_hi=max(target, target ** (1.0 / 3.0)))
        newton = solve_monotone(lambda t: t + t ** 3, spec, derivative=lambda t: 1.0 + 3.0 * t ** 2)
        bisection = solve_monotone(lambda t: t + t ** 3, spec)
        assert abs(newton - bisection) <= 1e-9 * (1.0 + newton)


class TestSegmentProperties:
    """Properties of segment_norm_extrema."""

    @settings(max_examples=100, deadline=None)
    @given(a=point, b=point, t=st.floats(min_value=0.0, max_value=1.0))
    def test_every_segment_point_between_extremes(self, a, b, t):
        """Test near <= ||(1-t) a + t b|| <= far."""
        a, b = np.array(a), np.array(b)
        near, far = segment_norm_extrema(a, b)
        norm = float(np.linalg.norm((1.0 - t) * a + t * b))
        assert near <= far
        assert near <= norm + 1e-9
        assert norm <= far + 1e-9


class TestRandomStreamProperties:
    """Properties of RandomStream."""

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32), s=st.integers(0, 100), k=st.integers(0, 100))
    def test_substreams_are_reproducible(self, seed, s, k):
        """Test a substream depends only on the seed and its key."""
        first = RandomStream(seed).substream(s, k).normal(3)
        parent = RandomStream(seed)
        parent.normal(10)
        second = parent.substream(s, k).normal(3)
        np.testing.assert_array_equal(first, second)
