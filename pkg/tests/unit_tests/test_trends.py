"""Unit tests for log-log trend fits."""

import math

import pytest

from bregman_pg.harness.trends import fit_trend
from bregman_pg.models import BregmanError, ErrorType


class TestFitTrend:
    """Tests for fit_trend."""

    def test_linear(self):
        """Test y = x gives slope one and intercept zero."""
        fit = fit_trend([(1.0, 1.0), (2.0, 2.0), (4.0, 4.0)], axis="n")
        assert fit.axis == "n"
        assert fit.slope == pytest.approx(1.0)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.points == 3

    def test_power_law(self):
        """Test y = 7 x^0.5 recovers the exponent and the constant."""
        fit = fit_trend([(x, 7.0 * math.sqrt(x)) for x in (4.0, 16.0, 64.0, 256.0)])
        assert fit.slope == pytest.approx(0.5)
        assert fit.intercept == pytest.approx(math.log(7.0))

    def test_inverse_epsilon(self):
        """Test samples ~ 1/eps gives slope minus one."""
        fit = fit_trend([(eps, 3.0 / eps) for eps in (1e-1, 1e-2, 1e-3)], axis="epsilon")
        assert fit.slope == pytest.approx(-1.0)

    @pytest.mark.parametrize(
        "points",
        [
            [(1.0, 1.0), (2.0, 2.0)],
            [(1.0, 1.0), (2.0, 0.0), (3.0, 3.0)],
            [(1.0, 1.0), (-2.0, 2.0), (3.0, 3.0)],
            [(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)],
            [(1.0, 1.0), (2.0, float("inf")), (3.0, 3.0)],
        ],
    )
    def test_degenerate(self, points):
        """Test too few points, non-positive data and identical x are rejected."""
        with pytest.raises(BregmanError) as exc_info:
            fit_trend(points)
        assert exc_info.value.error_type == ErrorType.DEGENERATE
