import math
from fractions import Fraction

import pytest

from riskavg.errors import DomainError
from riskavg.hilbert import (NONCENTRALITY, SECOND_MOMENT_LIMIT, TILT_VAR, OFFSET, ball_probability,
                             conditional_mean_v1, noncommuting_limits_table, rho_linear_finite_n,
                             rho_linear_mc, rho_quadratic_components, rho_quadratic_limit,
                             rho_quadratic_mc, tilted_conditional_moments)
from riskavg.chisq import noncentral_chisq_cdf


class TestExactConstants:
    def test_tilt(self):
        assert NONCENTRALITY == Fraction(1, 3)
        assert SECOND_MOMENT_LIMIT == TILT_VAR + OFFSET**2 == Fraction(4, 9)


class TestConditionalMean:
    def test_high_dimension_bound(self):
        v = conditional_mean_v1(10**4, 1.0)
        assert abs(v) <= (1 / 3) * (3 / 10**4) * 1.1

    def test_negative(self):
        for n in (1, 3, 10, 500):
            for r in (0.1, 1.0, 5.0):
                assert conditional_mean_v1(n, r) < 0

    def test_vanishes_monotonically(self):
        vals = [abs(conditional_mean_v1(n, 1.0)) for n in (10, 100, 1000, 10000)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_tilted_monte_carlo(self):
        m = tilted_conditional_moments(3, 1.0, 10**7, 5)
        assert abs(m.mean_v1 - conditional_mean_v1(3, 1.0)) <= 3 * m.mean_v1_se

    def test_ball_probability_vs_retention(self):
        m = tilted_conditional_moments(4, 1.0, 10**6, 2)
        p = ball_probability(4, 1.0)
        assert abs(m.acceptance_rate - p) <= 3 * math.sqrt(p * (1 - p) / 10**6)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            conditional_mean_v1(0, 1.0)
        with pytest.raises(DomainError):
            conditional_mean_v1(3, 0.0)


class TestLinear:
    def test_high_dimension(self):
        assert rho_linear_finite_n(10**5, 1.0) == pytest.approx(-1.0, abs=1e-3)

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_dimension_free(self, r):
        assert rho_linear_finite_n(10**5, r) == pytest.approx(-1.0, abs=1e-3)

    def test_large_radius(self):
        assert rho_linear_finite_n(5, 1e3) == pytest.approx(-2 / 3, abs=1e-3)

    def test_small_radius(self):
        assert rho_linear_finite_n(5, 1e-3) == pytest.approx(-1.0, abs=1e-4)

    @pytest.mark.parametrize("n,r", [(2, 1.0), (8, 2.0)])
    def test_monte_carlo(self, n, r):
        e = rho_linear_mc(n, r, 10**6, 0)
        assert abs(e.estimate - rho_linear_finite_n(n, r)) <= 3 * e.std_error

    def test_tilted_sampler(self):
        e = rho_linear_mc(4, 1.0, 10**6, 3, sampler="tilted")
        assert abs(e.estimate - rho_linear_finite_n(4, 1.0)) <= 3 * e.std_error
        p = ball_probability(4, 1.0)
        assert abs(e.acceptance_rate - p) <= 3 * math.sqrt(p * (1 - p) / 10**6)

    def test_base_sampler_acceptance(self):
        # the flat base N(0, I) keeps |Z - e_1| <= r with probability F_n(r^2; 1)
        e = rho_linear_mc(2, 1.0, 10**6, 1)
        p = noncentral_chisq_cdf((2, 1.0), 1.0)
        assert abs(e.acceptance_rate - p) <= 3 * math.sqrt(p * (1 - p) / 10**6)

    def test_unknown_sampler(self):
        with pytest.raises(DomainError):
            rho_linear_mc(2, 1.0, 10, 0, sampler="other")


class TestQuadratic:
    def test_limit_assembly(self):
        assert rho_quadratic_limit(1.0) == pytest.approx(-13 / 9, abs=2e-3)

    def test_components_vs_direct(self):
        c = rho_quadratic_components(4, 3.0, 10**6, 0)
        d = rho_quadratic_mc(4, 3.0, 10**6, 1)
        assert abs(c.assembled - d.estimate) <= 3 * math.hypot(c.assembled_se, d.std_error)

    def test_second_moment_bounded_by_ball(self):
        c = rho_quadratic_components(2, 1.0, 10**5, 0)
        assert 0 < c.second_moment_term <= 1.0


@pytest.fixture(scope="module")
def table():
    return noncommuting_limits_table(quadratic_draws=200_000, seed=0)


class TestLimitsTable:
    def test_linear_orders(self, table):
        lin = [row for row in table if row["functional"] == "linear"]
        assert lin[0]["value"] == pytest.approx(-1.0, abs=1e-3)
        assert lin[1]["value"] == pytest.approx(-2 / 3, abs=1e-3)
        assert round(lin[0]["value"], 3) == -1.0 and round(lin[1]["value"], 4) == -0.6667

    def test_quadratic_rows(self, table):
        quad = [row for row in table if row["functional"] == "quadratic"]
        assert quad[0]["value"] == pytest.approx(-13 / 9, abs=2e-3)
        assert all(math.isfinite(row["value"]) for row in quad)
