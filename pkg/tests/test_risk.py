import math

import numpy as np
import pytest

from riskavg.errors import DomainError
from riskavg.risk import (GaussianLaw, SpectralWeight, entropic_empirical, entropic_gaussian,
                          es_constant, es_empirical, es_empirical_se, es_gaussian,
                          gaussian_es_functional, linear_functional, spectral_risk_gaussian)
from riskavg.rng import substream

ES95 = 2.0627128075074244   # phi(z_0.95) / 0.05, checked against mpmath at 30 digits


class TestGaussianES:
    def test_standard_normal(self):
        assert es_gaussian(GaussianLaw(0.0, 1.0), 0.95) == pytest.approx(ES95, abs=1e-12)
        assert es_gaussian(GaussianLaw(0.0, 1.0), 0.95) == pytest.approx(2.06271, abs=1e-5)

    def test_constant_from_pdf(self):
        z = 1.6448536269514722
        assert es_constant(0.95) == pytest.approx(math.exp(-z * z / 2) / math.sqrt(2 * math.pi) / 0.05,
                                                  rel=1e-14)

    @pytest.mark.parametrize("m,s,a", [(0.3, 1.0, 0.9), (-2.0, 0.5, 0.99), (5.0, 3.0, 0.5)])
    def test_translation_and_scaling(self, m, s, a):
        shifted = es_gaussian(GaussianLaw(m, s), a)
        assert shifted == pytest.approx(es_gaussian(GaussianLaw(0.0, s), a) - m, abs=1e-12)
        assert es_gaussian(GaussianLaw(0.0, s), a) == pytest.approx(s * es_gaussian(GaussianLaw(0, 1), a),
                                                                   rel=1e-13)

    def test_nonincreasing_in_mean(self):
        means = np.linspace(-3, 3, 41)
        vals = [es_gaussian(GaussianLaw(m, 1.3), 0.9) for m in means]
        assert np.all(np.diff(vals) <= 0)

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.5, 1.2])
    def test_bad_level(self, a):
        with pytest.raises(DomainError):
            es_gaussian(GaussianLaw(0, 1), a)

    def test_bad_law(self):
        with pytest.raises(DomainError):
            GaussianLaw(0.0, -1.0)


class TestEmpiricalES:
    def test_constant_sample(self):
        assert es_empirical([-1.0] * 50, 0.9) == pytest.approx(1.0)

    def test_shift(self):
        x = substream(3, 9).standard_normal(1000)
        assert es_empirical(x + 0.7, 0.95) == pytest.approx(es_empirical(x, 0.95) - 0.7, abs=1e-12)

    def test_large_sample_matches_gaussian(self):
        x = substream(1, 9).standard_normal(10**6)
        se = es_empirical_se(x, 0.95)
        assert abs(es_empirical(x, 0.95) - ES95) <= 3 * se

    def test_rate_across_sizes(self):
        for n in (10**3, 10**4, 10**5):
            x = substream(n, 9).standard_normal(n)
            assert abs(es_empirical(x, 0.95) - ES95) <= 3 * es_empirical_se(x, 0.95)

    def test_fractional_tail(self):
        # n(1-a) = 2.5: two worst values plus half of the third
        x = np.arange(1.0, 51.0)
        assert es_empirical(x, 0.95) == pytest.approx(-(1 + 2 + 0.5 * 3) / 2.5)


class TestSpectral:
    def test_expectation_weight(self):
        law = GaussianLaw(0.4, 2.0)
        assert spectral_risk_gaussian(law, SpectralWeight.expectation()) == pytest.approx(-0.4, abs=1e-9)

    def test_es_weight_on_twenty_pairs(self):
        rng = substream(20, 9)
        for _ in range(20):
            law = GaussianLaw(rng.uniform(-2, 2), rng.uniform(0.1, 3))
            a = rng.uniform(0.5, 0.995)
            got = spectral_risk_gaussian(law, SpectralWeight.expected_shortfall(a))
            assert got == pytest.approx(es_gaussian(law, a), abs=1e-6)

    def test_linear_weight_against_monte_carlo(self):
        # -int F^{-1}(u) 2(1-u) du = E[min of two draws] reversed in sign
        z = substream(5, 9).standard_normal((10**7 // 2, 2))
        m = -z.min(axis=1)
        est, se = m.mean(), m.std(ddof=1) / math.sqrt(m.size)
        got = spectral_risk_gaussian(GaussianLaw(0, 1), SpectralWeight.linear())
        assert abs(got - est) <= 3 * se
        assert got == pytest.approx(1 / math.sqrt(math.pi), abs=1e-9)

    def test_rejects_increasing_weight(self):
        with pytest.raises(DomainError):
            SpectralWeight(lambda u: 2 * np.asarray(u), (), "increasing")

    def test_rejects_mass(self):
        with pytest.raises(DomainError):
            SpectralWeight(lambda u: 0.5 * np.ones_like(u), (), "half")


class TestEntropic:
    def test_standard_normal(self):
        assert entropic_gaussian(GaussianLaw(0, 1), 1.0) == pytest.approx(0.5)

    def test_monte_carlo_oracle(self):
        x = substream(8, 9).standard_normal(10**7)
        e = np.exp(-x)
        est = math.log(e.mean())
        se = e.std(ddof=1) / math.sqrt(e.size) / e.mean()
        assert abs(entropic_gaussian(GaussianLaw(0, 1), 1.0) - est) <= 3 * se

    def test_small_gamma(self):
        assert entropic_gaussian(GaussianLaw(0.8, 1.0), 1e-9) == pytest.approx(-0.8, abs=1e-8)

    def test_translation(self):
        d = entropic_gaussian(GaussianLaw(1.5, 0.7), 2.0) - entropic_gaussian(GaussianLaw(0, 0.7), 2.0)
        assert d == pytest.approx(-1.5, abs=1e-12)

    def test_empirical_shift(self):
        x = substream(2, 9).standard_normal((3, 100))
        np.testing.assert_allclose(entropic_empirical(x + 2.0, 0.5), entropic_empirical(x, 0.5) - 2.0,
                                   atol=1e-10)


class TestFunctionals:
    def test_gaussian_es_rows(self):
        rho = gaussian_es_functional(0.95)
        pts = np.array([[0.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(rho.evaluate(pts), [ES95, -1 + 2 * ES95], rtol=1e-12)
        assert rho.lipschitz == pytest.approx(math.sqrt(1 + ES95**2))

    def test_linear(self):
        rho = linear_functional([1.0, -2.0])
        assert rho(np.array([3.0, 1.0])) == pytest.approx(-1.0)
        assert rho.lipschitz == pytest.approx(math.sqrt(5))
