import math

import numpy as np
import pytest

from riskavg.aggregation import (LawMixture, OneDirectionFamily, QuantileAggregate, cantelli_envelope,
                                 chebyshev_grid, entropic_mixture, es_mixture, mixture_cdf,
                                 mixture_quantile, one_direction_shift, quantile_aggregate,
                                 spectral_risk_components, spectral_risk_quantile)
from riskavg.errors import DomainError
from riskavg.kernel import KernelSpec
from riskavg.normal import norm_cdf, norm_ppf
from riskavg.risk import GaussianLaw, SpectralWeight, entropic_gaussian, es_gaussian
from riskavg.rng import substream


def random_mixture(rng, n=4):
    return LawMixture(rng.uniform(-2, 2, n), rng.uniform(0.2, 3, n), rng.dirichlet(np.ones(n)))


class TestMixtureDistribution:
    def test_single_component(self):
        m = LawMixture([0.5], [2.0], [1.0])
        x = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(mixture_cdf(m, x), norm_cdf((x - 0.5) / 2.0), atol=1e-15)
        assert mixture_quantile(m, 0.9) == pytest.approx(0.5 + 2.0 * float(norm_ppf(0.9)), abs=1e-9)

    def test_idempotent(self):
        m = LawMixture([0.0, 0.0], [1.0, 1.0], [0.5, 0.5])
        assert mixture_cdf(m, 0.7) == pytest.approx(float(norm_cdf(0.7)))

    def test_symmetry(self):
        m = LawMixture([-1.0, 1.0], [1.0, 1.0], [0.5, 0.5])
        assert mixture_cdf(m, 0.0) == pytest.approx(0.5)
        assert mixture_quantile(m, 0.5) == pytest.approx(0.0, abs=1e-9)

    def test_round_trip(self):
        rng = substream(1, 9)
        for _ in range(10):
            m = random_mixture(rng)
            for u in (1e-4, 0.05, 0.3, 0.5, 0.8, 0.999):
                assert abs(mixture_cdf(m, mixture_quantile(m, u)) - u) <= 1e-9

    def test_invalid(self):
        with pytest.raises(DomainError):
            LawMixture([0.0], [1.0], [0.7])
        with pytest.raises(DomainError):
            LawMixture([0.0], [-1.0], [1.0])


class TestMixtureRisk:
    def test_es_brute_force(self):
        m = LawMixture([0.0, 0.0], [1.0, 2.0], [0.5, 0.5])
        rng = substream(2, 9)
        n = 10**7
        pick = rng.random(n) < 0.5
        x = rng.standard_normal(n) * np.where(pick, 1.0, 2.0)
        tail = np.sort(x)[: n // 20]
        est = -tail.mean()
        q = np.sort(x)[n // 20]
        se = math.sqrt(np.var(np.minimum(x - q, 0.0)) / n) / 0.05
        assert abs(es_mixture(m, 0.95) - est) <= 3 * se

    def test_jensen_es_and_entropic(self):
        rng = substream(3, 9)
        for _ in range(20):
            m = random_mixture(rng)
            comp = m.components
            for a in (0.8, 0.95, 0.99):
                assert es_mixture(m, a) >= m.weights @ [es_gaussian(c, a) for c in comp] - 1e-8
            for g in (0.3, 1.0):
                assert entropic_mixture(m, g) >= m.weights @ [entropic_gaussian(c, g) for c in comp] - 1e-8

    def test_single_component_matches_gaussian(self):
        m = LawMixture([1.0], [0.5], [1.0])
        assert es_mixture(m, 0.9) == pytest.approx(es_gaussian(GaussianLaw(1.0, 0.5), 0.9), abs=1e-9)


class TestQuantileAggregate:
    def test_grid(self):
        u, w = chebyshev_grid(512)
        assert np.all((u > 0) & (u < 1)) and np.all(np.diff(u) > 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-5)

    def test_gaussian_closed_form(self):
        laws = [GaussianLaw(0.0, 1.0), GaussianLaw(2.0, 0.5), GaussianLaw(-1.0, 3.0)]
        w = [0.2, 0.5, 0.3]
        q = quantile_aggregate(laws, w)
        mu = sum(wi * l.mean for wi, l in zip(w, laws))
        sd = sum(wi * l.stddev for wi, l in zip(w, laws))
        np.testing.assert_allclose(q.values, mu + sd * norm_ppf(q.u), atol=1e-12)

    def test_single_law(self):
        q = quantile_aggregate([GaussianLaw(0.3, 1.2)], [1.0], 256)
        np.testing.assert_allclose(q.values, 0.3 + 1.2 * norm_ppf(q.u), atol=1e-12)

    def test_spectral_equality(self):
        rng = substream(4, 9)
        for _ in range(10):
            m = random_mixture(rng)
            q = quantile_aggregate(m)
            for w in (SpectralWeight.expected_shortfall(0.9), SpectralWeight.linear(),
                      SpectralWeight.expectation()):
                assert spectral_risk_quantile(q, w) == pytest.approx(
                    float(m.weights @ spectral_risk_components(m, w)), abs=1e-8)

    def test_quadrature_against_closed_form(self):
        q = quantile_aggregate([GaussianLaw(0.0, 1.0)], [1.0], 4096)
        assert spectral_risk_quantile(q, SpectralWeight.expected_shortfall(0.95)) == pytest.approx(
            es_gaussian(GaussianLaw(0, 1), 0.95), abs=1e-3)

    def test_monotone(self):
        rng = substream(5, 9)
        for _ in range(10):
            m = random_mixture(rng)
            assert np.all(np.diff(quantile_aggregate(m, u_grid=300).values) >= 0)
            xs = np.linspace(-10, 10, 500)
            assert np.all(np.diff(mixture_cdf(m, xs)) >= 0)

    def test_non_monotone_rejected(self):
        with pytest.raises(DomainError):
            QuantileAggregate(np.array([0.2, 0.5]), np.array([1.0, 0.0]), np.array([0.5, 0.5]))

    def test_ssd_chain(self):
        # mean-preserving spread around X with averaged stddev above X's
        X = GaussianLaw(0.0, 1.0)
        m = LawMixture([-0.6, 0.0, 0.6], [1.1, 0.9, 1.3], [0.3, 0.4, 0.3])
        mu_bar, sd_bar = float(m.weights @ m.means), float(m.weights @ m.stddevs)
        for a in (0.8, 0.9, 0.95, 0.99):
            base = es_gaussian(X, a)
            qagg = es_gaussian(GaussianLaw(mu_bar, sd_bar), a)
            assert base <= qagg + 1e-12 <= es_mixture(m, a) + 1e-8


class TestCantelli:
    def test_median(self):
        lo, hi, mid = cantelli_envelope(0.7, 1.0, 0.5, 0.5)
        assert mid == pytest.approx(0.7)
        assert lo < 0.7 < hi

    def test_degenerate(self):
        lo, hi, mid = cantelli_envelope(1.5, 0.0, 0.0, 0.2)
        assert lo == hi == mid == 1.5

    @pytest.mark.parametrize("u", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    def test_contains_gaussian_quantile(self, u):
        lo, hi, _ = cantelli_envelope(0.4, 1.7, 0.0, u)
        assert lo <= 0.4 + 1.7 * float(norm_ppf(u)) <= hi

    def test_bad_level(self):
        with pytest.raises(DomainError):
            cantelli_envelope(0.0, 1.0, 0.0, 1.0)


class TestOneDirection:
    def family(self, atoms, masses, radius=0.5):
        u, qw = chebyshev_grid(1024)
        z = norm_ppf(u)
        return OneDirectionFamily.normalized(u, qw, z, z, atoms, masses, radius)

    def test_symmetric(self):
        fam = self.family([-0.4, -0.1, 0.0, 0.1, 0.4], [0.1, 0.2, 0.4, 0.2, 0.1])
        s = one_direction_shift(fam, KernelSpec(2.0), SpectralWeight.expected_shortfall(0.95))
        assert s.m_xr == pytest.approx(0.0, abs=1e-15)
        assert s.shifted_risk == pytest.approx(s.base_risk, abs=1e-14)

    def test_bounded_shift(self):
        rng = substream(6, 9)
        for _ in range(20):
            atoms = rng.uniform(-1, 1, 6)
            fam = self.family(atoms, rng.dirichlet(np.ones(6)), radius=0.7)
            try:
                s = one_direction_shift(fam, KernelSpec(1.0), SpectralWeight.linear())
            except Exception:
                continue
            assert abs(s.m_xr) <= fam.radius
            assert abs(s.shifted_risk - s.base_risk) <= s.bound + 1e-12

    def test_single_atom_at_radius(self):
        fam = self.family([0.5], [1.0])
        w = SpectralWeight.expected_shortfall(0.9)
        s = one_direction_shift(fam, KernelSpec(2.0), w)
        assert s.m_xr == pytest.approx(0.5)
        h_phi = float(np.sum(fam.quad_weights * fam.h * w(fam.u)))
        assert s.shifted_risk - s.base_risk == pytest.approx(-0.5 * h_phi)

    def test_non_monotone_direction(self):
        u, qw = chebyshev_grid(64)
        with pytest.raises(DomainError):
            OneDirectionFamily.normalized(u, qw, norm_ppf(u), -norm_ppf(u), [0.0], [1.0], 0.1)
