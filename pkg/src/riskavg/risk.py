"""Baseline risk measures.

Closed forms for Gaussian payoffs and empirical estimators for samples. Sign
convention: payoffs are gains, so ``rho(X + c) = rho(X) - c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError
from .normal import norm_cdf, norm_pdf, norm_ppf

# Tolerance for the unit-mass check of a spectral weight.
SPECTRAL_NORM_TOL = 1e-8


@dataclass(frozen=True)
class GaussianLaw:
    """One-dimensional Gaussian payoff ``N(mean, stddev**2)``."""

    mean: float
    stddev: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.stddev)):
            raise DomainError("GaussianLaw fields must be finite")
        if self.stddev <= 0:
            raise DomainError(f"stddev must be positive, got {self.stddev}")

    def shift(self, c: float) -> "GaussianLaw":
        return GaussianLaw(self.mean + c, self.stddev)

    def quantile(self, u):
        return self.mean + self.stddev * norm_ppf(u)

    def cdf(self, x):
        return norm_cdf((np.asarray(x, dtype=float) - self.mean) / self.stddev)


def _check_level(a: float) -> float:
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError(f"ES level must lie in (0, 1), got {a}")
    return a


def es_constant(a: float) -> float:
    """Gaussian tail constant ``c_a = pdf(ppf(a)) / (1 - a)``."""
    a = _check_level(a)
    return float(norm_pdf(norm_ppf(a))) / (1.0 - a)


def es_gaussian(law: GaussianLaw, a: float) -> float:
    """Expected Shortfall at level ``a`` of a Gaussian payoff.

    The worst ``1 - a`` fraction of outcomes is averaged, so ``a = 0.95``
    looks at the lowest 5%.
    """
    return -law.mean + law.stddev * es_constant(a)


def es_empirical(sample: Sequence[float], a: float) -> float:
    """Expected Shortfall of an empirical sample with fractional-tail correction.

    With ``t = n (1 - a)`` and ``k = floor(t)``, the estimate averages the ``k``
    smallest outcomes plus a ``t - k`` share of the next one, divided by ``t``.
    When ``t < 1`` only the minimum is used.
    """
    a = _check_level(a)
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise DomainError("es_empirical needs a nonempty sample")
    t = n * (1.0 - a)
    k = int(math.floor(t))
    if k == 0:
        return -float(x.min())
    if k >= n:
        return -float(x.mean())
    part = np.partition(x, k)
    low = part[:k]
    frac = t - k
    return -(float(low.sum()) + frac * float(part[k])) / t


def es_empirical_rows(samples: np.ndarray, a: float) -> np.ndarray:
    """Row-wise :func:`es_empirical` for a 2-D array of equally likely states."""
    a = _check_level(a)
    x = np.sort(np.atleast_2d(np.asarray(samples, dtype=float)), axis=1)
    n = x.shape[1]
    t = n * (1.0 - a)
    k = int(math.floor(t))
    if k == 0:
        return -x[:, 0]
    if k >= n:
        return -x.mean(axis=1)
    return -(x[:, :k].sum(axis=1) + (t - k) * x[:, k]) / t


def es_empirical_se(sample: Sequence[float], a: float) -> float:
    """Asymptotic standard error of :func:`es_empirical`.

    Uses the variance of the tail excess ``(q - X)^+ / (1 - a)`` around the
    empirical quantile ``q``.
    """
    a = _check_level(a)
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    alpha = 1.0 - a
    q = np.quantile(x, alpha)
    h = -q + np.maximum(q - x, 0.0) / alpha
    return float(h.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")


def entropic_gaussian(law: GaussianLaw, gamma: float) -> float:
    """Entropic risk ``(1/gamma) log E[exp(-gamma X)]`` of a Gaussian payoff."""
    if gamma <= 0:
        raise DomainError(f"entropic gamma must be positive, got {gamma}")
    return -law.mean + 0.5 * gamma * law.stddev**2


def entropic_empirical(samples, gamma: float) -> np.ndarray:
    """Entropic risk of equally likely states; rows are payoffs when 2-D."""
    if gamma <= 0:
        raise DomainError(f"entropic gamma must be positive, got {gamma}")
    x = np.asarray(samples, dtype=float)
    z = -gamma * x
    m = z.max(axis=-1, keepdims=True)
    lse = np.log(np.mean(np.exp(z - m), axis=-1)) + m[..., 0]
    return lse / gamma


def expectation_gaussian(law: GaussianLaw) -> float:
    return -law.mean


@dataclass(frozen=True)
class SpectralWeight:
    """Non-increasing spectral weight on [0, 1] with unit mass.

    ``fn`` must be vectorised. ``breakpoints`` lists interior points where
    ``fn`` may jump; quadrature splits there.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...] = ()
    name: str = "spectral"
    check_grid: int = field(default=4097, repr=False)

    def __post_init__(self):
        u = np.linspace(0.0, 1.0, self.check_grid)[1:-1]
        vals = np.asarray(self.fn(u), dtype=float)
        if np.any(vals < 0):
            raise DomainError("spectral weight must be nonnegative")
        if np.any(np.diff(vals) > 1e-12 * max(1.0, float(np.abs(vals).max()))):
            raise DomainError("spectral weight must be non-increasing")
        mass = self.integrate(lambda u: np.ones_like(u))
        if abs(mass - 1.0) > SPECTRAL_NORM_TOL:
            raise DomainError(f"spectral weight integrates to {mass}, not 1")

    def __call__(self, u):
        return np.asarray(self.fn(np.asarray(u, dtype=float)), dtype=float)

    def _segments(self):
        pts = [0.0, *sorted(b for b in self.breakpoints if 0.0 < b < 1.0), 1.0]
        return list(zip(pts[:-1], pts[1:]))

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        """``int_0^1 g(u) w(u) du`` for a bounded integrand ``g``."""
        total = 0.0
        for lo, hi in self._segments():
            val, _ = integrate.quad(lambda u: float(g(np.array([u]))[0] * self(np.array([u]))[0]),
                                    lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
            total += val
        return total

    def integrate_normal_quantile(self) -> float:
        """``int_0^1 ppf(u) w(u) du`` via ``u = cdf(z)``, which removes the endpoint singularities."""
        total = 0.0
        for lo, hi in self._segments():
            zlo = -np.inf if lo == 0.0 else float(norm_ppf(lo))
            zhi = np.inf if hi == 1.0 else float(norm_ppf(hi))

            def f(z):
                zz = np.array([z])
                return float(z * self(norm_cdf(zz))[0] * norm_pdf(zz)[0])

            val, _ = integrate.quad(f, zlo, zhi, epsabs=1e-14, epsrel=1e-12, limit=400)
            total += val
        return total

    @classmethod
    def expected_shortfall(cls, a: float) -> "SpectralWeight":
        """Weight ``1/(1-a)`` on the lowest ``1 - a`` of quantile levels."""
        a = _check_level(a)
        alpha = 1.0 - a
        return cls(lambda u: np.where(np.asarray(u) < alpha, 1.0 / alpha, 0.0),
                   breakpoints=(alpha,), name=f"ES_{a:g}")

    @classmethod
    def expectation(cls) -> "SpectralWeight":
        return cls(lambda u: np.ones_like(np.asarray(u, dtype=float)), name="expectation")

    @classmethod
    def linear(cls) -> "SpectralWeight":
        """``w(u) = 2 (1 - u)``."""
        return cls(lambda u: 2.0 * (1.0 - np.asarray(u, dtype=float)), name="linear")


def spectral_risk_gaussian(law: GaussianLaw, w: SpectralWeight) -> float:
    """``-int_0^1 (mean + stddev ppf(u)) w(u) du``."""
    return -law.mean - law.stddev * w.integrate_normal_quantile()


# --- evaluators on payoff points -------------------------------------------


@dataclass(frozen=True)
class RiskFunctional:
    """Risk functional evaluated row-wise on an array of payoff points.

    ``lipschitz`` is an optional hint used by small-radius checks.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float | None = None
    name: str = "rho"
    translation_invariant: bool = False

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.fn(pts), dtype=float).reshape(pts.shape[0])

    def __call__(self, point) -> float:
        return float(self.evaluate(np.atleast_2d(point))[0])


def linear_functional(w: Sequence[float]) -> RiskFunctional:
    """``rho(z) = -<w, z>``."""
    w = np.asarray(w, dtype=float)
    return RiskFunctional(lambda z: -(z @ w), lipschitz=float(np.linalg.norm(w)), name="linear")


def coordinate_functional(i: int = 0) -> RiskFunctional:
    """``rho(z) = -z_i``."""
    return RiskFunctional(lambda z: -z[:, i], lipschitz=1.0, name=f"-z{i + 1}")


def negative_square_coordinate(i: int = 0) -> RiskFunctional:
    """``rho(z) = -z_i**2``; not globally Lipschitz."""
    return RiskFunctional(lambda z: -z[:, i] ** 2, name=f"-z{i + 1}^2")


def constant_functional(c: float) -> RiskFunctional:
    return RiskFunctional(lambda z: np.full(z.shape[0], float(c)), lipschitz=0.0, name="const")


def expectation_functional() -> RiskFunctional:
    """``-mean`` of each row, treating the columns as equally likely states."""
    return RiskFunctional(lambda z: -z.mean(axis=1), lipschitz=1.0, name="-E",
                          translation_invariant=True)


def entropic_functional(gamma: float) -> RiskFunctional:
    """Entropic risk of each row of equally likely states (convex, 1-Lipschitz in sup norm)."""
    return RiskFunctional(lambda z: entropic_empirical(z, gamma), name=f"ENT_{gamma:g}",
                          translation_invariant=True)


def es_sample_functional(a: float) -> RiskFunctional:
    """Empirical ES of each row of equally likely states."""
    return RiskFunctional(lambda z: es_empirical_rows(z, a), name=f"ES_{a:g}",
                          translation_invariant=True)


def gaussian_es_functional(a: float) -> RiskFunctional:
    """ES of ``N(mu, sigma**2)`` evaluated on ``(mu, sigma)`` rows."""
    c = es_constant(a)
    return RiskFunctional(lambda z: -z[:, 0] + c * z[:, 1], lipschitz=math.sqrt(1.0 + c * c),
                          name=f"ES_{a:g}")
