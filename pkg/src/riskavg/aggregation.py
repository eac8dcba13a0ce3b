"""Aggregating a family of laws at the distribution and quantile levels.

A :class:`LawMixture` averages component cdfs (distribution aggregation); a
:class:`QuantileAggregate` averages component quantile functions on a grid
(quantile aggregation). Spectral risk of the quantile aggregate equals the
weighted average of component spectral risks, while concave-in-distribution
risk measures of the mixture dominate that average.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, EmptyBallError
from .kernel import KernelSpec
from .normal import norm_cdf, norm_pdf, norm_ppf
from .risk import GaussianLaw, SpectralWeight, _check_level

DEFAULT_GRID = 2048
BISECT_TOL = 1e-10


@dataclass
class LawMixture:
    """Finite Gaussian mixture with normalised weights."""

    means: np.ndarray
    stddevs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.means = np.atleast_1d(np.asarray(self.means, dtype=float))
        self.stddevs = np.atleast_1d(np.asarray(self.stddevs, dtype=float))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if not (self.means.shape == self.stddevs.shape == self.weights.shape) or self.means.size == 0:
            raise DomainError("mixture needs matching, nonempty component arrays")
        if np.any(self.stddevs <= 0) or np.any(self.weights < 0):
            raise DomainError("invalid mixture component")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"mixture weights sum to {self.weights.sum()}, not 1")

    @classmethod
    def from_laws(cls, laws: Sequence[GaussianLaw], weights: Sequence[float]) -> "LawMixture":
        return cls([z.mean for z in laws], [z.stddev for z in laws], weights)

    @property
    def components(self) -> list[GaussianLaw]:
        return [GaussianLaw(float(m), float(s)) for m, s in zip(self.means, self.stddevs)]

    def mean(self) -> float:
        return float(self.weights @ self.means)


def mixture_cdf(m: LawMixture, x):
    """``sum_i w_i Phi((x - mu_i) / sigma_i)``, vectorised in ``x``."""
    x = np.asarray(x, dtype=float)
    z = (x[..., None] - m.means) / m.stddevs
    return norm_cdf(z) @ m.weights


def mixture_quantile(m: LawMixture, u: float, tol: float = BISECT_TOL) -> float:
    """Generalised inverse ``inf{x : F(x) >= u}`` by bisection."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {u}")
    comp = m.means + m.stddevs * norm_ppf(u)
    lo, hi = float(comp.min()), float(comp.max())
    if hi - lo <= tol:
        return hi
    # F(lo) <= u <= F(hi) since every component cdf is <= u at lo and >= u at hi
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if float(mixture_cdf(m, mid)) >= u:
            hi = mid
        else:
            lo = mid
    return hi


def es_mixture(m: LawMixture, a: float) -> float:
    """Exact Expected Shortfall of a Gaussian mixture.

    With ``q`` the mixture quantile at ``alpha = 1 - a``, the lower-tail
    integral is ``sum_i w_i (mu_i Phi(z_i) - sigma_i phi(z_i))``.
    """
    a = _check_level(a)
    alpha = 1.0 - a
    q = mixture_quantile(m, alpha)
    z = (q - m.means) / m.stddevs
    tail = m.weights @ (m.means * norm_cdf(z) - m.stddevs * norm_pdf(z))
    return -float(tail) / alpha


def entropic_mixture(m: LawMixture, gamma: float) -> float:
    """Entropic risk of a Gaussian mixture from the component moment generating functions."""
    if gamma <= 0:
        raise DomainError("entropic gamma must be positive")
    e = -gamma * m.means + 0.5 * gamma**2 * m.stddevs**2
    top = e.max()
    return float(top + math.log(m.weights @ np.exp(e - top))) / gamma


# --- quantile aggregation ---------------------------------------------------


def chebyshev_grid(n: int = DEFAULT_GRID) -> tuple[np.ndarray, np.ndarray]:
    """Interior Chebyshev levels on (0, 1) and matching quadrature weights.

    ``u = (1 - cos t) / 2`` with ``t`` at midpoints of ``n`` equal cells of
    ``(0, pi)``; the weights are ``(pi / n) sin(t) / 2``.
    """
    t = (np.arange(1, n + 1) - 0.5) * math.pi / n
    return 0.5 * (1.0 - np.cos(t)), 0.5 * math.pi / n * np.sin(t)


@dataclass
class QuantileAggregate:
    u: np.ndarray
    values: np.ndarray
    quad_weights: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.values) < -1e-12 * max(1.0, float(np.abs(self.values).max()))):
            raise DomainError("aggregated quantile is not non-decreasing")


def quantile_aggregate(laws: Sequence[GaussianLaw] | LawMixture, weights: Sequence[float] | None = None,
                       u_grid: int | np.ndarray = DEFAULT_GRID,
                       quad_weights: np.ndarray | None = None) -> QuantileAggregate:
    """Pointwise weighted average of component quantiles on a level grid."""
    mix = laws if isinstance(laws, LawMixture) else LawMixture.from_laws(laws, weights)
    if isinstance(u_grid, (int, np.integer)):
        u, qw = chebyshev_grid(int(u_grid))
    else:
        u = np.asarray(u_grid, dtype=float)
        if quad_weights is None:
            raise DomainError("explicit u grid needs quadrature weights")
        qw = np.asarray(quad_weights, dtype=float)
    z = norm_ppf(u)
    vals = (mix.means[None, :] + mix.stddevs[None, :] * z[:, None]) @ mix.weights
    return QuantileAggregate(u, vals, qw)


def spectral_risk_quantile(q: QuantileAggregate, w: SpectralWeight) -> float:
    """``-int_0^1 q(u) w(u) du`` with the grid's quadrature rule."""
    return -float(np.sum(q.quad_weights * q.values * w(q.u)))


def spectral_risk_components(laws: LawMixture, w: SpectralWeight,
                             u_grid: int = DEFAULT_GRID) -> np.ndarray:
    """Spectral risk of every component, each with the same grid rule as the aggregate."""
    u, qw = chebyshev_grid(u_grid)
    z = norm_ppf(u)
    qs = laws.means[None, :] + laws.stddevs[None, :] * z[:, None]
    return -((qw * w(u)) @ qs)


# --- Cantelli envelope ------------------------------------------------------


def cantelli_envelope(mean: float, stddev: float, r: float, u: float) -> tuple[float, float, float]:
    """Two-sided bound on the averaged quantile at level ``u`` and its midpoint."""
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")
    if stddev < 0 or r < 0:
        raise DomainError("stddev and r must be nonnegative")
    s = stddev + 2.0 * r
    lower = mean - s * math.sqrt((1.0 - u) / u)
    upper = mean + s * math.sqrt(u / (1.0 - u))
    mid = mean + s * (2.0 * u - 1.0) / (2.0 * math.sqrt(u * (1.0 - u)))
    return lower, upper, mid


# --- one-direction Wasserstein family ----------------------------------------


@dataclass
class OneDirectionFamily:
    """Quantile curve ``q_X + a h`` for ``|a| <= radius`` with atoms of ``eta`` on ``a``.

    ``u`` and ``quad_weights`` define the level grid and its quadrature rule;
    ``h`` must be non-decreasing with unit ``L^p`` norm under that rule.
    """

    u: np.ndarray
    quad_weights: np.ndarray
    q_x: np.ndarray
    h: np.ndarray
    atoms: np.ndarray
    masses: np.ndarray
    radius: float
    p: float = 2.0

    def __post_init__(self):
        for name in ("u", "quad_weights", "q_x", "h", "atoms", "masses"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if self.radius < 0:
            raise DomainError("radius must be nonnegative")
        if np.any(np.diff(self.h) < 0):
            raise DomainError("direction h must be non-decreasing")
        if abs(self.lp_norm(self.h) - 1.0) > 1e-10:
            raise DomainError(f"direction h has L^p norm {self.lp_norm(self.h)}, not 1")
        for a in (-self.radius, self.radius):
            if np.any(np.diff(self.q_x + a * self.h) < 0):
                raise DomainError(f"q_X + a h is not a quantile function at a={a}")
        if np.any(self.masses < 0) or self.atoms.shape != self.masses.shape:
            raise DomainError("invalid atoms of eta")

    def lp_norm(self, f) -> float:
        return float(np.sum(self.quad_weights * np.abs(f) ** self.p) ** (1.0 / self.p))

    @classmethod
    def normalized(cls, u, quad_weights, q_x, h_raw, atoms, masses, radius, p=2.0):
        qw = np.asarray(quad_weights, dtype=float)
        h_raw = np.asarray(h_raw, dtype=float)
        norm = float(np.sum(qw * np.abs(h_raw) ** p) ** (1.0 / p))
        return cls(u, qw, q_x, h_raw / norm, atoms, masses, radius, p)


@dataclass
class OneDirectionShift:
    m_xr: float
    base_risk: float
    shifted_risk: float
    bound: float


def one_direction_shift(fam: OneDirectionFamily, kernel: KernelSpec,
                        spectral: SpectralWeight) -> OneDirectionShift:
    """Kernel-weighted mean shift ``m_{X,r}`` and the resulting spectral risk.

    Returns the shift, ``rho_phi(X)``, ``rho_phi(X) - m int h phi`` and the
    bound ``r int |h| phi`` on the change.
    """
    inside = (np.abs(fam.atoms) <= fam.radius) & (fam.masses > 0)
    raw = kernel.weight(np.abs(fam.atoms[inside])) * fam.masses[inside]
    if raw.size == 0 or raw.sum() <= 0:
        raise EmptyBallError("no atoms of eta inside [-r, r]")
    m_xr = float(np.dot(raw, fam.atoms[inside]) / raw.sum())
    phi = spectral(fam.u)
    base = -float(np.sum(fam.quad_weights * fam.q_x * phi))
    h_phi = float(np.sum(fam.quad_weights * fam.h * phi))
    bound = fam.radius * float(np.sum(fam.quad_weights * np.abs(fam.h) * phi))
    return OneDirectionShift(m_xr, base, base - m_xr * h_phi, bound)
