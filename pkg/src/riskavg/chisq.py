"""Central and non-central chi-squared cdfs.

The central cdf is the regularised lower incomplete gamma ``P(m/2, x/2)``,
evaluated by its power series for ``x < a + 1`` and by a Lentz continued
fraction for the complement otherwise. The non-central cdf is the Poisson
mixture ``F_k(x; lam) = sum_j p_j(lam) F_{chi2_{k+2j}}(x)`` summed outward
from the Poisson mode. Everything is carried in log space so that deep-tail
ratios (dimension ~1e5) stay representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ive

from .errors import ConvergenceError, DomainError, TailUnderflowError

EPS = 1e-16
MAX_ITER = 200_000
TINY = 1e-300
# Poisson tail mass discarded on each side of the mode.
DEFAULT_TAIL = 1e-14
# Relative size of the dropped terms compared with the running sum.
REL_TAIL = 1e-17


@dataclass(frozen=True)
class ChiSqParams:
    dof: int
    lam: float = 0.0

    def __post_init__(self):
        if int(self.dof) != self.dof or self.dof < 1:
            raise DomainError(f"dof must be a positive integer, got {self.dof}")
        if not self.lam >= 0:
            raise DomainError(f"noncentrality must be nonnegative, got {self.lam}")


# --- incomplete gamma ------------------------------------------------------


def _log_prefactor(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _series_sum(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * EPS:
            return total
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _continued_fraction(a: float, x: float) -> float:
    """Modified Lentz evaluation of the continued fraction for ``Q(a, x)`` without its prefactor."""
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def log_gamma_p(a: float, x: float) -> float:
    """``log P(a, x)``, the log regularised lower incomplete gamma function."""
    if a <= 0:
        raise DomainError("gamma shape must be positive")
    if x < 0:
        raise DomainError("incomplete gamma argument must be nonnegative")
    if x == 0:
        return -math.inf
    if x < a + 1.0:
        return _log_prefactor(a, x) + math.log(_series_sum(a, x))
    q = math.exp(_log_prefactor(a, x)) * _continued_fraction(a, x)
    return math.log1p(-q)


def gamma_p(a: float, x: float) -> float:
    return math.exp(log_gamma_p(a, x))


def gamma_q(a: float, x: float) -> float:
    """Upper regularised incomplete gamma ``1 - P(a, x)``, accurate in the upper tail."""
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return -math.expm1(log_gamma_p(a, x))
    return math.exp(_log_prefactor(a, x)) * _continued_fraction(a, x)


def log_central_chisq_cdf(m: int, x: float) -> float:
    if m < 1:
        raise DomainError("dof must be positive")
    if x < 0:
        raise DomainError("chi-squared argument must be nonnegative")
    return log_gamma_p(0.5 * m, 0.5 * x)


def central_chisq_cdf(m: int, x: float) -> float:
    return math.exp(log_central_chisq_cdf(m, x))


def log_central_cdf_asymptotic(m: int, x: float) -> float:
    """Log of the large-dof approximation ``exp(-x/2) / sqrt(pi m) * (e x / m)^(m/2)``."""
    if x <= 0:
        raise DomainError("asymptotic form needs x > 0")
    return -0.5 * x - 0.5 * math.log(math.pi * m) + 0.5 * m * (1.0 + math.log(x) - math.log(m))


def central_cdf_asymptotic(m: int, x: float) -> float:
    return math.exp(log_central_cdf_asymptotic(m, x))


# --- Poisson mixture -------------------------------------------------------


def _log_poisson(j: int, mu: float) -> float:
    if mu == 0:
        return 0.0 if j == 0 else -math.inf
    return -mu + j * math.log(mu) - math.lgamma(j + 1.0)


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


@dataclass(frozen=True)
class MixtureResult:
    log_value: float
    error_bound: float
    j_low: int
    j_high: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def noncentral_mixture(k: int, lam: float, x: float, tail: float = DEFAULT_TAIL,
                       rel_tail: float = REL_TAIL) -> MixtureResult:
    """Log of the truncated Poisson mixture plus an absolute truncation bound.

    Terms are added outward from the mode ``floor(lam/2)``. A side stops once
    its remaining Poisson mass is below ``tail`` and the dropped terms are
    below ``rel_tail`` relative to the running sum. Because the central cdfs
    decrease in the dof, each remaining tail is bounded by its Poisson mass
    times the largest cdf on that side.
    """
    ChiSqParams(k, lam)
    if x < 0:
        raise DomainError("chi-squared argument must be nonnegative")
    if x == 0:
        return MixtureResult(-math.inf, 0.0, 0, 0)
    mu = 0.5 * lam
    if mu == 0:
        return MixtureResult(log_central_chisq_cdf(k, x), 0.0, 0, 0)
    mode = int(math.floor(mu))
    log_f_k = log_central_chisq_cdf(k, x)
    total = -math.inf

    # upward from the mode
    j = mode
    up_bound = 0.0
    while True:
        lf = log_central_chisq_cdf(k + 2 * j, x)
        total = _logaddexp(total, _log_poisson(j, mu) + lf)
        nxt = j + 1
        if nxt + 1 > mu:
            # sum_{i > j} p_i <= p_{j+1} / (1 - mu / (j + 2))
            log_mass = _log_poisson(nxt, mu) - math.log1p(-mu / (nxt + 1))
            if log_mass < math.log(tail) and log_mass + lf < total + math.log(rel_tail):
                up_bound = math.exp(log_mass + lf)
                break
        j = nxt
        if j - mode > MAX_ITER:
            raise ConvergenceError("Poisson mixture did not converge upward")
    j_high = j

    # downward from the mode
    j = mode
    low_bound = 0.0
    while j > 0:
        prev = j - 1
        # sum_{i <= prev} p_i <= p_prev / (1 - prev / mu), valid since prev < mu
        log_mass = _log_poisson(prev, mu) - math.log1p(-prev / mu)
        if log_mass < math.log(tail) and log_mass + log_f_k < total + math.log(rel_tail):
            low_bound = math.exp(log_mass + log_f_k)
            break
        total = _logaddexp(total, _log_poisson(prev, mu) + log_central_chisq_cdf(k + 2 * prev, x))
        j = prev
    return MixtureResult(total, up_bound + low_bound, j, j_high)


def _unpack(p, x_or_none):
    if isinstance(p, ChiSqParams):
        return p.dof, p.lam
    return p


def log_noncentral_chisq_cdf(p: ChiSqParams, x: float) -> float:
    k, lam = _unpack(p, None)
    return noncentral_mixture(k, lam, x).log_value


def noncentral_chisq_cdf(p: ChiSqParams, x: float) -> float:
    """``P(chi2_k(lam) <= x)`` via the Poisson mixture of central cdfs."""
    k, lam = _unpack(p, None)
    return min(1.0, noncentral_mixture(k, lam, x).value)


def noncentral_cdf_dlambda(p: ChiSqParams, x: float) -> float:
    """Derivative in the noncentrality: ``(F_{k+2}(x; lam) - F_k(x; lam)) / 2``."""
    k, lam = _unpack(p, None)
    return 0.5 * (noncentral_chisq_cdf(ChiSqParams(k + 2, lam), x)
                  - noncentral_chisq_cdf(ChiSqParams(k, lam), x))


def cdf_ratio(n: int, lam: float, x: float) -> float:
    """``F_{n+2}(x; lam) / F_n(x; lam)`` evaluated as a difference of logs."""
    if x <= 0:
        raise DomainError("cdf_ratio needs x > 0")
    num = noncentral_mixture(n + 2, lam, x).log_value
    den = noncentral_mixture(n, lam, x).log_value
    if not (math.isfinite(num) and math.isfinite(den)):
        raise TailUnderflowError(f"chi-squared cdfs underflow at n={n}, lam={lam}, x={x}")
    return math.exp(num - den)


# --- independent density and quadrature oracle -----------------------------


def noncentral_chisq_pdf(k: int, lam: float, x):
    """Density via the Bessel form ``0.5 e^{-(x+lam)/2} (x/lam)^{k/4-1/2} I_{k/2-1}(sqrt(lam x))``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    if lam == 0:
        h = 0.5 * k
        out[pos] = np.exp((h - 1.0) * np.log(xp) - 0.5 * xp - h * math.log(2.0) - math.lgamma(h))
        return out
    z = np.sqrt(lam * xp)
    v = 0.5 * k - 1.0
    with np.errstate(divide="ignore"):   # ive underflows to 0 at huge order; exp(-inf) = 0 is right
        logf = (math.log(0.5) - 0.5 * (xp + lam) + (0.25 * k - 0.5) * np.log(xp / lam)
                + np.log(ive(v, z)) + z)
    out[pos] = np.exp(logf)
    return out


def cdf_by_quadrature(k: int, lam: float, x: float) -> float:
    """Adaptive quadrature of :func:`noncentral_chisq_pdf` on ``[0, x]``.

    Substituting ``x = t^2`` removes the ``x^{-1/2}`` singularity at 1 dof.
    """
    if x <= 0:
        return 0.0

    def f(t):
        return float(noncentral_chisq_pdf(k, lam, np.array([t * t]))[0] * 2.0 * t)

    val, _ = integrate.quad(f, 0.0, math.sqrt(x), epsabs=1e-15, epsrel=1e-13, limit=500)
    return val
