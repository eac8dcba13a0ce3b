"""Finite-dimensional Gaussian example with linear and quadratic risk.

Setup: base ``N(0, I_n)``, center ``X = e_1``, kernel ``exp(-t^2)``. Completing
the square turns the kernel-weighted base into the tilted law
``N(2/3 e_1, 1/3 I_n)``, and ``V = u - X ~ N(-1/3 e_1, 1/3 I_n)``. The
conditional mean of ``V_1`` on ``|V| <= r`` is ``m_1 F_{n+2}/F_n`` evaluated
at ``3 r^2`` with noncentrality ``1/3``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chisq import cdf_ratio, noncentral_chisq_cdf, ChiSqParams
from .errors import DomainError, EmptyBallError
from .kernel import BallSpec, GaussianSampler, KernelSpec, MCEstimate, avg_risk_mc
from .risk import coordinate_functional, negative_square_coordinate
from .rng import STREAM_TILTED, substream

TILT_MEAN = Fraction(2, 3)
TILT_VAR = Fraction(1, 3)
OFFSET = Fraction(-1, 3)             # m_1, first coordinate of E[V]
NONCENTRALITY = OFFSET**2 / TILT_VAR  # |m|^2 / sigma^2 = 1/3
SECOND_MOMENT_LIMIT = TILT_VAR + OFFSET**2  # Var(V_1) + E[V_1]^2 = 4/9

# Finite stand-ins for n -> infinity and r -> infinity.
N_PROXY = 100_000
R_PROXY = 1_000.0


@dataclass(frozen=True)
class HilbertExperiment:
    dim: int
    radius: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError("dimension must be a positive integer")
        if not self.radius > 0:
            raise DomainError("radius must be positive")

    @property
    def center(self) -> np.ndarray:
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        return e1

    @property
    def chisq_argument(self) -> float:
        return self.radius**2 / float(TILT_VAR)


def ball_probability(n: int, r: float) -> float:
    """``P(|V| <= r)`` under the tilted law, ``F_n(3 r^2; 1/3)``."""
    exp = HilbertExperiment(n, r)
    return noncentral_chisq_cdf(ChiSqParams(n, float(NONCENTRALITY)), exp.chisq_argument)


def conditional_mean_v1(n: int, r: float) -> float:
    """``E[V_1 | |V| <= r] = m_1 F_{n+2}(3 r^2; 1/3) / F_n(3 r^2; 1/3)``."""
    exp = HilbertExperiment(n, r)
    return float(OFFSET) * cdf_ratio(n, float(NONCENTRALITY), exp.chisq_argument)


def rho_linear_finite_n(n: int, r: float) -> float:
    """Averaged ``rho(Z) = -Z_1`` in dimension ``n``: ``-1 - E[V_1 | |V| <= r]``."""
    return -1.0 - conditional_mean_v1(n, r)


def rho_linear_mc(n: int, r: float, n_draws: int, seed: int, sampler: str = "base") -> MCEstimate:
    """Monte Carlo estimate of the averaged linear risk.

    ``sampler="base"`` draws from ``N(0, I_n)`` with the kernel
    ``exp(-t^2)``; its acceptance rate is ``F_n(r^2; 1)``. ``sampler="tilted"``
    draws from ``N(2/3 e_1, 1/3 I_n)`` with a flat kernel; its acceptance rate
    is ``F_n(3 r^2; 1/3)``. Both target the same value.
    """
    exp = HilbertExperiment(n, r)
    ball = BallSpec(exp.center, r)
    rho = coordinate_functional(0)
    if sampler == "base":
        return avg_risk_mc(GaussianSampler(np.zeros(n)), ball, KernelSpec(1.0), rho, n_draws, seed)
    if sampler == "tilted":
        tilted = GaussianSampler(float(TILT_MEAN) * exp.center, math.sqrt(float(TILT_VAR)))
        return avg_risk_mc(tilted, ball, KernelSpec(form="uniform"), rho, n_draws, seed)
    raise DomainError(f"unknown sampler {sampler!r}")


@dataclass
class TiltedMoments:
    mean_v1: float
    mean_v1_se: float
    second_v1: float
    second_v1_se: float
    acceptance_rate: float
    n_retained: int


def tilted_conditional_moments(n: int, r: float, n_draws: int, seed: int,
                               chunk: int = 1 << 16) -> TiltedMoments:
    """Rejection estimate of ``E[V_1 | .]`` and ``E[V_1^2 | .]`` under the tilted law."""
    HilbertExperiment(n, r)
    sd = math.sqrt(float(TILT_VAR))
    v1_all, kept = [], 0
    start, idx = 0, 0
    while start < n_draws:
        m = min(chunk, n_draws - start)
        v = sd * substream(seed, STREAM_TILTED, idx).standard_normal((m, n))
        v[:, 0] += float(OFFSET)
        inside = np.einsum("ij,ij->i", v, v) <= r * r
        v1_all.append(v[inside, 0])
        kept += int(inside.sum())
        start += m
        idx += 1
    v1 = np.concatenate(v1_all)
    if kept == 0:
        raise EmptyBallError("no tilted draws inside the ball", 0.0, 0)
    se = lambda a: float(a.std(ddof=1) / math.sqrt(a.size)) if a.size > 1 else float("inf")
    return TiltedMoments(float(v1.mean()), se(v1), float((v1**2).mean()), se(v1**2),
                         kept / n_draws, kept)


@dataclass
class QuadraticComponents:
    mean_term: float
    second_moment_term: float
    second_moment_se: float
    assembled: float
    assembled_se: float


def rho_quadratic_components(n: int, r: float, n_draws: int, seed: int) -> QuadraticComponents:
    """Decompose averaged ``rho(Z) = -Z_1^2`` as ``-1 - 2 E[V_1|.] - E[V_1^2|.]``.

    The mean term is the closed form; the second moment comes from rejection
    sampling under the tilted law.
    """
    mean = conditional_mean_v1(n, r)
    mom = tilted_conditional_moments(n, r, n_draws, seed)
    assembled = -1.0 - 2.0 * mean - mom.second_v1
    return QuadraticComponents(mean, mom.second_v1, mom.second_v1_se, assembled, mom.second_v1_se)


def rho_quadratic_mc(n: int, r: float, n_draws: int, seed: int) -> MCEstimate:
    """Direct estimate of ``E[-u_1^2 | |u - e_1| <= r]`` under the tilted law."""
    exp = HilbertExperiment(n, r)
    tilted = GaussianSampler(float(TILT_MEAN) * exp.center, math.sqrt(float(TILT_VAR)))
    return avg_risk_mc(tilted, BallSpec(exp.center, r), KernelSpec(form="uniform"),
                       negative_square_coordinate(0), n_draws, seed)


def rho_quadratic_limit(r: float, n_proxy: int = N_PROXY) -> float:
    """Large-dimension assembly ``-1 - 2 E[V_1|.] - 4/9`` with the mean term at ``n_proxy``."""
    return -1.0 - 2.0 * conditional_mean_v1(n_proxy, r) - float(SECOND_MOMENT_LIMIT)


def noncommuting_limits_table(quadratic_draws: int = 1_000_000, seed: int = 0) -> list[dict]:
    """Iterated limits in ``n`` and ``r`` evaluated at finite proxies.

    The linear rows carry the exact limits -1 and -2/3. The quadratic rows are
    reported without a reference value except where the limit is known.
    """
    rows = []
    inner_n = [rho_linear_finite_n(N_PROXY, r) for r in (0.5, 1.0, 2.0)]
    rows.append(dict(functional="linear", order="lim_r lim_n", proxy=f"n={N_PROXY}, r=1",
                     value=rho_linear_finite_n(N_PROXY, 1.0), reference=-1.0,
                     spread=max(inner_n) - min(inner_n)))
    inner_r = [rho_linear_finite_n(n, R_PROXY) for n in (5, 50, 500)]
    rows.append(dict(functional="linear", order="lim_n lim_r", proxy=f"n=5, r={R_PROXY:g}",
                     value=rho_linear_finite_n(5, R_PROXY), reference=-2.0 / 3.0,
                     spread=max(inner_r) - min(inner_r)))
    rows.append(dict(functional="quadratic", order="lim_r lim_n", proxy=f"n={N_PROXY}, r=1",
                     value=rho_quadratic_limit(1.0), reference=-13.0 / 9.0, spread=0.0))
    for order, r, ref in (("lim_n lim_r", R_PROXY, None), ("fixed n, r->0", 0.1, -1.0)):
        try:
            e = rho_quadratic_mc(4, r, quadratic_draws, seed)
            value, spread = e.estimate, e.std_error
        except EmptyBallError:
            value = spread = float("nan")
        rows.append(dict(functional="quadratic", order=order, proxy=f"n=4, r={r:g} (MC)",
                         value=value, reference=ref, spread=spread))
    return rows
