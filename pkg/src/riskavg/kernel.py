"""Kernel-weighted averaging of a risk functional over an uncertainty ball.

The averaging measure restricts a base measure to the closed ball
``B(X, r)``, reweights each point ``Z`` by ``phi(d(X, Z))`` and normalises by
the kernel mass ``K(X, r)``. Two engines are provided: an exact one for
discrete base measures and a self-normalised Monte Carlo one.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .errors import DomainError, EmptyBallError
from .risk import RiskFunctional
from .rng import STREAM_MC, substream

# Kernel mass below this is treated as an empty ball.
EMPTY_MASS = 1e-300
# Slack on ball membership and weight normalisation.
SUPPORT_TOL = 1e-12
# Rows with fewer retained draws are flagged.
MIN_RETAINED = 100
DEFAULT_CHUNK = 1 << 16

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]


def euclidean(center: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distances from ``center`` to every row of ``points``."""
    return np.sqrt(np.sum((np.atleast_2d(points) - np.asarray(center, dtype=float)) ** 2, axis=1))


@dataclass(frozen=True)
class KernelSpec:
    """Decreasing weight on distance to the center.

    ``form`` is ``"gaussian"`` for ``exp(-decay t^2)``, ``"uniform"`` for a
    constant weight, or ``"custom"`` with a vectorised ``fn``.
    """

    decay: float = 1.0
    form: str = "gaussian"
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.form not in ("gaussian", "uniform", "custom"):
            raise DomainError(f"unknown kernel form {self.form!r}")
        if self.decay < 0:
            raise DomainError("kernel decay must be nonnegative")
        if self.form == "custom" and self.fn is None:
            raise DomainError("custom kernel needs fn")

    def weight(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("kernel argument must be nonnegative")
        if self.form == "uniform":
            return np.ones_like(t)
        if self.form == "gaussian":
            return np.exp(-self.decay * t * t)
        return np.asarray(self.fn(t), dtype=float)

    def log_weight(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.form == "uniform":
            return np.zeros_like(t)
        if self.form == "gaussian":
            return -self.decay * t * t
        return np.log(self.weight(t))

    def with_decay(self, decay: float) -> "KernelSpec":
        return KernelSpec(decay=decay, form=self.form, fn=self.fn)


def kernel_weight(k: KernelSpec, t: float) -> float:
    if t < 0:
        raise DomainError("kernel argument must be nonnegative")
    return float(k.weight(np.array([t]))[0])


@dataclass(frozen=True)
class BallSpec:
    center: np.ndarray
    radius: float
    metric: Metric = euclidean

    def __post_init__(self):
        if not self.radius >= 0:
            raise DomainError(f"ball radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    def distances(self, points) -> np.ndarray:
        return np.asarray(self.metric(self.center, np.atleast_2d(points)), dtype=float)

    def with_radius(self, r: float) -> "BallSpec":
        return BallSpec(self.center, r, self.metric)


@dataclass
class WeightedCloud:
    """Finite discretisation of the averaging measure: points with normalised weights."""

    points: np.ndarray
    weights: np.ndarray
    distances: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape[0] != self.points.shape[0]:
            raise DomainError("points and weights differ in length")
        if np.any(self.weights < 0):
            raise DomainError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > SUPPORT_TOL:
            raise DomainError("cloud weights must sum to 1")

    def __len__(self):
        return self.weights.shape[0]

    def mean(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def coordinate_means(self) -> np.ndarray:
        return self.weights @ self.points


def _normalise(raw: np.ndarray) -> np.ndarray:
    w = raw / raw.sum()
    # a second pass pulls the sum to within an ulp or two of one
    return w / w.sum()


# --- discrete engine -------------------------------------------------------


def avg_risk_discrete(atoms: Iterable[tuple[Sequence[float], float]], ball: BallSpec,
                      k: KernelSpec, rho: RiskFunctional) -> tuple[float, WeightedCloud]:
    """Exact average over the atoms of a discrete base measure inside the ball."""
    atoms = list(atoms)
    if not atoms:
        raise EmptyBallError("no atoms given")
    pts = np.array([np.atleast_1d(np.asarray(p, dtype=float)) for p, _ in atoms])
    mass = np.array([float(m) for _, m in atoms])
    if np.any(mass < 0):
        raise DomainError("atom masses must be nonnegative")
    d = ball.distances(pts)
    inside = (d <= ball.radius) & (mass > 0)
    raw = mass[inside] * k.weight(d[inside])
    if raw.size == 0 or raw.sum() < EMPTY_MASS:
        raise EmptyBallError("kernel mass inside the ball is zero")
    w = _normalise(raw)
    cloud = WeightedCloud(pts[inside], w, d[inside])
    value = float(np.dot(w, rho.evaluate(cloud.points)))
    return value, cloud


def symmetric_atoms(center, p0: float, offsets, masses) -> list[tuple[np.ndarray, float]]:
    """Translated symmetric discrete measure ``p0 d_X + sum p_i (d_{X+Z_i} + d_{X-Z_i})``."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    masses = [float(m) for m in masses]
    total = p0 + 2.0 * sum(masses)
    if abs(total - 1.0) > 1e-12:
        raise DomainError(f"masses must satisfy p0 + 2 sum p_i = 1, got {total}")
    atoms = [(center, p0)] if p0 > 0 else []
    for z, m in zip(offsets, masses):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        atoms.append((center + z, m))
        atoms.append((center - z, m))
    return atoms


# --- samplers --------------------------------------------------------------


class BaseSampler(Protocol):
    """Draws i.i.d. payoff points from the base measure around a center."""

    dim: int
    translation: bool

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray: ...


@dataclass(frozen=True)
class GaussianSampler:
    """Isotropic Gaussian ``N(mean, scale**2 I)``.

    With ``translation=True`` draws are offsets added to the ball center, i.e.
    ``gamma_X(A) = gamma_0(A - X)``.
    """

    mean: np.ndarray
    scale: float = 1.0
    translation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        if self.scale <= 0:
            raise DomainError("scale must be positive")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.mean + self.scale * rng.standard_normal((n, self.dim))

    @classmethod
    def centered(cls, dim: int, scale: float = 1.0) -> "GaussianSampler":
        """Translated symmetric base with ``gamma_0 = N(0, scale^2 I)``."""
        return cls(np.zeros(dim), scale, translation=True)


# --- Monte Carlo engine ----------------------------------------------------


@dataclass
class MCEstimate:
    estimate: float
    std_error: float
    acceptance_rate: float
    n_retained: int
    n_draws: int
    max_risk: float = float("nan")
    cloud: WeightedCloud | None = field(default=None, repr=False)

    @property
    def flags(self) -> tuple[str, ...]:
        return ("low_acceptance",) if self.n_retained < MIN_RETAINED else ()


def _chunks(n_draws: int, chunk: int):
    start = 0
    idx = 0
    while start < n_draws:
        m = min(chunk, n_draws - start)
        yield idx, m
        start += m
        idx += 1


def _collect(sampler: BaseSampler, ball: BallSpec | None, k: KernelSpec, n_draws: int,
             seed: int, chunk: int, center, workers: int = 1):
    """Retained points, log-weights and distances across all chunks, in chunk order."""

    def one(job):
        idx, m = job
        z = sampler.draw(substream(seed, STREAM_MC, idx), m)
        if sampler.translation:
            z = z + center
        d = euclidean(center, z) if ball is None else ball.distances(z)
        keep = slice(None) if ball is None else d <= ball.radius
        return z[keep], k.log_weight(d[keep]), d[keep]

    jobs = list(_chunks(n_draws, chunk))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(j) for j in jobs]
    pts, logw, dist = zip(*parts)
    return np.concatenate(pts), np.concatenate(logw), np.concatenate(dist)


def ratio_estimate(logw: np.ndarray, values: np.ndarray, n_draws: int) -> tuple[float, float, np.ndarray]:
    """Self-normalised estimate with delta-method standard error.

    ``logw`` are log kernel weights of the retained draws; rejected draws have
    weight zero and only enter through ``n_draws``.
    """
    w = np.exp(logw - logw.max())
    s = w.sum()
    est = float(np.dot(w, values) / s)
    if n_draws < 2:
        return est, float("inf"), w / s
    # var(R) ~ sum w_i^2 (f_i - R)^2 / (sum w_i)^2 with the n/(n-1) correction
    resid = values - est
    var = float(np.sum((w * resid) ** 2) / s**2) * n_draws / (n_draws - 1)
    return est, math.sqrt(var), w / s


def weighted_cloud_mc(sampler: BaseSampler, ball: BallSpec | None, k: KernelSpec, n_draws: int,
                      seed: int, chunk: int = DEFAULT_CHUNK, center=None, workers: int = 1):
    """Draw from the base measure and return the retained, normalised cloud.

    Returns ``(cloud, acceptance_rate, raw_logw)``. ``ball=None`` skips the
    ball restriction (large-radius limit). Raises :class:`EmptyBallError`
    when no draw is retained.
    """
    if n_draws < 1:
        raise DomainError("n_draws must be at least 1")
    if center is None:
        if ball is None:
            raise DomainError("center required when ball is None")
        center = ball.center
    center = np.atleast_1d(np.asarray(center, dtype=float))
    pts, logw, dist = _collect(sampler, ball, k, n_draws, seed, chunk, center, workers)
    rate = pts.shape[0] / n_draws
    if pts.shape[0] == 0 or not np.isfinite(logw).any():
        raise EmptyBallError("no draws inside the ball", acceptance_rate=rate, n_retained=pts.shape[0])
    w = np.exp(logw - logw.max())
    return WeightedCloud(pts, _normalise(w), dist), rate, logw


def avg_risk_mc(sampler: BaseSampler, ball: BallSpec, k: KernelSpec, rho: RiskFunctional,
                n_draws: int, seed: int, chunk: int = DEFAULT_CHUNK,
                keep_cloud: bool = False, workers: int = 1) -> MCEstimate:
    """Self-normalised Monte Carlo estimate of the ball average of ``rho``.

    The draw stream depends only on ``(seed, n_draws, chunk)``, so rerunning
    with another radius reuses the same draws (common random numbers) and
    the result does not depend on ``workers``.
    """
    cloud, rate, logw = weighted_cloud_mc(sampler, ball, k, n_draws, seed, chunk, workers=workers)
    vals = rho.evaluate(cloud.points)
    est, se, _ = ratio_estimate(logw, vals, n_draws)
    return MCEstimate(est, se, rate, len(cloud), n_draws, float(vals.max()),
                      cloud if keep_cloud else None)


def large_r_limit_mc(sampler: BaseSampler, center, k: KernelSpec, rho: RiskFunctional,
                     n_draws: int, seed: int, chunk: int = DEFAULT_CHUNK,
                     keep_cloud: bool = False, workers: int = 1) -> MCEstimate:
    """Ball-free tilted average ``sum phi(d) rho / sum phi(d)``."""
    cloud, rate, logw = weighted_cloud_mc(sampler, None, k, n_draws, seed, chunk, center=center,
                                          workers=workers)
    vals = rho.evaluate(cloud.points)
    est, se, _ = ratio_estimate(logw, vals, n_draws)
    return MCEstimate(est, se, rate, len(cloud), n_draws, float(vals.max()),
                      cloud if keep_cloud else None)


# --- sweeps and stability checks -------------------------------------------


@dataclass
class SweepRow:
    r: float
    estimate: float
    std_error: float
    acceptance_rate: float
    n_retained: int
    flags: tuple[str, ...] = ()


def radius_sweep(engine: Callable[[float], MCEstimate], grid: Sequence[float],
                 at_zero: float | None = None) -> list[SweepRow]:
    """Evaluate ``engine`` along a sorted radius grid.

    ``engine`` should reuse one seed so all radii share a draw stream. At
    ``r = 0`` the row takes ``at_zero`` (the small-radius limit) when given.
    Failures become flagged rows instead of aborting the sweep.
    """
    grid = [float(r) for r in grid]
    if any(r < 0 for r in grid) or grid != sorted(grid):
        raise DomainError("radius grid must be sorted and nonnegative")
    rows = []
    for r in grid:
        if r == 0.0 and at_zero is not None:
            rows.append(SweepRow(r, float(at_zero), 0.0, float("nan"), 0, ("r0_limit",)))
            continue
        try:
            e = engine(r)
        except EmptyBallError as exc:
            rows.append(SweepRow(r, float("nan"), float("nan"), exc.acceptance_rate,
                                 exc.n_retained, ("empty_ball",)))
            continue
        rows.append(SweepRow(r, e.estimate, e.std_error, e.acceptance_rate, e.n_retained, e.flags))
    return rows


@dataclass
class ContinuityCheck:
    base: float
    perturbed: float
    gap: float


def perturbation_continuity_check(k: KernelSpec, delta: float,
                                  engine: Callable[[KernelSpec], float],
                                  other: KernelSpec | None = None) -> ContinuityCheck:
    """Compare the averaging functional under decay ``lambda`` and ``lambda + delta``.

    ``engine`` must reuse one random stream. Pass ``other`` to compare against
    an arbitrary second kernel instead.
    """
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    base = float(engine(k))
    pert = float(engine(other if other is not None else k.with_decay(k.decay + delta)))
    return ContinuityCheck(base, pert, abs(pert - base))
