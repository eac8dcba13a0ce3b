"""Experiment runners: one function per experiment id, each returning a table."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .bayes import CSV_COLUMNS, NormalGammaPrior, dominance_chain, sensitivity_sweep
from .chisq import (ChiSqParams, cdf_by_quadrature, noncentral_cdf_dlambda, noncentral_chisq_cdf)
from .config import ExperimentConfig
from .errors import EmptyBallError, TailUnderflowError
from .hilbert import (conditional_mean_v1, noncommuting_limits_table, rho_linear_finite_n,
                      rho_linear_mc, rho_quadratic_components, rho_quadratic_limit)
from .kernel import (BallSpec, GaussianSampler, KernelSpec, avg_risk_mc, large_r_limit_mc,
                     radius_sweep)
from .plotting import Panel, Series, render_panel
from .risk import GaussianLaw, coordinate_functional, es_gaussian, linear_functional
from .rng import STREAM_MISC, substream

NAN = float("nan")


@dataclass
class ResultTable:
    experiment: str
    columns: tuple[str, ...]
    rows: list[list[Any]]
    summary: dict[str, Any] = field(default_factory=dict)
    panels: list[Panel] = field(default_factory=list)

    def column(self, name: str) -> list[Any]:
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))   # shortest round-tripping form
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return ";".join(map(str, v))
    return str(v)


def _law(p) -> GaussianLaw:
    return GaussianLaw(float(p["mu_x"]), float(p["sigma_x"]))


# --- runners -------------------------------------------------------------------


def run_dominance(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    X = _law(p)
    prior = NormalGammaPrior.centered(X, float(p["k"]), float(p["alpha_ng"]))
    rows = dominance_chain(X, p["r_grid"], float(p["lam"]), prior, float(p["level"]), cfg.n_draws,
                           cfg.seed, int(p["n_boot"]))
    table = ResultTable("dominance", CSV_COLUMNS, [row.csv_values() for row in rows])
    r = np.array([row.r for row in rows])
    names = {"rho_base": "base", "rho_avg": "averaging", "rho_qagg": "quantile aggregate",
             "rho_dagg": "distribution aggregate", "rho_wc": "worst case"}
    panel = Panel("dominance", "Dominance chain", "radius r", "expected shortfall")
    for col, label in names.items():
        band = {"rho_avg": "se_avg", "rho_dagg": "se_dagg"}.get(col)
        panel.series.append(Series(label, r, np.array([getattr(x, col) for x in rows]),
                                   None if band is None else 3 * np.array([getattr(x, band) for x in rows])))
    table.panels.append(panel)
    table.summary = {"soft_check_base_above_avg": [x.r for x in rows if "base_above_avg" in x.flags],
                     "low_acceptance_rows": [x.r for x in rows if "low_acceptance" in x.flags]}
    return table


SENSITIVITY_COLUMNS = ("panel", "label", "alpha_ng", "k", "lam", "r", "rho_avg", "se_avg",
                       "acceptance_rate", "large_r_limit", "large_r_se", "flags")


def run_sensitivity(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    X = _law(p)
    curves = sensitivity_sweep(X, p["r_grid"], float(p["level"]), cfg.n_draws, cfg.seed,
                               priors=[tuple(map(float, q)) for q in p["priors"]],
                               panel_a_lambda=float(p["panel_a_lambda"]),
                               lambdas=[float(v) for v in p["lambdas"]],
                               panel_b_prior=tuple(map(float, p["panel_b_prior"])))
    rows = []
    for c in curves:
        for i, r in enumerate(c.r):
            rows.append([c.panel, c.label, c.alpha, c.k, c.lam, float(r), float(c.rho_avg[i]),
                         float(c.se_avg[i]), float(c.acceptance_rate[i]), c.large_r_limit,
                         c.large_r_se, c.flags[i]])
    table = ResultTable("sensitivity", SENSITIVITY_COLUMNS, rows)
    base = es_gaussian(X, float(p["level"]))
    titles = {"a": "Prior concentration", "b": "Kernel decay"}
    for name in ("a", "b"):
        panel = Panel(f"panel-{name}", titles[name], "radius r", "averaged ES")
        for c in (c for c in curves if c.panel == name):
            panel.series.append(Series(c.label, c.r, c.rho_avg, 3 * c.se_avg))
            if math.isfinite(c.large_r_limit):
                panel.series.append(Series(f"limit, {c.label}", c.r, np.array([c.large_r_limit]),
                                           hline=True))
        panel.series.append(Series("base", np.zeros(1), np.array([base]), hline=True))
        table.panels.append(panel)
    table.summary = {"base_risk": base,
                     "large_r_limits": {c.label: c.large_r_limit for c in curves if c.panel == "a"}}
    return table


HILBERT_LINEAR_COLUMNS = ("n", "r", "rho_closed", "rho_mc", "se_mc", "z", "acceptance_rate",
                          "n_retained", "flags")


def run_hilbert_linear(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    rows = []
    for n in map(int, p["dims"]):
        for r in map(float, p["radii"]):
            flags = []
            try:
                closed = rho_linear_finite_n(n, r)
            except TailUnderflowError:
                closed, flags = NAN, ["tail_underflow"]
            mc = se = z = acc = NAN
            kept = 0
            if n <= int(p["mc_max_dim"]):
                try:
                    e = rho_linear_mc(n, r, cfg.n_draws, cfg.seed)
                    mc, se, acc, kept = e.estimate, e.std_error, e.acceptance_rate, e.n_retained
                    z = (mc - closed) / se if se > 0 else NAN
                    flags += list(e.flags)
                except EmptyBallError as exc:
                    acc, kept = exc.acceptance_rate, exc.n_retained
                    flags.append("empty_ball")
            else:
                flags.append("closed_form_only")
            rows.append([n, r, closed, mc, se, z, acc, kept, flags])
    table = ResultTable("hilbert-linear", HILBERT_LINEAR_COLUMNS, rows)
    limits = noncommuting_limits_table(quadratic_draws=min(cfg.n_draws, 1_000_000), seed=cfg.seed)
    table.summary = {"noncommuting_limits": limits,
                     "max_abs_z": _nanmax([abs(row[5]) for row in rows])}
    panel = Panel("closed-vs-mc", "Averaged linear risk", "radius r", "rho")
    for n in map(int, p["dims"]):
        sub = [row for row in rows if row[0] == n]
        panel.series.append(Series(f"n={n}", np.array([s[1] for s in sub]), np.array([s[2] for s in sub])))
    table.panels.append(panel)
    return table


HILBERT_QUADRATIC_COLUMNS = ("n", "r", "mean_v1", "second_moment_v1", "second_moment_se",
                             "rho_mc", "se_mc", "rho_limit", "flags")


def run_hilbert_quadratic(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    rows = []
    for n in map(int, p["dims"]):
        for r in map(float, p["radii"]):
            limit = rho_quadratic_limit(r, int(p["n_proxy"]))
            try:
                c = rho_quadratic_components(n, r, cfg.n_draws, cfg.seed)
                rows.append([n, r, c.mean_term, c.second_moment_term, c.second_moment_se,
                             c.assembled, c.assembled_se, limit, ()])
            except EmptyBallError:
                rows.append([n, r, -2.0 * conditional_mean_v1(n, r), NAN, NAN, NAN, NAN, limit,
                             ("empty_ball",)])
    table = ResultTable("hilbert-quadratic", HILBERT_QUADRATIC_COLUMNS, rows)
    table.summary = {"assembled_limit_r1": rho_quadratic_limit(1.0, int(p["n_proxy"])),
                     "reference": -13.0 / 9.0}
    panel = Panel("quadratic", "Averaged quadratic risk", "radius r", "rho")
    for n in map(int, p["dims"]):
        sub = [row for row in rows if row[0] == n]
        panel.series.append(Series(f"n={n}", np.array([s[1] for s in sub]), np.array([s[5] for s in sub]),
                                   3 * np.array([s[6] for s in sub])))
    table.panels.append(panel)
    return table


CHISQ_COLUMNS = ("check", "k", "lam", "x", "value", "oracle", "gap")


def random_chisq_triples(seed: int, n: int, stream_index: int = 0) -> list[tuple[int, float, float]]:
    """Reproducible ``(k, lam, x)`` triples spanning central, moderate and large noncentrality."""
    rng = substream(seed, STREAM_MISC, stream_index)
    out = []
    for _ in range(n):
        k = int(rng.integers(1, 101))
        lam = float(10.0 ** rng.uniform(-2, 2))
        x = float((k + lam) * 10.0 ** rng.uniform(-0.5, 0.5))
        out.append((k, lam, x))
    return out


def chisq_verification(triples, derivative_triples, fd_step: float) -> list[list]:
    rows = []
    for k, lam, x in triples:
        v = noncentral_chisq_cdf(ChiSqParams(k, lam), x)
        q = cdf_by_quadrature(k, lam, x)
        rows.append(["cdf", k, lam, x, v, q, abs(v - q)])
    for k, lam, x in derivative_triples:
        d = noncentral_cdf_dlambda(ChiSqParams(k, lam), x)
        h = min(fd_step, lam / 2)
        fd = (noncentral_chisq_cdf(ChiSqParams(k, lam + h), x)
              - noncentral_chisq_cdf(ChiSqParams(k, lam - h), x)) / (2 * h)
        rows.append(["dcdf_dlambda", k, lam, x, d, fd, abs(d - fd)])
    return rows


def run_chisq_verify(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    triples = [(int(t[0]), float(t[1]), float(t[2])) for t in p["triples"]]
    triples += random_chisq_triples(cfg.seed, int(p["n_random"]), 0)
    deriv = random_chisq_triples(cfg.seed, int(p["n_derivative"]), 1)
    rows = chisq_verification(triples, deriv, float(p["fd_step"]))
    table = ResultTable("chisq-verify", CHISQ_COLUMNS, rows)
    table.summary = {
        "max_gap_cdf": _nanmax([r[6] for r in rows if r[0] == "cdf"]),
        "max_gap_derivative": _nanmax([r[6] for r in rows if r[0] == "dcdf_dlambda"]),
    }
    return table


SWEEP_COLUMNS = ("r", "estimate", "std_error", "acceptance_rate", "n_retained", "flags")


def _sweep_table(name, rows, title, extra_summary) -> ResultTable:
    table = ResultTable(name, SWEEP_COLUMNS,
                        [[s.r, s.estimate, s.std_error, s.acceptance_rate, s.n_retained, s.flags]
                         for s in rows])
    table.summary = extra_summary
    r = np.array([s.r for s in rows])
    y = np.array([s.estimate for s in rows])
    table.panels.append(Panel("sweep", title, "radius r", "averaged risk",
                              [Series("estimate", r, y, 3 * np.array([s.std_error for s in rows]))]))
    return table


def run_radius_sweep(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.params
    dim = int(p["dim"])
    center = np.asarray(p["center"], float)
    sampler = GaussianSampler.centered(dim, float(p["base_scale"]))
    kernel = KernelSpec(float(p["decay"]), form=p["kernel"])
    rho = linear_functional(p["weights"])
    engine = lambda r: avg_risk_mc(sampler, BallSpec(center, r), kernel, rho, cfg.n_draws, cfg.seed)
    rows = radius_sweep(engine, p["r_grid"], at_zero=float(rho(center)))
    lim = large_r_limit_mc(sampler, center, kernel, rho, cfg.n_draws, cfg.seed)
    return _sweep_table("radius-sweep", rows, "Radius sweep",
                        {"rho_center": float(rho(center)), "large_r_limit": lim.estimate,
                         "large_r_se": lim.std_error})


def run_counterexample(cfg: ExperimentConfig) -> ResultTable:
    """Untranslated 2-D standard Gaussian base, flat kernel, ``rho(z) = -z_1``."""
    p = cfg.params
    center = np.asarray(p["center"], float)
    sampler = GaussianSampler(np.zeros(2))
    kernel = KernelSpec(form="uniform")
    rho = coordinate_functional(0)
    engine = lambda r: avg_risk_mc(sampler, BallSpec(center, r), kernel, rho, cfg.n_draws, cfg.seed)
    rows = radius_sweep(engine, p["r_grid"], at_zero=float(rho(center)))
    est = [s.estimate for s in rows]
    decreasing = [i for i in range(len(est) - 1) if est[i + 1] < est[i]]
    lim = large_r_limit_mc(sampler, center, kernel, rho, cfg.n_draws, cfg.seed)
    return _sweep_table("counterexample", rows, "Non-monotone averaged risk",
                        {"rho_center": float(rho(center)), "large_r_limit": lim.estimate,
                         "large_r_se": lim.std_error, "decreasing_segments": decreasing})


RUNNERS: dict[str, Callable[[ExperimentConfig], ResultTable]] = {
    "dominance": run_dominance,
    "sensitivity": run_sensitivity,
    "hilbert-linear": run_hilbert_linear,
    "hilbert-quadratic": run_hilbert_quadratic,
    "chisq-verify": run_chisq_verify,
    "radius-sweep": run_radius_sweep,
    "counterexample": run_counterexample,
}


def _nanmax(vals) -> float:
    vals = [v for v in vals if isinstance(v, float) and math.isfinite(v)]
    return max(vals) if vals else NAN


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class RunOutput:
    table: ResultTable
    csv_path: Path
    meta_path: Path
    figures: list[Path]
    wall_time: float


def run(cfg: ExperimentConfig) -> RunOutput:
    """Execute one experiment and write its CSV, metadata sidecar and optional figures."""
    t0 = time.perf_counter()
    table = RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - t0
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.experiment}-{cfg.seed}"
    csv_path = out / f"{stem}.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table.to_csv())
    figures = []
    if cfg.plots:
        for panel in table.panels:
            figures.append(render_panel(panel, out / f"{stem}-{panel.name}.svg"))
    meta = {"config": cfg.echo(), "version": __version__, "wall_time_s": wall,
            "columns": list(table.columns), "n_rows": len(table.rows),
            "summary": _jsonable(table.summary), "figures": [f.name for f in figures]}
    meta_path = out / f"{stem}.json"
    with open(meta_path, "w", encoding="utf-8", newline="") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunOutput(table, csv_path, meta_path, figures, wall)
