"""Experiment configuration: YAML ingestion, defaults and validation."""
from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .errors import ConfigError
from .rng import MAX_SEED

EXPERIMENTS = ("dominance", "sensitivity", "hilbert-linear", "hilbert-quadratic",
               "chisq-verify", "radius-sweep", "counterexample")

ENV_SEED = "RISKAVG_SEED"
ENV_OUT = "RISKAVG_OUT"

DEFAULT_GRID = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0,
              1.25, 1.5, 1.75, 2.0]


@dataclass(frozen=True)
class Param:
    default: Any
    check: Callable[[Any], str | None]
    module: str


def _num(lo=None, hi=None, strict_lo=False, integer=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return "must be a number"
        if integer and int(v) != v:
            return "must be an integer"
        if lo is not None and (v <= lo if strict_lo else v < lo):
            return f"must be {'>' if strict_lo else '>='} {lo}"
        if hi is not None and v >= hi:
            return f"must be < {hi}"
        return None
    return check


def _open_unit(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v < 1:
        return "must lie in (0, 1)"
    return None


def _alpha_ng(v):
    err = _num()(v)
    if err:
        return err
    if not v > 1:
        return "must exceed 1: the gamma sampler requires shape > 1"
    return None


def _list_of(item, min_len=1, sorted_=False):
    def check(v):
        if not isinstance(v, list) or len(v) < min_len:
            return f"must be a list with at least {min_len} entries"
        for i, x in enumerate(v):
            err = item(x)
            if err:
                return f"entry {i} {err}"
        if sorted_ and list(v) != sorted(v):
            return "must be sorted ascending"
        return None
    return check


def _radius_grid(v):
    err = _list_of(_num(0.0), sorted_=True)(v)
    if err and isinstance(v, list) and any(isinstance(x, (int, float)) and x < 0 for x in v):
        return "radii must be nonnegative (range error)"
    return err


def _pair(first, second):
    def check(v):
        if not isinstance(v, list) or len(v) != 2:
            return "must be a pair [a, b]"
        return first(v[0]) or second(v[1])
    return check


def _triple(v):
    if not isinstance(v, list) or len(v) != 3:
        return "must be a triple [k, lam, x]"
    return _num(1, integer=True)(v[0]) or _num(0.0)(v[1]) or _num(0.0)(v[2])


def _bool(v):
    return None if isinstance(v, bool) else "must be true or false"


def _choice(*opts):
    return lambda v: None if v in opts else f"must be one of {', '.join(map(str, opts))}"


def _vector(v):
    return _list_of(_num())(v)


_BW = "riskavg.bayes"
_GH = "riskavg.hilbert"
_KB = "riskavg.kernel"
_CS = "riskavg.chisq"
_CLI = "riskavg.cli"

COMMON = {
    "seed": Param(0, _num(0, MAX_SEED + 1, integer=True), _CLI),
    "n_draws": Param(100_000, _num(1, integer=True), _KB),
    "output_dir": Param("results", lambda v: None if isinstance(v, str) else "must be a string",
                        _CLI),
    "plots": Param(False, _bool, _CLI),
}

_GAUSS_X = {
    "mu_x": Param(0.0, _num(), _BW),
    "sigma_x": Param(1.0, _num(0.0, strict_lo=True), _BW),
    "level": Param(0.95, _open_unit, "riskavg.risk"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "dominance": {
        **_GAUSS_X,
        "lam": Param(2.0, _num(0.0), _KB),
        "alpha_ng": Param(25.0, _alpha_ng, _BW),
        "k": Param(4.0, _num(0.0, strict_lo=True), _BW),
        "r_grid": Param(DEFAULT_GRID, _radius_grid, _KB),
        "n_boot": Param(100, _num(0, integer=True), _BW),
    },
    "sensitivity": {
        **_GAUSS_X,
        "r_grid": Param(DEFAULT_GRID, _radius_grid, _KB),
        "priors": Param([[25.0, 4.0], [5.0, 1.0]],
                        _list_of(_pair(_alpha_ng, _num(0.0, strict_lo=True))), _BW),
        "panel_a_lambda": Param(2.0, _num(0.0), _KB),
        "lambdas": Param([0.5, 2.0, 8.0], _list_of(_num(0.0)), _KB),
        "panel_b_prior": Param([25.0, 4.0], _pair(_alpha_ng, _num(0.0, strict_lo=True)), _BW),
    },
    "hilbert-linear": {
        "dims": Param([2, 4, 8, 100, 1000, 10000, 100000], _list_of(_num(1, integer=True)), _GH),
        "radii": Param([0.5, 1.0, 2.0], _list_of(_num(0.0, strict_lo=True)), _GH),
        "mc_max_dim": Param(8, _num(0, integer=True), _GH),
    },
    "hilbert-quadratic": {
        "dims": Param([2, 4, 8], _list_of(_num(1, integer=True)), _GH),
        "radii": Param([1.0, 2.0, 3.0], _list_of(_num(0.0, strict_lo=True)), _GH),
        "n_proxy": Param(100_000, _num(1, integer=True), _GH),
    },
    "chisq-verify": {
        "triples": Param([], _list_of(_triple, min_len=0), _CS),
        "n_random": Param(25, _num(0, integer=True), _CS),
        "n_derivative": Param(50, _num(0, integer=True), _CS),
        "fd_step": Param(1e-5, _num(0.0, strict_lo=True), _CS),
    },
    "radius-sweep": {
        "dim": Param(2, _num(1, integer=True), _KB),
        "center": Param([1.0, 0.0], _vector, _KB),
        "base_scale": Param(1.0, _num(0.0, strict_lo=True), _KB),
        "kernel": Param("gaussian", _choice("gaussian", "uniform"), _KB),
        "decay": Param(1.0, _num(0.0), _KB),
        "weights": Param([1.0, 0.0], _vector, "riskavg.risk"),
        "r_grid": Param([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0], _radius_grid, _KB),
    },
    "counterexample": {
        "center": Param([-1.0, 0.0], _pair(_num(), _num()), _KB),
        "r_grid": Param([0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 50.0], _radius_grid, _KB),
    },
}

_EXPERIMENT_DRAWS = {"dominance": 100_000, "sensitivity": 100_000, "hilbert-linear": 1_000_000,
                     "hilbert-quadratic": 1_000_000, "chisq-verify": 1, "radius-sweep": 200_000,
                     "counterexample": 200_000}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    n_draws: int
    output_dir: str
    plots: bool
    params: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict[str, Any]:
        """Fully resolved configuration, loadable by :func:`load_config`."""
        return {"experiment": self.experiment, "seed": self.seed, "n_draws": self.n_draws,
                "output_dir": self.output_dir, "plots": self.plots,
                "params": copy.deepcopy(self.params)}


def read_document(path: str | Path) -> dict[str, Any]:
    """Parse a YAML (or JSON) config file, with line/column on syntax errors."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", location=str(path)) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"parse error: {exc.problem}", location=loc) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", location=str(path))
    # metadata sidecars carry the resolved config under "config"
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


def build_config(doc: dict[str, Any], experiment: str | None = None, *, seed: int | None = None,
                 output_dir: str | None = None, plots: bool | None = None,
                 n_draws: int | None = None, env: dict[str, str] | None = None,
                 source: str = "config") -> ExperimentConfig:
    """Validate and resolve a config; precedence is flag, then env, then file, then default."""
    env = os.environ if env is None else env
    doc = dict(doc)
    file_exp = doc.pop("experiment", None)
    if experiment is None:
        experiment = file_exp
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}",
                          location=f"{source}:experiment")
    if file_exp is not None and file_exp != experiment:
        raise ConfigError(f"config is for {file_exp!r}, not {experiment!r}", location=f"{source}:experiment")
    raw_params = doc.pop("params", {}) or {}
    if not isinstance(raw_params, dict):
        raise ConfigError("params must be a mapping", location=f"{source}:params")
    unknown_top = set(doc) - set(COMMON)
    if unknown_top:
        raise ConfigError(f"unknown keys {sorted(unknown_top)}", location=source)
    schema = SCHEMAS[experiment]
    unknown = set(raw_params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} for {experiment}", location=f"{source}:params")

    top = {k: p.default for k, p in COMMON.items()}
    top["n_draws"] = _EXPERIMENT_DRAWS[experiment]
    top.update(doc)
    if ENV_SEED in env:
        try:
            top["seed"] = int(env[ENV_SEED])
        except ValueError as exc:
            raise ConfigError(f"{ENV_SEED} must be an integer", location=ENV_SEED) from exc
    if ENV_OUT in env:
        top["output_dir"] = env[ENV_OUT]
    for key, val in (("seed", seed), ("output_dir", output_dir), ("plots", plots), ("n_draws", n_draws)):
        if val is not None:
            top[key] = val
    for key, p in COMMON.items():
        err = p.check(top[key])
        if err:
            raise ConfigError(f"{key} {err}", location=f"{source}:{key}", module=p.module)

    params = {k: copy.deepcopy(p.default) for k, p in schema.items()}
    params.update(raw_params)
    for key, p in schema.items():
        err = p.check(params[key])
        if err:
            raise ConfigError(f"{key} {err}", location=f"{source}:params.{key}", module=p.module)
    _cross_check(experiment, params, source)
    return ExperimentConfig(experiment, int(top["seed"]), int(top["n_draws"]), str(top["output_dir"]),
                            bool(top["plots"]), params)


def _cross_check(experiment: str, params: dict, source: str) -> None:
    if experiment == "radius-sweep":
        dim = int(params["dim"])
        for key in ("center", "weights"):
            if len(params[key]) != dim:
                raise ConfigError(f"{key} must have length dim={dim}", location=f"{source}:params.{key}",
                                  module=_KB)


def load_config(path: str | Path, experiment: str | None = None, **overrides) -> ExperimentConfig:
    return build_config(read_document(path), experiment, source=str(path), **overrides)


def validate(path: str | Path, experiment: str | None = None) -> dict[str, Any]:
    """Diagnostics without running: ``valid`` flag, message and parameter bindings."""
    try:
        cfg = load_config(path, experiment, env={})
    except ConfigError as exc:
        return {"valid": False, "error": str(exc), "location": exc.location, "module": exc.module}
    bindings = {k: p.module for k, p in COMMON.items()}
    bindings.update({f"params.{k}": p.module for k, p in SCHEMAS[cfg.experiment].items()})
    return {"valid": True, "experiment": cfg.experiment, "bindings": bindings}
