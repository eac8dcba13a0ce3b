"""Command line entry point: ``riskavg <experiment> --config PATH`` and ``riskavg validate PATH``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from .config import EXPERIMENTS, load_config, validate
from .errors import ConfigError, RiskAvgError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _error(kind: str, exc: Exception, **extra) -> None:
    record = {"status": "error", "kind": kind, "type": type(exc).__name__, "message": str(exc)}
    for attr in ("location", "module"):
        if getattr(exc, attr, None) is not None:
            record[attr] = getattr(exc, attr)
    record.update(extra)
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riskavg", description="Averaging-robust risk experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="YAML config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--plots", action="store_true", default=None, help="write SVG figures")
        p.add_argument("--draws", type=int, default=None, help="Monte Carlo draw count")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "validate":
        report = validate(args.config, args.experiment)
        print(json.dumps(report, sort_keys=True, indent=2))
        return EXIT_OK if report["valid"] else EXIT_USAGE
    try:
        cfg = load_config(args.config, args.command, seed=args.seed, output_dir=args.out,
                          plots=args.plots, n_draws=args.draws)
    except ConfigError as exc:
        _error("config", exc)
        return EXIT_USAGE
    from .experiments import run   # matplotlib import deferred past validation

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = run(cfg)
    except (RiskAvgError, ValueError, ArithmeticError) as exc:
        _error("runtime", exc, experiment=cfg.experiment)
        return EXIT_RUNTIME
    for w in caught:
        print(json.dumps({"status": "warning", "message": str(w.message)}), file=sys.stderr)
    print(json.dumps({"status": "ok", "experiment": cfg.experiment, "seed": cfg.seed,
                      "csv": str(res.csv_path), "metadata": str(res.meta_path),
                      "figures": [str(f) for f in res.figures], "summary_keys": sorted(res.table.summary),
                      "wall_time_s": round(res.wall_time, 3)}, sort_keys=True))
    if cfg.experiment == "chisq-verify":
        s = res.table.summary
        print(f"max |gap| cdf vs quadrature: {s['max_gap_cdf']:.3e}")
        print(f"max |gap| derivative vs finite difference: {s['max_gap_derivative']:.3e}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
