"""Command-line entry point: ``attnbo run | ablate | simulate``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .. import __version__
from ..errors import AttnBoError, ConfigurationError, PreconditionError
from ..objectives.series_io import write_series_csv
from ..objectives.twin import simulate_twin
from .config import ConfigError, load_config
from .experiment import run_ablation, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("attnbo")


def _parser():
    p = argparse.ArgumentParser(prog="attnbo", description="Batch Bayesian optimization with an attentive neural process.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one seeded optimization run")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="parent directory for the run directory")
    r.add_argument("--workers", type=int)

    a = sub.add_parser("ablate", help="full / no-tarpen / no-retrain over shared seeds")
    a.add_argument("--config", required=True)
    a.add_argument("--repeats", type=int)
    a.add_argument("--out")
    a.add_argument("--workers", type=int)

    s = sub.add_parser("simulate", help="write a twin trace as CSV")
    s.add_argument("--theta", required=True, help="12 comma-separated values")
    s.add_argument("--days", type=int, default=1)
    s.add_argument("--out", required=True)
    return p


def _overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ConfigError(["--workers: must be >= 1"])
        cfg = dataclasses.replace(cfg, workers=args.workers)
    return cfg


def _parse_theta(text):
    try:
        theta = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError([f"--theta: {exc}"]) from exc
    if theta.size != 12:
        raise ConfigError([f"--theta: expected 12 values, got {theta.size}"])
    return theta


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        if args.command == "simulate":
            if args.days < 1:
                raise ConfigError(["--days: must be >= 1"])
            series = simulate_twin(_parse_theta(args.theta), args.days)
            write_series_csv(series, args.out)
            print(args.out)
        elif args.command == "run":
            cfg = _overrides(load_config(args.config), args)
            out, _ = run_experiment(cfg, args.out)
            with open(out / "report.json", encoding="utf-8") as fh:
                report = json.load(fh)
            print(f"{out}\nbest cost {report['best_cost']!r} after {report['evaluations']['total']} evaluations")
        elif args.command == "ablate":
            cfg = _overrides(load_config(args.config), args)
            base, _ = run_ablation(cfg, args.out, repeats=args.repeats)
            print(base)
    except ConfigError as exc:
        print(f"attnbo: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, PreconditionError) as exc:
        print(f"attnbo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AttnBoError, OSError) as exc:
        print(f"attnbo: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
