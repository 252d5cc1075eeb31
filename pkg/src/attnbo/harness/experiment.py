"""Seeded runs, ablation sweeps and the artifacts they leave on disk."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import time
import traceback
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..bbo.engine import run as bbo_run
from ..errors import ConfigurationError
from ..objectives.calibration import CalibrationObjective
from ..objectives.twin import CHANNELS, TABLE1
from .config import build_objective

log = logging.getLogger(__name__)

ARMS = ("full", "no-tarpen", "no-retrain")


def _num(x):
    """Shortest round-trip text for a float (``repr``)."""
    return repr(float(x))


def make_run_dir(base, seed, label="run"):
    """Fresh ``<base>/<label>-<UTC timestamp>-s<seed>[-n]``; never reuses a directory."""
    base = Path(base)
    base.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S")
    stem = f"{label}-{stamp}-s{seed}"
    for n in range(1000):
        path = base / (stem if n == 0 else f"{stem}-{n}")
        try:
            path.mkdir()
            return path
        except FileExistsError:
            continue
    raise FileExistsError(f"could not create a fresh run directory under {base}")


def history_rows(history):
    """Records as CSV rows; the column order is fixed by :func:`history_header`."""
    for r in history.records:
        yield [
            str(r.index),
            str(r.round),
            str(r.batch_index),
            *(_num(v) for v in r.theta),
            "" if r.failed else _num(r.cost),
            _num(r.incumbent),
        ]


def history_header(domain):
    return ["index", "round", "batch_index", *domain.names, "cost", "incumbent"]


def write_history(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(history_header(history.domain))
        w.writerows(history_rows(history))


def write_incumbent(history, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "incumbent"])
        for r in history.records:
            if math.isfinite(r.incumbent):
                w.writerow([r.index, _num(r.incumbent)])


def write_timings(history, path):
    """Wall-clock data lives apart from history.csv so the latter stays reproducible."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "simulate_s", "train_s", "select_s"])
        for t in history.timings:
            w.writerow([t.round, f"{t.simulate_s:.6f}", f"{t.train_s:.6f}", f"{t.select_s:.6f}"])
        w.writerow([])
        w.writerow(["index", "wall_ms"])
        for r in history.records:
            w.writerow([r.index, f"{r.wall_ms:.3f}"])


def write_batches(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        for plan in history.batches:
            line = {
                "round": plan.round,
                "candidates": [
                    {
                        "theta": [float(v) for v in c.theta],
                        "theta_unit": [float(v) for v in c.theta_unit],
                        "latent_index": c.latent_index,
                        "acquisition": c.acquisition,
                        "mean": c.mean,
                        "std": c.std,
                        "exclusion": c.exclusion.tolist(),
                    }
                    for c in plan
                ],
            }
            fh.write(json.dumps(line) + "\n")


def build_report(history, objective, cfg):
    """Summary dictionary; every number is recomputable from history.csv."""
    theta, cost = history.best()
    n_failed = sum(r.failed for r in history.records)
    n_init = cfg.bbo.n_init
    report = {
        "version": __version__,
        "seed": cfg.bbo.seed,
        "objective": cfg.objective.name,
        "best_theta": {name: float(v) for name, v in zip(history.domain.names, theta)},
        "best_cost": float(cost),
        "final_incumbent": float(history.records[-1].incumbent),
        "evaluations": {
            "total": len(history.records),
            "initial": n_init,
            "after_initialization": len(history.records) - n_init,
            "failed": n_failed,
        },
        "n_trainings": history.n_trainings,
        "phase_seconds": {
            "simulate": sum(t.simulate_s for t in history.timings),
            "train": sum(t.train_s for t in history.timings),
            "select": sum(t.select_s for t in history.timings),
        },
        "config": cfg.as_dict(),
    }
    if isinstance(objective, CalibrationObjective):
        report["parameters"] = [
            {
                "name": name,
                "best": float(theta[i]),
                "true": truth,
                "lower": lo,
                "upper": hi,
                "inside": bool(lo <= theta[i] <= hi),
                "relative_error": abs(float(theta[i]) - truth) / (hi - lo),
            }
            for i, (name, truth, lo, hi) in enumerate(TABLE1)
        ]
        if objective.days_test:
            best_cv = objective.holdout_cvrmse(theta)
            true_cv = objective.holdout_cvrmse(objective.optimum)
            report["holdout_cvrmse"] = {
                ch: {"best": float(b), "true": float(t)} for ch, b, t in zip(CHANNELS, best_cv, true_cv)
            }
            report["holdout_cvrmse_ratio_median"] = float(np.median(best_cv / true_cv))
    else:
        report["distance_to_optimum"] = float(np.linalg.norm(theta - objective.optimum))
    return report


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _write_stream(history, out):
    write_history(history, out / "history.csv")
    write_incumbent(history, out / "incumbent.csv")
    write_batches(history, out / "batches.jsonl")
    write_timings(history, out / "timings.csv")


class _Partial:
    """on_round hook that keeps the last seen history for failure reports."""

    def __init__(self):
        self.history = None

    def __call__(self, history):
        self.history = history


def run_experiment(cfg, out_dir=None, *, label="run", objective=None):
    """Run one seeded optimization and write its artifacts.

    Returns ``(run_dir, history)``.  If the run fails midway, artifacts for
    the completed rounds plus ``error.json`` are written before re-raising.
    """
    objective = objective or build_objective(cfg.objective)
    out = make_run_dir(out_dir or cfg.out_dir, cfg.bbo.seed, label)
    _dump_json(cfg.as_dict(), out / "config.json")
    partial = _Partial()
    start = time.perf_counter()
    try:
        history = bbo_run(objective, cfg.bbo, workers=cfg.workers, on_round=partial)
    except Exception as exc:
        if partial.history is not None and partial.history.records:
            _write_stream(partial.history, out)
        _dump_json(
            {
                "type": type(exc).__name__,
                "message": str(exc),
                "completed_rounds": len(partial.history.timings) - 1 if partial.history else -1,
                "traceback": traceback.format_exc(),
            },
            out / "error.json",
        )
        raise
    _write_stream(history, out)
    report = build_report(history, objective, cfg)
    report["wall_seconds"] = time.perf_counter() - start
    _dump_json(report, out / "report.json")
    log.info("run finished: best cost %.6g, artifacts in %s", report["best_cost"], out)
    return out, history


def arm_config(cfg, arm):
    flags = {
        "full": {},
        "no-tarpen": {"no_target_penalization": True},
        "no-retrain": {"no_retrain": True},
    }[arm]
    return dataclasses.replace(cfg, bbo=cfg.bbo.with_(**flags))


def median_incumbents(histories):
    """Per-evaluation-index median of incumbent costs across runs."""
    n = min(len(h.records) for h in histories)
    return np.median(np.array([h.incumbents()[:n] for h in histories]), axis=0)


def run_ablation(cfg, out_dir=None, *, repeats=None, seeds=None, arms=ARMS, histories=None):
    """Run every arm over the same seeds and write ``ablation.csv``.

    ``histories`` may pre-seed finished runs as ``{(arm, seed): history}``.
    Returns ``(ablation_dir, {arm: [history, ...]})``.
    """
    repeats = cfg.repeats if repeats is None else repeats
    if repeats < 3:
        raise ConfigurationError(f"ablation needs repeats >= 3, got {repeats}")
    seeds = list(seeds) if seeds is not None else [cfg.bbo.seed + i for i in range(repeats)]
    histories = dict(histories or {})
    base = make_run_dir(out_dir or cfg.out_dir, cfg.bbo.seed, "ablation")
    objective = build_objective(cfg.objective)
    results = {arm: [] for arm in arms}
    for arm in arms:
        for seed in seeds:
            if (arm, seed) in histories:
                h = histories[(arm, seed)]
            else:
                run_cfg = arm_config(cfg, arm).with_seed(seed)
                _, h = run_experiment(run_cfg, base / arm, label=arm, objective=objective)
            results[arm].append(h)
    medians = {arm: median_incumbents(hs) for arm, hs in results.items()}
    n = min(len(m) for m in medians.values())
    with open(base / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", *arms])
        for i in range(n):
            w.writerow([i, *(_num(medians[a][i]) for a in arms)])
    summary = {
        "seeds": seeds,
        "final_median_incumbent": {a: float(medians[a][n - 1]) for a in arms},
        "n_trainings": {a: [h.n_trainings for h in results[a]] for a in arms},
    }
    _dump_json(summary, base / "ablation.json")
    return base, results
