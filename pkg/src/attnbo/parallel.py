"""Concurrent objective evaluation with order-preserving results."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

log = logging.getLogger(__name__)

EVAL_STREAM = 4


@dataclass
class EvalOutcome:
    cost: float | None
    error: str | None
    wall_ms: float

    @property
    def ok(self):
        return self.error is None


def evaluation_seed(run_seed, index):
    """Deterministic per-evaluation sub-seed, independent of scheduling."""
    seq = np.random.SeedSequence(run_seed, spawn_key=(EVAL_STREAM, int(index)))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def _evaluate_one(evaluator, theta, seed):
    start = time.perf_counter()
    try:
        cost = float(evaluator(theta, seed=seed))
        if not math.isfinite(cost):
            raise ValueError(f"objective returned non-finite cost {cost}")
        error = None
    except Exception as exc:  # noqa: BLE001 - isolate one candidate's failure
        cost, error = None, f"{type(exc).__name__}: {exc}"
    return EvalOutcome(cost, error, (time.perf_counter() - start) * 1e3)


def parallel_evaluate(candidates, evaluator, workers=1, seeds=None):
    """Evaluate every candidate, at most ``workers`` at a time.

    ``candidates`` is a sequence of parameter vectors (or a BatchPlan).
    Results come back in candidate order whatever the completion order;
    a failing candidate yields an outcome with ``error`` set.
    """
    if workers < 1:
        raise PreconditionError("workers must be >= 1")
    thetas = [getattr(c, "theta", c) for c in candidates]
    seeds = list(seeds) if seeds is not None else [None] * len(thetas)
    if len(seeds) != len(thetas):
        raise PreconditionError("one seed per candidate expected")
    if workers == 1 or len(thetas) <= 1:
        outcomes = [_evaluate_one(evaluator, t, s) for t, s in zip(thetas, seeds)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda ts: _evaluate_one(evaluator, *ts), zip(thetas, seeds)))
    for i, out in enumerate(outcomes):
        if not out.ok:
            log.warning("evaluation %d failed: %s", i, out.error)
    return outcomes
