"""Batch Bayesian optimization driven by the attentive neural process.

The engine maximizes f = -J internally; everything it reports (costs,
incumbents) is in the minimization form J.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from ..anp import INITIAL_SCHEDULE, ROUND_SCHEDULE, AnpModel, AnpPrediction, ConditionedAnp, ContextSet, train
from ..anp.train import TrainingSchedule
from ..errors import ConfigurationError, EvaluationError
from ..parallel import evaluation_seed, parallel_evaluate
from .acquisition import ExclusionSet, penalized_target_sample, ucb
from .domain import EvaluationDataset
from .sobol import sobol_init

log = logging.getLogger(__name__)

# independent random streams derived from the run seed
_MODEL_STREAM, _TRAIN_STREAM, _SELECT_STREAM, _SOBOL_STREAM = range(4)


def stream_seed(seed, *key):
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class BboConfig:
    n_init: int = 1000
    rounds: int = 200
    batch_size: int = 5
    n_targets: int = 5000
    delta: float = 0.01
    beta: float = 3.0
    no_target_penalization: bool = False
    no_retrain: bool = False
    seed: int = 0
    scramble_init: bool = True
    initial_schedule: TrainingSchedule = INITIAL_SCHEDULE
    round_schedule: TrainingSchedule = ROUND_SCHEDULE
    set_sizes: tuple = (8, 64)

    def __post_init__(self):
        object.__setattr__(self, "set_sizes", tuple(int(s) for s in self.set_sizes))
        problems = self.problems()
        if problems:
            raise ConfigurationError("; ".join(problems))

    def problems(self):
        out = []
        for name in ("n_init", "rounds", "batch_size", "n_targets"):
            if int(getattr(self, name)) < 1:
                out.append(f"{name}: must be >= 1")
        if not self.delta > 0:
            out.append("delta: must be > 0")
        if not self.beta >= 0:
            out.append("beta: must be >= 0")
        lo, hi = self.set_sizes if len(self.set_sizes) == 2 else (0, -1)
        if not 1 <= lo <= hi:
            out.append("set_sizes: need 1 <= min <= max")
        return out

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, TrainingSchedule):
                v = {"steps": v.steps, "lr": v.lr, "milestones": [list(m) for m in v.milestones], "minibatch": v.minibatch}
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


@dataclass
class Candidate:
    theta: np.ndarray  # physical units
    theta_unit: np.ndarray
    latent_index: int
    acquisition: float
    mean: float  # predicted f = -J
    std: float
    exclusion: np.ndarray  # ball centers in force when this candidate was picked


@dataclass
class BatchPlan:
    round: int
    candidates: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    def unit_points(self):
        return np.array([c.theta_unit for c in self.candidates])


@dataclass
class EvaluationRecord:
    index: int
    round: int
    batch_index: int
    theta: np.ndarray
    cost: float  # nan when the evaluation failed
    incumbent: float
    wall_ms: float
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class RoundTiming:
    round: int
    simulate_s: float = 0.0
    train_s: float = 0.0
    select_s: float = 0.0


@dataclass
class RunHistory:
    config: BboConfig
    domain: object
    records: list = field(default_factory=list)
    batches: list = field(default_factory=list)
    timings: list = field(default_factory=list)
    n_trainings: int = 0
    train_losses: list = field(default_factory=list)
    model: object = None

    def incumbents(self):
        return np.array([r.incumbent for r in self.records])

    def best(self):
        ok = [r for r in self.records if not r.failed]
        rec = min(ok, key=lambda r: (r.cost, r.index))
        return rec.theta, rec.cost

    def dataset_size(self):
        return sum(not r.failed for r in self.records)


def context_from(data):
    """Normalized thetas and standardized f = -J, plus the (mean, std) used."""
    u = np.clip(data.domain.normalize(data.theta_array()), 0.0, 1.0)
    f = -data.cost_array()
    mean = float(f.mean())
    std = float(f.std())
    if not std > 0:
        std = 1.0
    return ContextSet(u, (f - mean) / std), (mean, std)


def select_batch(model, data, cfg, rng, *, pin_rng=False, round_index=0):
    """Choose ``cfg.batch_size`` candidates by UCB over freshly sampled targets.

    Every pick draws a new latent from q(z | whole dataset) and, unless
    target penalization is off, samples targets outside delta-balls around
    the picks made so far.  ``pin_rng`` replays the same random stream for
    every pick (diagnostic use: isolates the effect of penalization).
    """
    ctx, (f_mean, f_std) = context_from(data)
    cond = ConditionedAnp(model, ctx)
    exclusion = ExclusionSet(cfg.delta)
    child_seeds = np.random.SeedSequence(int(rng.integers(2**63))).spawn(cfg.batch_size)
    plan = BatchPlan(round_index)
    for k in range(cfg.batch_size):
        rk = np.random.default_rng(child_seeds[0] if pin_rng else child_seeds[k])
        z = cond.sample_latent(rk)
        active = ExclusionSet(cfg.delta) if cfg.no_target_penalization else exclusion
        targets = penalized_target_sample(data.domain, active, cfg.n_targets, rk)
        pred = cond.predict(targets, z)
        scaled = AnpPrediction(f_mean + f_std * pred.mean, f_std * pred.std, pred.z)
        acq = ucb(scaled, cfg.beta)
        best = int(np.argmax(acq))  # first maximal index on ties
        u = targets.theta[best].copy()
        plan.candidates.append(
            Candidate(
                theta=data.domain.denormalize(u),
                theta_unit=u,
                latent_index=k,
                acquisition=float(acq[best]),
                mean=float(scaled.mean[best]),
                std=float(scaled.std[best]),
                exclusion=np.array(active.centers).reshape(-1, data.domain.dim),
            )
        )
        exclusion.add(u)
    return plan


def _append(history, data, thetas, outcomes, round_index, start_index):
    incumbent = history.records[-1].incumbent if history.records else math.inf
    n_ok = 0
    for k, (theta, out) in enumerate(zip(thetas, outcomes)):
        if out.ok:
            data.append(theta, out.cost)
            incumbent = min(incumbent, out.cost)
            n_ok += 1
        history.records.append(
            EvaluationRecord(
                index=start_index + k,
                round=round_index,
                batch_index=k,
                theta=np.asarray(theta, dtype=np.float64).copy(),
                cost=out.cost if out.ok else math.nan,
                incumbent=incumbent,
                wall_ms=out.wall_ms,
                error=out.error,
            )
        )
    return n_ok


def _train(model, data, schedule, cfg, round_index):
    ctx, _ = context_from(data)
    res = train(model, ctx, schedule, seed=stream_seed(cfg.seed, _TRAIN_STREAM, round_index), set_sizes=cfg.set_sizes)
    return res.losses


def run(objective, cfg, *, workers=1, on_round=None):
    """Full optimization loop; returns the :class:`RunHistory`.

    ``objective(theta, seed=...)`` returns the cost J for a physical theta
    and exposes ``objective.domain``.  ``on_round(history)`` is called after
    the initial design and after every round.
    """
    domain = objective.domain
    data = EvaluationDataset(domain)
    history = RunHistory(cfg, domain)

    timing = RoundTiming(0)
    t0 = time.perf_counter()
    init_seed = stream_seed(cfg.seed, _SOBOL_STREAM) if cfg.scramble_init else None
    design = sobol_init(domain, cfg.n_init, init_seed)
    seeds = [evaluation_seed(cfg.seed, i) for i in range(cfg.n_init)]
    outcomes = parallel_evaluate(design, objective, workers, seeds)
    if _append(history, data, design, outcomes, 0, 0) == 0:
        raise EvaluationError("every evaluation of the initial design failed")
    data.n_init = len(data)
    t1 = time.perf_counter()
    timing.simulate_s = t1 - t0

    model = AnpModel(domain.dim, seed=stream_seed(cfg.seed, _MODEL_STREAM))
    history.train_losses.append(_train(model, data, cfg.initial_schedule, cfg, 0))
    history.n_trainings += 1
    timing.train_s = time.perf_counter() - t1
    history.timings.append(timing)
    log.info("initial design: %d points, best cost %.4f", len(data), data.best()[1])
    if on_round:
        on_round(history)

    for t in range(1, cfg.rounds + 1):
        timing = RoundTiming(t)
        t0 = time.perf_counter()
        rng = np.random.default_rng(stream_seed(cfg.seed, _SELECT_STREAM, t))
        plan = select_batch(model, data, cfg, rng, round_index=t)
        history.batches.append(plan)
        t1 = time.perf_counter()
        start = len(history.records)
        thetas = [c.theta for c in plan]
        seeds = [evaluation_seed(cfg.seed, start + k) for k in range(len(thetas))]
        outcomes = parallel_evaluate(thetas, objective, workers, seeds)
        if _append(history, data, thetas, outcomes, t, start) == 0:
            raise EvaluationError(f"every evaluation of round {t} failed")
        t2 = time.perf_counter()
        if not cfg.no_retrain:
            history.train_losses.append(_train(model, data, cfg.round_schedule, cfg, t))
            history.n_trainings += 1
        t3 = time.perf_counter()
        timing.select_s, timing.simulate_s, timing.train_s = t1 - t0, t2 - t1, t3 - t2
        history.timings.append(timing)
        log.info(
            "round %d: incumbent %.4f (select %.2fs, simulate %.2fs, train %.2fs)",
            t, history.records[-1].incumbent, timing.select_s, timing.simulate_s, timing.train_s,
        )
        if on_round:
            on_round(history)

    history.model = model
    return history
