"""ELBO training with stepped learning-rate schedules."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, PreconditionError, TrainingError
from ..tensor import AdamState, Segments, Tape, Tensor, adam_step
from ..tensor._alloc import keep_large_blocks_on_heap
from .model import batch_elbo

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingSchedule:
    """``steps`` Adam steps starting at ``lr``; after each milestone step the
    rate is divided by that milestone's factor."""

    steps: int
    lr: float
    milestones: tuple = ()
    minibatch: int = 32

    def __post_init__(self):
        milestones = tuple((int(s), float(f)) for s, f in self.milestones)
        object.__setattr__(self, "milestones", milestones)
        if self.steps < 0 or self.minibatch < 1 or not self.lr > 0:
            raise ConfigurationError(f"invalid schedule {self}")
        at = [s for s, _ in milestones]
        if any(b <= a for a, b in zip(at, at[1:])):
            raise ConfigurationError(f"milestones must be strictly increasing: {at}")
        if any(f <= 1.0 for _, f in milestones):
            raise ConfigurationError("milestone factors must be > 1")

    def lr_at(self, step):
        """Learning rate used at 1-based ``step``."""
        lr = self.lr
        for at, factor in self.milestones:
            if step > at:
                lr /= factor
        return lr


# offline training on the initial design
INITIAL_SCHEDULE = TrainingSchedule(5000, 1e-5, ((1000, 2.0), (2500, 5.0)), 32)
# warm-started retraining after every batch; 750 steps covers both decays plus a tail
ROUND_SCHEDULE = TrainingSchedule(750, 5e-5, ((250, 2.0), (500, 5.0)), 32)


@dataclass
class TrainResult:
    model: object
    losses: np.ndarray


def sample_minibatch(data, rng, minibatch, set_sizes=(8, 64)):
    """Stacked (context, target) set pairs drawn uniformly from ``data``.

    Per element, context and target sizes are drawn independently from
    ``[min(lo, n), min(hi, n)]`` and each set is sampled without replacement;
    the two sets of one element may overlap.
    """
    n = len(data)
    lo, hi = min(set_sizes[0], n), min(set_sizes[1], n)
    c_idx, t_idx = [], []
    for _ in range(minibatch):
        nc, nt = rng.integers(lo, hi + 1, size=2)
        c_idx.append(rng.choice(n, size=nc, replace=False))
        t_idx.append(rng.choice(n, size=nt, replace=False))
    c_seg = Segments([len(i) for i in c_idx])
    t_seg = Segments([len(i) for i in t_idx])
    c = np.concatenate(c_idx)
    t = np.concatenate(t_idx)
    return (
        Tensor(data.theta[c]),
        Tensor(data.values[c][:, None]),
        c_seg,
        Tensor(data.theta[t]),
        Tensor(data.values[t][:, None]),
        t_seg,
    )


def train(model, data, schedule, *, warm=None, seed=0, set_sizes=(8, 64)):
    """Run ``schedule`` on ``model`` (in place) over the ContextSet ``data``.

    ``warm`` optionally supplies a state dict to start from.  Identical
    (seed, data, schedule, warm) give bit-identical weights.
    """
    if len(data) < 2:
        raise PreconditionError("training needs at least 2 data points")
    if warm is not None:
        model.load_state_dict(warm)
    keep_large_blocks_on_heap()
    rng = np.random.default_rng(seed)
    params = model.parameters()
    names = list(params)
    tensors = [params[n] for n in names]
    state = AdamState()
    losses = np.empty(schedule.steps)
    for step in range(1, schedule.steps + 1):
        batch = sample_minibatch(data, rng, schedule.minibatch, set_sizes)
        noise = rng.standard_normal((schedule.minibatch, model.latent_dim))
        with Tape() as tape:
            loss = batch_elbo(model, *batch, noise)
        value = float(loss.data)
        if not np.isfinite(value):
            raise TrainingError(f"non-finite loss at step {step}", step=step)
        grads = tape.gradient(loss, tensors)
        try:
            adam_step(state, params, dict(zip(names, grads)), schedule.lr_at(step))
        except TrainingError as exc:
            raise TrainingError(f"step {step}: {exc}", tensor=exc.tensor, step=step) from exc
        losses[step - 1] = value
    if schedule.steps:
        log.debug("trained %d steps, final loss %.4f", schedule.steps, losses[-1])
    return TrainResult(model, losses)
