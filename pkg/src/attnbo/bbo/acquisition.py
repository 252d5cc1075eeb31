"""UCB acquisition and target sampling away from already-chosen candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..anp import TargetSet
from ..errors import ConfigurationError, DomainCoveredError, PreconditionError

PROPOSAL_BUDGET = 10**6
MIN_ACCEPTANCE = 0.01


def ucb(pred, beta):
    """Upper confidence bound ``mean + beta * std`` (for maximization)."""
    std = np.asarray(pred.std, dtype=np.float64)
    if np.any(~(std > 0)):
        raise PreconditionError("ucb needs strictly positive predictive std")
    return np.asarray(pred.mean, dtype=np.float64) + beta * std


@dataclass
class ExclusionSet:
    """Open Euclidean balls of a common radius in normalized coordinates."""

    radius: float
    centers: list = field(default_factory=list)

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigurationError("exclusion radius must be > 0")

    def add(self, center):
        center = np.asarray(center, dtype=np.float64).reshape(-1)
        if np.any(center < 0) or np.any(center > 1):
            raise PreconditionError("exclusion centers live in the unit box")
        self.centers.append(center)

    def __len__(self):
        return len(self.centers)

    def copy(self):
        return ExclusionSet(self.radius, [c.copy() for c in self.centers])

    def excluded(self, points):
        """Boolean mask of points strictly inside some ball."""
        points = np.atleast_2d(points)
        if not self.centers:
            return np.zeros(points.shape[0], dtype=bool)
        c = np.asarray(self.centers)
        mask = np.zeros(points.shape[0], dtype=bool)
        for center in c:
            d2 = np.sum((points - center) ** 2, axis=1)
            mask |= d2 < self.radius * self.radius
        return mask


def penalized_target_sample(domain, exclusion, count, rng, budget=PROPOSAL_BUDGET):
    """``count`` uniform points of the unit box outside every exclusion ball.

    Rejection sampling.  While nothing is rejected exactly ``count``
    proposals are drawn, so an empty exclusion set consumes the generator
    the same way a plain uniform draw does.
    """
    if count < 1:
        raise PreconditionError("count must be >= 1")
    dim = domain.dim if hasattr(domain, "dim") else int(domain)
    kept = []
    n_kept = 0
    proposed = 0
    while n_kept < count:
        remaining = count - n_kept
        rate = n_kept / proposed if proposed else 1.0
        m = remaining if rate >= 1.0 else math.ceil(remaining / max(rate, MIN_ACCEPTANCE))
        m = min(m, budget - proposed)
        if m <= 0:
            raise DomainCoveredError(
                f"only {n_kept} of {count} targets accepted after {proposed} proposals "
                f"(acceptance {n_kept / proposed:.2%}); delta too large for the box"
            )
        cand = rng.random((m, dim))
        proposed += m
        ok = cand[~exclusion.excluded(cand)]
        if ok.shape[0]:
            ok = ok[:remaining]
            kept.append(ok)
            n_kept += ok.shape[0]
    return TargetSet(np.concatenate(kept, axis=0))
