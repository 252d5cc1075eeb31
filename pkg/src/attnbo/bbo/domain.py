"""Search box and the append-only evaluation dataset."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, PreconditionError


@dataclass(frozen=True, eq=False)
class SearchDomain:
    lower: np.ndarray
    upper: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ConfigurationError("lower/upper bounds must be 1-D and equally long")
        if not np.all(lower < upper):
            raise ConfigurationError("every lower bound must be below its upper bound")
        names = tuple(self.names) or tuple(f"theta{i + 1}" for i in range(lower.size))
        if len(names) != lower.size:
            raise ConfigurationError("one name per dimension expected")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "names", names)

    @property
    def dim(self):
        return self.lower.size

    @property
    def width(self):
        return self.upper - self.lower

    def normalize(self, theta):
        return (np.asarray(theta, dtype=np.float64) - self.lower) / self.width

    def denormalize(self, u):
        # clip guards the last ulp so that round trips stay inside the box
        return np.clip(self.lower + np.asarray(u, dtype=np.float64) * self.width, self.lower, self.upper)

    def contains(self, theta):
        theta = np.asarray(theta, dtype=np.float64)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))


@dataclass
class EvaluationDataset:
    """Append-only (theta, cost) records, theta in physical units."""

    domain: SearchDomain
    thetas: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    n_init: int = 0

    def append(self, theta, cost):
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.size != self.domain.dim or not self.domain.contains(theta):
            raise PreconditionError(f"theta {theta} is outside the search domain")
        if not np.isfinite(cost):
            raise PreconditionError("costs must be finite")
        self.thetas.append(theta)
        self.costs.append(float(cost))

    def __len__(self):
        return len(self.costs)

    def theta_array(self):
        return np.array(self.thetas).reshape(len(self), self.domain.dim)

    def cost_array(self):
        return np.array(self.costs, dtype=np.float64)

    def best(self):
        i = int(np.argmin(self.costs))
        return self.thetas[i], self.costs[i]
