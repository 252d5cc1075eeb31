"""One-dimensional test function on [0, 1].

Its global minimizer is near 0.5445 (equivalently, the maximizer of -J).
"""

from __future__ import annotations

import math

import numpy as np

from ..bbo.domain import SearchDomain
from ..errors import PreconditionError

EXEMPLAR_OPTIMUM = 0.5445


def exemplar_1d(theta):
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise PreconditionError(f"exemplar is defined on [0, 1], got {theta}")
    return math.sin(20.0 * theta) + (10.0 * theta / 3.0) ** 2 - 10.0 * theta


class ExemplarObjective:
    """Evaluator wrapper: theta is a length-1 vector in physical units."""

    name = "exemplar1d"
    domain = SearchDomain(np.array([0.0]), np.array([1.0]), ("theta",))
    optimum = np.array([EXEMPLAR_OPTIMUM])

    def __call__(self, theta, seed=None):
        return exemplar_1d(np.asarray(theta, dtype=np.float64).reshape(-1)[0])
