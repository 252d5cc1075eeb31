"""Space-filling initial designs from the Sobol sequence (Joe-Kuo direction numbers)."""

from __future__ import annotations

import warnings

from scipy.stats import qmc

from ..errors import ConfigurationError, PreconditionError

MAX_DIM = qmc.Sobol.MAXDIM


def sobol_unit(dim, n, seed=None):
    """First ``n`` Sobol points in the unit cube.

    Without a seed the plain sequence is used with its leading zero point
    skipped (1-D: 0.5, 0.75, 0.25, ...).  With a seed the sequence is
    Owen-scrambled, which keeps the low-discrepancy structure while giving
    every seed its own design.
    """
    if n < 1:
        raise PreconditionError("need at least one design point")
    if not 1 <= dim <= MAX_DIM:
        raise ConfigurationError(f"Sobol direction numbers cover 1..{MAX_DIM} dimensions, got {dim}")
    with warnings.catch_warnings():
        # the balance warning for n != 2^m is irrelevant for a prefix of the sequence
        warnings.simplefilter("ignore", UserWarning)
        if seed is None:
            return qmc.Sobol(dim, scramble=False).random(n + 1)[1:]
        return qmc.Sobol(dim, scramble=True, rng=seed).random(n)


def sobol_init(domain, n, seed=None):
    return domain.denormalize(sobol_unit(domain.dim, n, seed))
