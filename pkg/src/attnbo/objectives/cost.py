"""Calibration cost and fit metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, PreconditionError

COST_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CostWeights:
    """Diagonals of the per-channel weight matrices, shape (channels, samples)
    or (channels, 1) for a constant weight per channel."""

    diag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=np.float64)
        if diag.ndim == 1:
            diag = diag[:, None]
        if diag.ndim != 2 or not np.all(diag > 0):
            raise ConfigurationError("cost weights must be positive (channels x samples)")
        object.__setattr__(self, "diag", diag)

    @classmethod
    def inverse_variance(cls, measured):
        var = np.var(measured.values, axis=1, ddof=1)
        if not np.all(var > 0):
            raise ConfigurationError("a measured channel is constant; cannot scale by its variance")
        return cls(1.0 / var)


def _residual(measured, simulated):
    m = getattr(measured, "values", measured)
    s = getattr(simulated, "values", simulated)
    m = np.asarray(m, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if m.shape != s.shape:
        raise PreconditionError(f"measured {m.shape} and simulated {s.shape} differ in shape")
    return m - s


def calibration_cost(measured, simulated, weights):
    """log(max(sum_i eps_i^T W_i eps_i, 1e-12))."""
    eps = _residual(measured, simulated)
    if weights.diag.shape[0] != eps.shape[0]:
        raise PreconditionError("one weight row per channel expected")
    total = float(np.sum(weights.diag * eps * eps))
    return float(np.log(max(total, COST_FLOOR)))


def cvrmse(measured, simulated):
    """||eps||_2 / sqrt(T) for one channel (the residual RMS)."""
    eps = _residual(measured, simulated).reshape(-1)
    if eps.size == 0:
        raise PreconditionError("cvrmse needs at least one sample")
    return float(np.linalg.norm(eps) / np.sqrt(eps.size))


def channel_cvrmse(measured, simulated):
    """Per-channel ||eps_i|| / sqrt(T) for (channels, samples) inputs."""
    eps = _residual(measured, simulated)
    if eps.shape[-1] == 0:
        raise PreconditionError("cvrmse needs at least one sample")
    return np.linalg.norm(eps, axis=-1) / np.sqrt(eps.shape[-1])
