"""Sensor model: additive Gaussian noise followed by quantization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .twin import OutputSeries


@dataclass(frozen=True)
class MeasurementModel:
    temperature_variance: float = 0.5
    humidity_variance: float = 4.0
    resolution: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.temperature_variance < 0 or self.humidity_variance < 0:
            raise ConfigurationError("noise variances must be >= 0")
        if not self.resolution > 0:
            raise ConfigurationError("quantization resolution must be > 0")


def quantize(values, resolution):
    """Round to the nearest multiple of ``resolution``, ties to even.

    Scaling by the reciprocal (rather than dividing by ``resolution``) keeps
    decimal ties such as 21.35 exact: 21.35 * 10 == 213.5.
    """
    scale = 1.0 / resolution
    return np.round(np.asarray(values, dtype=np.float64) * scale) / scale


def add_noise(clean, model):
    """Noise only (no quantization); channels 0-2 are temperatures, 3-5 humidities."""
    rng = np.random.default_rng(model.seed)
    std = np.array([np.sqrt(model.temperature_variance)] * 3 + [np.sqrt(model.humidity_variance)] * 3)
    if clean.n_channels != std.size:
        raise ConfigurationError(f"expected {std.size} channels, got {clean.n_channels}")
    noise = rng.standard_normal(clean.values.shape) * std[:, None]
    return OutputSeries(clean.values + noise, clean.start_min, clean.step_min)


def corrupt_measurements(clean, model=MeasurementModel()):
    noisy = add_noise(clean, model)
    return OutputSeries(quantize(noisy.values, model.resolution), clean.start_min, clean.step_min)
