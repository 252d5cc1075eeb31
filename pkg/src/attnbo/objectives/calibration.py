"""Calibration objective built on the twin stand-in."""

from __future__ import annotations

import numpy as np

from ..errors import PreconditionError
from .cost import CostWeights, calibration_cost, channel_cvrmse
from .measurement import MeasurementModel, corrupt_measurements
from .twin import SAMPLES_PER_DAY, TRUE_THETA, TWIN_DOMAIN, simulate_twin


class CalibrationObjective:
    """theta -> log weighted squared residual over the training window.

    Synthetic measurements are generated once at construction (true
    parameters, 5 days, seeded noise and quantization) and never change, so
    instances are immutable and safe to call from several threads.
    """

    domain = TWIN_DOMAIN
    optimum = TRUE_THETA

    def __init__(self, days_train=2, days_test=3, seed=0, noise_free=False, measurement=None):
        if days_train < 1 or days_test < 0:
            raise PreconditionError("need days_train >= 1 and days_test >= 0")
        self.days_train = int(days_train)
        self.days_test = int(days_test)
        self.noise_free = noise_free
        self.name = "twin-noisefree" if noise_free else "twin"
        clean = simulate_twin(TRUE_THETA, self.days_train + self.days_test)
        if noise_free:
            self.measured = clean
        else:
            model = measurement or MeasurementModel(seed=seed)
            self.measured = corrupt_measurements(clean, model)
        self.n_train = self.days_train * SAMPLES_PER_DAY
        self.train_window = self.measured.window(0, self.n_train)
        self.test_window = self.measured.window(self.n_train, self.measured.n_samples)
        self.weights = CostWeights.inverse_variance(self.train_window)

    def simulate(self, theta, days=None):
        return simulate_twin(theta, days or self.days_train + self.days_test)

    def __call__(self, theta, seed=None):
        sim = simulate_twin(theta, self.days_train)
        return calibration_cost(self.train_window, sim, self.weights)

    def holdout_cvrmse(self, theta):
        """Per-channel ||eps|| / sqrt(T) on the held-out days."""
        if self.days_test == 0:
            raise PreconditionError("no held-out days configured")
        sim = self.simulate(theta).window(self.n_train, self.measured.n_samples)
        return channel_cvrmse(self.test_window, sim)

    def train_cvrmse(self, theta):
        sim = simulate_twin(theta, self.days_train)
        return channel_cvrmse(self.train_window, sim)


def make_calibration_objective(days_train=2, seed=0, days_test=3, noise_free=False):
    return CalibrationObjective(days_train, days_test, seed, noise_free)
