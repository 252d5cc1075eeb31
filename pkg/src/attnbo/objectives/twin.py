"""Three-zone thermal/humidity stand-in for the building digital twin.

Each zone ``i`` follows

    dT_i/dt = alpha_i (T_amb(t) - T_i) + beta_i occ_i(t) + gamma s(t)
    dw_i/dt = nu (w_amb - w_i) + lambda_i occ_i(t)

with a sinusoidal ambient temperature, a half-sine solar shape and fixed
daily occupancy windows.  Time is in hours, temperatures in degC and
humidity ratios in g/kg.  Integration is explicit Euler at one-minute
steps; outputs are sampled every 15 minutes starting at t = 0.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass

import numpy as np

from ..bbo.domain import SearchDomain
from ..errors import PreconditionError, SimulationError

if os.environ.get("ATTNBO_PURE_PYTHON"):
    from ._twin_fallback import integrate as _integrate

    KERNEL = "python"
else:
    try:
        from ._twin_kernel import integrate as _integrate

        KERNEL = "cython"
    except ImportError:  # extension not built
        from ._twin_fallback import integrate as _integrate

        KERNEL = "python"

CHANNELS = ("T1", "T2", "T3", "w1", "w2", "w3")
SAMPLE_MIN = 15
SAMPLES_PER_DAY = 24 * 60 // SAMPLE_MIN

# name, true value, search interval
TABLE1 = (
    ("theta1", 8.00, 6.0, 10.0),
    ("theta2", 5.00, 3.0, 7.0),
    ("theta3", 0.45, 0.0, 1.0),
    ("theta4", 3.00, 2.0, 4.0),
    ("theta5", 1.00, 0.0, 2.0),
    ("theta6", 0.10, 0.0, 1.0),
    ("theta7", 1.00, 0.0, 1.0),
    ("theta8", 0.10, 0.0, 1.0),
    ("theta9", 18.00, 14.0, 20.0),
    ("theta10", 10.00, 8.0, 11.0),
    ("theta11", 0.48, 0.0, 2.0),
    ("theta12", 6.00, 3.0, 7.0),
)
TRUE_THETA = np.array([row[1] for row in TABLE1])
TWIN_DOMAIN = SearchDomain(
    np.array([row[2] for row in TABLE1]),
    np.array([row[3] for row in TABLE1]),
    tuple(row[0] for row in TABLE1),
)

# occupancy windows, minutes after midnight [start, end)
OCCUPANCY = ((5 * 60, 14 * 60), (8 * 60 + 30, 18 * 60), (15 * 60, 24 * 60))


@dataclass(frozen=True)
class TwinConstants:
    gamma: float = 1.5  # solar gain, K/h
    ambient_amplitude: float = 8.0  # K
    dt_min: int = 1
    t0: float = 20.0
    w0: float = 8.0


DEFAULT_CONSTANTS = TwinConstants()


@dataclass(frozen=True)
class TwinParameters:
    """Physical coefficients decoded from the 12-vector theta."""

    alpha: tuple  # envelope coupling per zone, 1/h
    beta: tuple  # occupied thermal gain, K/h
    lam: tuple  # occupied moisture gain, g/kg/h
    w_amb: float  # g/kg
    t_mean: float  # degC
    nu: float  # ventilation exchange, 1/h

    @classmethod
    def from_theta(cls, theta, validate=True):
        th = np.asarray(theta, dtype=np.float64).reshape(-1)
        if th.size != 12:
            raise PreconditionError(f"the twin takes 12 parameters, got {th.size}")
        if validate and not TWIN_DOMAIN.contains(th):
            bad = [TABLE1[i][0] for i in range(12) if not TWIN_DOMAIN.lower[i] <= th[i] <= TWIN_DOMAIN.upper[i]]
            raise PreconditionError(f"parameters outside their search intervals: {bad}")
        t = [float(v) for v in th]
        return cls(
            alpha=(t[0] * 0.01, t[1] * 0.01, t[3] * 0.01),
            beta=(t[4], t[5], t[6]),
            lam=(t[10], t[7], t[2]),
            w_amb=t[8],
            t_mean=t[9],
            nu=t[11] * 0.1,
        )


@dataclass(frozen=True, eq=False)
class OutputSeries:
    """Channels T1..T3 (degC) and w1..w3 (g/kg), one column per 15-minute sample."""

    values: np.ndarray
    start_min: int = 0
    step_min: int = SAMPLE_MIN

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise PreconditionError("output series must be (channels, samples)")
        object.__setattr__(self, "values", values)

    @property
    def n_channels(self):
        return self.values.shape[0]

    @property
    def n_samples(self):
        return self.values.shape[1]

    @property
    def time_min(self):
        return self.start_min + self.step_min * np.arange(self.n_samples)

    def window(self, start, stop):
        """Samples [start, stop) as a new series."""
        return OutputSeries(self.values[:, start:stop], self.start_min + start * self.step_min, self.step_min)


@functools.lru_cache(maxsize=16)
def _forcing(n_steps, constants):
    """Ambient swing, solar gain and occupancy per integration step."""
    dt = constants.dt_min
    amb = np.empty(n_steps)
    solar = np.empty(n_steps)
    occ = np.zeros((3, n_steps))
    for n in range(n_steps):
        minute = (n * dt) % 1440
        hour = minute / 60.0
        amb[n] = constants.ambient_amplitude * math.sin(2.0 * math.pi * (hour - 9.0) / 24.0)
        solar[n] = constants.gamma * max(0.0, math.sin(math.pi * (hour - 6.0) / 12.0))
        for i, (start, end) in enumerate(OCCUPANCY):
            if start <= minute < end:
                occ[i, n] = 1.0
    for arr in (amb, solar, occ):
        arr.flags.writeable = False
    return amb, solar, occ


def integrate_twin(params, days, constants=DEFAULT_CONSTANTS):
    """Integrate the stand-in without any domain check on ``params``."""
    if days < 1:
        raise PreconditionError("days must be >= 1")
    if 1440 % constants.dt_min or SAMPLE_MIN % constants.dt_min:
        raise PreconditionError("dt_min must divide the 15-minute sample spacing")
    n_steps = int(days) * 1440 // constants.dt_min
    amb, solar, occ = _forcing(n_steps, constants)
    out, bad = _integrate(
        np.array(params.alpha, dtype=np.float64),
        np.array(params.beta, dtype=np.float64),
        np.array(params.lam, dtype=np.float64),
        float(params.w_amb),
        float(params.t_mean),
        float(params.nu),
        amb,
        solar,
        np.ascontiguousarray(occ),
        float(constants.t0),
        float(constants.w0),
        constants.dt_min / 60.0,
        SAMPLE_MIN // constants.dt_min,
        int(days) * SAMPLES_PER_DAY,
    )
    if bad >= 0:
        t = bad * constants.dt_min
        raise SimulationError(f"non-finite twin state at t = {t} min", time_min=t)
    return OutputSeries(out)


def simulate_twin(theta, days, constants=DEFAULT_CONSTANTS):
    """Simulate ``days`` days for a 12-vector ``theta`` inside its search box."""
    params = theta if isinstance(theta, TwinParameters) else TwinParameters.from_theta(theta)
    return integrate_twin(params, days, constants)
