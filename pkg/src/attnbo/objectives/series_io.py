"""CSV import/export of output series (``time_min,T1,T2,T3,w1,w2,w3``)."""

from __future__ import annotations

import csv

import numpy as np

from ..errors import PreconditionError
from .twin import CHANNELS, OutputSeries

HEADER = ("time_min",) + CHANNELS


def write_series_csv(series, path):
    """One row per sample; floats use the shortest round-trip representation."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for t, col in zip(series.time_min, series.values.T):
            writer.writerow([int(t)] + [repr(float(v)) for v in col])


def read_series_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HEADER:
            raise PreconditionError(f"unexpected header {header}, want {HEADER}")
        rows = [r for r in reader if r]
    times = np.array([int(r[0]) for r in rows])
    values = np.array([[float(v) for v in r[1:]] for r in rows]).T
    step = int(times[1] - times[0]) if times.size > 1 else 15
    return OutputSeries(values, int(times[0]) if times.size else 0, step)
