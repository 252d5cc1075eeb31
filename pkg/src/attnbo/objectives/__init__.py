"""Benchmark objectives: the 1-D exemplar and the twin calibration task."""

from .calibration import CalibrationObjective, make_calibration_objective
from .cost import COST_FLOOR, CostWeights, calibration_cost, channel_cvrmse, cvrmse
from .exemplar import EXEMPLAR_OPTIMUM, ExemplarObjective, exemplar_1d
from .measurement import MeasurementModel, add_noise, corrupt_measurements, quantize
from .series_io import read_series_csv, write_series_csv
from .twin import (
    CHANNELS,
    KERNEL,
    TABLE1,
    TRUE_THETA,
    TWIN_DOMAIN,
    OutputSeries,
    TwinConstants,
    TwinParameters,
    integrate_twin,
    simulate_twin,
)

__all__ = [
    "CHANNELS",
    "COST_FLOOR",
    "EXEMPLAR_OPTIMUM",
    "KERNEL",
    "TABLE1",
    "TRUE_THETA",
    "TWIN_DOMAIN",
    "CalibrationObjective",
    "CostWeights",
    "ExemplarObjective",
    "MeasurementModel",
    "OutputSeries",
    "TwinConstants",
    "TwinParameters",
    "add_noise",
    "calibration_cost",
    "channel_cvrmse",
    "corrupt_measurements",
    "cvrmse",
    "exemplar_1d",
    "integrate_twin",
    "make_calibration_objective",
    "quantize",
    "read_series_csv",
    "simulate_twin",
    "write_series_csv",
]
