"""Configuration, experiment runner and command-line interface."""

from .config import ConfigError, ExperimentConfig, ObjectiveSpec, build_objective, load_config, parse_config
from .experiment import ARMS, build_report, median_incumbents, run_ablation, run_experiment

__all__ = [
    "ARMS",
    "ConfigError",
    "ExperimentConfig",
    "ObjectiveSpec",
    "build_objective",
    "build_report",
    "load_config",
    "median_incumbents",
    "parse_config",
    "run_ablation",
    "run_experiment",
]
