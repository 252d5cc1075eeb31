"""Batch Bayesian optimization engine."""

from .acquisition import ExclusionSet, penalized_target_sample, ucb
from .domain import EvaluationDataset, SearchDomain
from .engine import (
    BatchPlan,
    BboConfig,
    Candidate,
    EvaluationRecord,
    RoundTiming,
    RunHistory,
    context_from,
    run,
    select_batch,
    stream_seed,
)
from .sobol import sobol_init, sobol_unit

__all__ = [
    "BatchPlan",
    "BboConfig",
    "Candidate",
    "EvaluationDataset",
    "EvaluationRecord",
    "ExclusionSet",
    "RoundTiming",
    "RunHistory",
    "SearchDomain",
    "context_from",
    "penalized_target_sample",
    "run",
    "select_batch",
    "sobol_init",
    "sobol_unit",
    "stream_seed",
    "ucb",
]
