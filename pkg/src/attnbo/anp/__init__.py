"""Attentive neural process surrogate."""

from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    AnpModel,
    AnpPrediction,
    ConditionedAnp,
    ContextSet,
    LatentGaussian,
    TargetSet,
    decode,
    elbo_loss,
    encode_deterministic,
    encode_latent,
    kl_diag_gaussians,
    predict,
)
from .train import INITIAL_SCHEDULE, ROUND_SCHEDULE, TrainingSchedule, TrainResult, train

__all__ = [
    "INITIAL_SCHEDULE",
    "ROUND_SCHEDULE",
    "AnpModel",
    "AnpPrediction",
    "ConditionedAnp",
    "ContextSet",
    "LatentGaussian",
    "TargetSet",
    "TrainResult",
    "TrainingSchedule",
    "decode",
    "elbo_loss",
    "encode_deterministic",
    "encode_latent",
    "kl_diag_gaussians",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "train",
]
