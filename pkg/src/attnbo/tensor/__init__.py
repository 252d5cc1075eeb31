"""Minimal float64 reverse-mode kernel used to train the neural process."""

from . import ops
from .adam import AdamState, adam_step
from .layers import DenseLayer, MultiHeadAttention, attention_forward, dense_forward, glorot_uniform
from .ops import Segments, reparameterized_sample
from .tape import FlopCounter, Tape, Tensor, as_tensor, parameter

__all__ = [
    "AdamState",
    "DenseLayer",
    "FlopCounter",
    "MultiHeadAttention",
    "Segments",
    "Tape",
    "Tensor",
    "adam_step",
    "as_tensor",
    "attention_forward",
    "dense_forward",
    "glorot_uniform",
    "ops",
    "parameter",
    "reparameterized_sample",
]
