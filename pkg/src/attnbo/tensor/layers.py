"""Dense and multi-head attention layers with glorot-uniform initialization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, PreconditionError
from . import ops
from .tape import Tensor, parameter


def glorot_uniform(rng, n_out, n_in):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_out, n_in))


@dataclass
class DenseLayer:
    weight: Tensor  # (out, in)
    bias: Tensor | None  # (out,)
    activation: str = "linear"
    slope: float = 0.1

    def __post_init__(self):
        if self.activation not in ops.ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        if self.weight.data.ndim != 2:
            raise ConfigurationError("dense weight must be 2-D (out x in)")
        if self.bias is not None and self.bias.shape != (self.weight.shape[0],):
            raise ConfigurationError(
                f"bias shape {self.bias.shape} does not match weight {self.weight.shape}"
            )

    @classmethod
    def create(cls, n_in, n_out, rng, activation="linear", slope=0.1, bias=True):
        w = parameter(glorot_uniform(rng, n_out, n_in))
        b = parameter(np.zeros(n_out)) if bias else None
        return cls(w, b, activation, slope)

    @property
    def n_in(self):
        return self.weight.shape[1]

    @property
    def n_out(self):
        return self.weight.shape[0]

    def parameters(self, prefix):
        params = {f"{prefix}.weight": self.weight}
        if self.bias is not None:
            params[f"{prefix}.bias"] = self.bias
        return params

    def __call__(self, x):
        return dense_forward(self, x)


def dense_forward(layer, x):
    return ops.dense(x, layer.weight, layer.bias, layer.activation, layer.slope)


@dataclass
class MultiHeadAttention:
    """Scaled dot-product attention with ``heads`` heads of width model_dim/heads.

    The per-head projections are stored side by side, so ``w_query`` is a
    (model_dim x model_dim) matrix whose row blocks belong to one head each.
    """

    heads: int
    w_query: DenseLayer
    w_key: DenseLayer
    w_value: DenseLayer
    w_out: DenseLayer

    def __post_init__(self):
        if self.model_dim % self.heads:
            raise ConfigurationError(f"model_dim {self.model_dim} not divisible by {self.heads} heads")

    @classmethod
    def create(cls, model_dim, heads, rng):
        if model_dim % heads:
            raise ConfigurationError(f"model_dim {model_dim} not divisible by {heads} heads")
        make = lambda: DenseLayer.create(model_dim, model_dim, rng, bias=False)  # noqa: E731
        return cls(heads, make(), make(), make(), make())

    @property
    def model_dim(self):
        return self.w_query.n_out

    def parameters(self, prefix):
        params = {}
        for name in ("w_query", "w_key", "w_value", "w_out"):
            params.update(getattr(self, name).parameters(f"{prefix}.{name}"))
        return params

    def project_keys(self, keys, values):
        return self.w_key(keys), self.w_value(values)

    def attend_projected(self, queries, k_proj, v_proj, q_segments=None, k_segments=None):
        q_proj = self.w_query(queries)
        mixed = ops.attend(q_proj, k_proj, v_proj, self.heads, q_segments, k_segments)
        return self.w_out(mixed)


def attention_forward(attn, queries, keys, values, q_segments=None, k_segments=None):
    """Project, attend per head, concatenate heads, output-project."""
    if keys.shape[0] < 1:
        raise PreconditionError("attention needs at least one key")
    k_proj, v_proj = attn.project_keys(keys, values)
    return attn.attend_projected(queries, k_proj, v_proj, q_segments, k_segments)
