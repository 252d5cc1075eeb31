"""Attentive neural process with a cross-attention deterministic path.

Shapes used throughout: ``x_dim`` is the (normalized) parameter dimension,
``latent_dim`` the width of both the deterministic representation ``r`` and
the global latent ``z``.  Sets of several minibatch elements are stacked
row-wise and described by :class:`~attnbo.tensor.Segments`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, PreconditionError, TrainingError
from ..tensor import DenseLayer, MultiHeadAttention, Segments, Tape, Tensor, ops, reparameterized_sample

LATENT_DIM = 128
HIDDEN = 256
HEADS = 8
SLOPE = 0.1


def _as_rows(theta):
    theta = np.asarray(theta, dtype=np.float64)
    return theta[:, None] if theta.ndim == 1 else theta


@dataclass(frozen=True, eq=False)
class ContextSet:
    """Observed (theta, value) pairs; theta normalized to the unit box."""

    theta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        theta = _as_rows(self.theta)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if theta.ndim != 2 or theta.shape[0] < 1:
            raise PreconditionError("context set must hold at least one point")
        if values.shape[0] != theta.shape[0]:
            raise PreconditionError(f"{theta.shape[0]} thetas but {values.shape[0]} values")
        if np.any(theta < 0.0) or np.any(theta > 1.0):
            raise PreconditionError("context thetas must lie in the unit box")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("context values must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.theta.shape[0]

    def subset(self, idx):
        return ContextSet(self.theta[idx], self.values[idx])


@dataclass(frozen=True, eq=False)
class TargetSet:
    theta: np.ndarray

    def __post_init__(self):
        theta = _as_rows(self.theta)
        if theta.ndim != 2 or theta.shape[0] < 1:
            raise PreconditionError("target set must hold at least one point")
        if np.any(theta < 0.0) or np.any(theta > 1.0):
            raise PreconditionError("target thetas must lie in the unit box")
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return self.theta.shape[0]


@dataclass
class LatentGaussian:
    mean: np.ndarray
    std: np.ndarray

    def sample(self, rng):
        return self.mean + self.std * rng.standard_normal(self.mean.shape)


@dataclass
class AnpPrediction:
    """Per-target Gaussian predictions and the latent draw that produced them."""

    mean: np.ndarray
    std: np.ndarray
    z: np.ndarray

    def __len__(self):
        return self.mean.shape[0]


class AnpModel:
    def __init__(self, x_dim, seed=0, *, latent_dim=LATENT_DIM, hidden=HIDDEN, heads=HEADS, slope=SLOPE):
        if x_dim < 1:
            raise ConfigurationError("x_dim must be >= 1")
        self.x_dim = x_dim
        self.latent_dim = latent_dim
        self.hidden = hidden
        self.heads = heads
        self.slope = slope
        self.seed = seed
        rng = np.random.default_rng(seed)

        def hidden_layer(n_in):
            return DenseLayer.create(n_in, hidden, rng, "leaky_relu", slope)

        def encoder():
            return [hidden_layer(x_dim + 1), hidden_layer(hidden), DenseLayer.create(hidden, latent_dim, rng)]

        self.det_encoder = encoder()
        self.latent_encoder = encoder()
        self.latent_mean = DenseLayer.create(latent_dim, latent_dim, rng)
        self.latent_std = DenseLayer.create(latent_dim, latent_dim, rng, "bounded_sigmoid")
        self.position = DenseLayer.create(x_dim, latent_dim, rng)
        self.cross_attention = MultiHeadAttention.create(latent_dim, heads, rng)
        self.decoder = [hidden_layer(2 * latent_dim + x_dim), hidden_layer(hidden), hidden_layer(hidden)]
        self.out_mean = DenseLayer.create(hidden, 1, rng)
        self.out_std = DenseLayer.create(hidden, 1, rng, "bounded_softplus")

    def config(self):
        return {
            "x_dim": self.x_dim,
            "latent_dim": self.latent_dim,
            "hidden": self.hidden,
            "heads": self.heads,
            "slope": self.slope,
            "seed": self.seed,
        }

    def parameters(self):
        """Name -> parameter tensor, in a fixed order."""
        params = {}
        for i, layer in enumerate(self.det_encoder):
            params.update(layer.parameters(f"det_encoder.{i}"))
        for i, layer in enumerate(self.latent_encoder):
            params.update(layer.parameters(f"latent_encoder.{i}"))
        params.update(self.latent_mean.parameters("latent_mean"))
        params.update(self.latent_std.parameters("latent_std"))
        params.update(self.position.parameters("position"))
        params.update(self.cross_attention.parameters("cross_attention"))
        for i, layer in enumerate(self.decoder):
            params.update(layer.parameters(f"decoder.{i}"))
        params.update(self.out_mean.parameters("out_mean"))
        params.update(self.out_std.parameters("out_std"))
        return params

    def state_dict(self):
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state_dict(self, state):
        params = self.parameters()
        missing = set(params) - set(state)
        if missing:
            raise ConfigurationError(f"weights missing for {sorted(missing)}")
        for name, p in params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.shape:
                raise ConfigurationError(f"{name}: shape {arr.shape} != {p.shape}")
            p.data = arr.copy()

    def copy(self):
        return copy.deepcopy(self)

    def n_parameters(self):
        return sum(p.data.size for p in self.parameters().values())


# -- batched building blocks (work on stacked rows) ---------------------------


def _mlp(layers, x):
    for layer in layers:
        x = layer(x)
    return x


def _pairs(x, y):
    return ops.concat_cols([x, y])


def latent_path(model, x, y, seg):
    """Mean-aggregated latent encoding -> (mu, sigma), one row per segment."""
    s = ops.segment_mean(_mlp(model.latent_encoder, _pairs(x, y)), seg)
    return model.latent_mean(s), model.latent_std(s)


def context_memory(model, cx, cy):
    """Keys and values the target queries attend to."""
    values = _mlp(model.det_encoder, _pairs(cx, cy))
    keys = model.position(cx)
    return model.cross_attention.project_keys(keys, values)


def deterministic_path(model, tx, k_proj, v_proj, t_seg=None, c_seg=None):
    return model.cross_attention.attend_projected(model.position(tx), k_proj, v_proj, t_seg, c_seg)


def decoder_path(model, z_rows, tx, r):
    h = _mlp(model.decoder, ops.concat_cols([z_rows, tx, r]))
    return model.out_mean(h), model.out_std(h)


def batch_elbo(model, cx, cy, c_seg, tx, ty, t_seg, noise):
    """Negative ELBO averaged over the minibatch elements (a scalar tensor).

    ``noise`` holds one standard-normal latent draw per element; the latent
    is sampled from the target-conditioned posterior.
    """
    mu_c, sd_c = latent_path(model, cx, cy, c_seg)
    mu_t, sd_t = latent_path(model, tx, ty, t_seg)
    z = reparameterized_sample(mu_t, sd_t, noise)
    k_proj, v_proj = context_memory(model, cx, cy)
    r = deterministic_path(model, tx, k_proj, v_proj, t_seg, c_seg)
    mu, sigma = decoder_path(model, ops.repeat_rows(z, t_seg), tx, r)
    nll = ops.segment_mean(ops.gaussian_nll(ty.data, mu, sigma), t_seg)
    kl = ops.kl_diag(mu_t, sd_t, mu_c, sd_c)
    return ops.mean_all(ops.add(nll, kl))


# -- single-set operations ----------------------------------------------------


def _check_dims(model, theta):
    if theta.shape[1] != model.x_dim:
        raise ConfigurationError(f"model expects {model.x_dim}-D inputs, got {theta.shape[1]}")


def _xy(s):
    return Tensor(s.theta), Tensor(s.values[:, None])


def encode_deterministic(model, ctx, targets):
    """Per-target cross-attended representation, shape (n_targets, latent_dim)."""
    _check_dims(model, ctx.theta)
    _check_dims(model, targets.theta)
    cx, cy = _xy(ctx)
    k_proj, v_proj = context_memory(model, cx, cy)
    return deterministic_path(model, Tensor(targets.theta), k_proj, v_proj).data


def encode_latent(model, points):
    _check_dims(model, points.theta)
    x, y = _xy(points)
    mu, sd = latent_path(model, x, y, Segments.single(len(points)))
    return LatentGaussian(mu.data[0], sd.data[0])


def decode(model, z, targets, r):
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.shape[0] != model.latent_dim:
        raise ConfigurationError(f"latent draw has dim {z.shape[0]}, model uses {model.latent_dim}")
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 2 or r.shape != (len(targets), model.latent_dim):
        raise ConfigurationError(f"representation shape {r.shape} does not match {len(targets)} targets")
    _check_dims(model, targets.theta)
    z_rows = np.broadcast_to(z, (len(targets), z.shape[0]))
    mu, sigma = decoder_path(model, Tensor(z_rows), Tensor(targets.theta), Tensor(r))
    return AnpPrediction(mu.data[:, 0].copy(), sigma.data[:, 0].copy(), z.copy())


def kl_diag_gaussians(q1, q2):
    """KL[q1 || q2] for diagonal Gaussians, summed over dimensions."""
    m1, s1 = np.asarray(q1.mean, float), np.asarray(q1.std, float)
    m2, s2 = np.asarray(q2.mean, float), np.asarray(q2.std, float)
    if m1.shape != m2.shape:
        raise ConfigurationError(f"latent dims differ: {m1.shape} vs {m2.shape}")
    return float(np.sum(np.log(s2 / s1) + (s1 * s1 + (m1 - m2) ** 2) / (2.0 * s2 * s2) - 0.5))


def elbo_loss(model, ctx, tgt, noise=None, rng=None):
    """Negative ELBO for one (context, target) pair and its gradients.

    Returns ``(loss, grads)`` with ``grads`` keyed like ``model.parameters()``.
    """
    if noise is None:
        rng = rng if rng is not None else np.random.default_rng()
        noise = rng.standard_normal((1, model.latent_dim))
    noise = np.asarray(noise, dtype=np.float64).reshape(1, model.latent_dim)
    _check_dims(model, ctx.theta)
    _check_dims(model, tgt.theta)
    params = model.parameters()
    cx, cy = _xy(ctx)
    tx, ty = _xy(tgt)
    with Tape() as tape:
        loss = batch_elbo(
            model, cx, cy, Segments.single(len(ctx)), tx, ty, Segments.single(len(tgt)), noise
        )
    value = float(loss.data)
    if not np.isfinite(value):
        raise TrainingError("non-finite ELBO loss")
    grads = tape.gradient(loss, list(params.values()))
    return value, dict(zip(params, grads))


class ConditionedAnp:
    """A frozen model bound to one context set.

    Context-side work (keys, values, latent posterior) is done once; the
    object is read-only afterwards and may serve predictions from several
    threads at the same time.
    """

    def __init__(self, model, ctx, chunk=1024):
        _check_dims(model, ctx.theta)
        self.model = model.copy()
        self.context = ctx
        self.chunk = chunk
        cx, cy = _xy(ctx)
        k_proj, v_proj = context_memory(self.model, cx, cy)
        self._keys = k_proj
        self._values = v_proj
        mu, sd = latent_path(self.model, cx, cy, Segments.single(len(ctx)))
        self.latent = LatentGaussian(mu.data[0], sd.data[0])

    def sample_latent(self, rng):
        return self.latent.sample(rng)

    def predict(self, targets, z):
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        if z.shape[0] != self.model.latent_dim:
            raise ConfigurationError(f"latent draw has dim {z.shape[0]}, model uses {self.model.latent_dim}")
        _check_dims(self.model, targets.theta)
        means, stds = [], []
        for start in range(0, len(targets), self.chunk):
            tx = Tensor(targets.theta[start : start + self.chunk])
            r = deterministic_path(self.model, tx, self._keys, self._values)
            z_rows = Tensor(np.broadcast_to(z, (tx.rows, z.shape[0])))
            mu, sigma = decoder_path(self.model, z_rows, tx, r)
            means.append(mu.data[:, 0])
            stds.append(sigma.data[:, 0])
        return AnpPrediction(np.concatenate(means), np.concatenate(stds), z.copy())


def predict(model, ctx, targets, z):
    """Gaussian predictions at ``targets`` conditioned on ``ctx`` and the latent draw ``z``."""
    return ConditionedAnp(model, ctx).predict(targets, z)
