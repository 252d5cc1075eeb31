"""Differentiable operations.

Each op computes its forward value with numpy and registers a
vector-Jacobian product on the active tape (see :func:`tape.record`).
Stacked minibatches of variable-size sets are described by
:class:`Segments`; set-wise ops (mean aggregation, attention) respect the
block structure so that one dense matmul serves the whole minibatch.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

from ..errors import ConfigurationError, ModelInvariantError, PreconditionError
from .tape import Tensor, as_tensor, count_macs, record

LOG_2PI = math.log(2.0 * math.pi)

# open-interval guards for the bounded activations
_LOW = np.nextafter(0.1, 1.0)
_HIGH = np.nextafter(1.0, 0.0)

ACTIVATIONS = ("linear", "leaky_relu", "sigmoid", "softplus", "bounded_sigmoid", "bounded_softplus")


class Segments:
    """Partition of stacked rows into contiguous sets (one per minibatch element)."""

    def __init__(self, counts):
        counts = np.asarray(counts, dtype=np.intp)
        if counts.ndim != 1 or counts.size == 0 or np.any(counts < 1):
            raise PreconditionError(f"every set needs at least one row, got counts {counts}")
        self.counts = counts
        self.offsets = np.concatenate([[0], np.cumsum(counts)])
        self.total = int(self.offsets[-1])
        self.max = int(counts.max())
        self.ids = np.repeat(np.arange(counts.size), counts)
        self.pos = np.arange(self.total) - self.offsets[self.ids]

    @classmethod
    def single(cls, n):
        return cls([n])

    def __len__(self):
        return self.counts.size

    def __repr__(self):
        return f"Segments(n={len(self)}, total={self.total})"


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- elementwise arithmetic ---------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(g, b.shape) if needs[1] else None,
        )

    return record(a.data + b.data, (a, b), vjp)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g, needs):
        return (
            _unbroadcast(g, a.shape) if needs[0] else None,
            _unbroadcast(-g, b.shape) if needs[1] else None,
        )

    return record(a.data - b.data, (a, b), vjp)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def vjp(g, needs):
        return (
            _unbroadcast(g * b.data, a.shape) if needs[0] else None,
            _unbroadcast(g * a.data, b.shape) if needs[1] else None,
        )

    return record(a.data * b.data, (a, b), vjp)


def neg(a):
    return record(-a.data, (a,), lambda g, needs: (-g,))


def square(a):
    return record(a.data * a.data, (a,), lambda g, needs: (2.0 * a.data * g,))


def log(a):
    return record(np.log(a.data), (a,), lambda g, needs: (g / a.data,))


def exp(a):
    y = np.exp(a.data)
    return record(y, (a,), lambda g, needs: (g * y,))


def sum_all(a):
    return record(np.array(a.data.sum()), (a,), lambda g, needs: (np.full(a.shape, float(g)),))


def mean_all(a):
    n = a.data.size
    return record(np.array(a.data.mean()), (a,), lambda g, needs: (np.full(a.shape, float(g) / n),))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ConfigurationError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    count_macs(a.shape[0] * a.shape[1] * b.shape[1])

    def vjp(g, needs):
        return (g @ b.data.T if needs[0] else None, a.data.T @ g if needs[1] else None)

    return record(a.data @ b.data, (a, b), vjp)


# -- activations --------------------------------------------------------------


def _activate(z, kind, slope):
    if kind == "linear":
        return z
    if kind == "leaky_relu":
        # valid for 0 <= slope <= 1
        return np.maximum(z, slope * z)
    if kind == "sigmoid":
        return expit(z)
    if kind == "softplus":
        return np.logaddexp(0.0, z)
    if kind == "bounded_sigmoid":
        return np.clip(0.1 + 0.9 * expit(z), _LOW, _HIGH)
    if kind == "bounded_softplus":
        return np.maximum(0.1 + 0.9 * np.logaddexp(0.0, z), _LOW)
    raise ConfigurationError(f"unknown activation {kind!r}")


def _activation_slope(z, kind, slope):
    # derivative of the unclipped activation; the clip only bites in saturation
    if kind == "linear":
        return None
    if kind == "leaky_relu":
        return (z > 0) * (1.0 - slope) + slope
    if kind == "sigmoid":
        s = expit(z)
        return s * (1.0 - s)
    if kind == "softplus":
        return expit(z)
    if kind == "bounded_sigmoid":
        s = expit(z)
        return 0.9 * s * (1.0 - s)
    if kind == "bounded_softplus":
        return 0.9 * expit(z)
    raise ConfigurationError(f"unknown activation {kind!r}")


def activation(x, kind, slope=0.1):
    x = as_tensor(x)

    def vjp(g, needs):
        d = _activation_slope(x.data, kind, slope)
        return (g if d is None else g * d,)

    return record(_activate(x.data, kind, slope), (x,), vjp)


def dense(x, weight, bias=None, kind="linear", slope=0.1):
    """``activation(x @ weight.T + bias)``, fused into a single tape node."""
    x = as_tensor(x)
    if x.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ConfigurationError(
            f"dense input has {x.shape[-1]} columns, layer expects {weight.shape[1]}"
        )
    count_macs(x.shape[0] * weight.shape[0] * weight.shape[1])
    z = x.data @ weight.data.T
    if bias is not None:
        z += bias.data
    y = _activate(z, kind, slope)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def vjp(g, needs):
        d = _activation_slope(z, kind, slope)
        gz = g if d is None else g * d
        out = [
            gz @ weight.data if needs[0] else None,
            gz.T @ x.data if needs[1] else None,
        ]
        if bias is not None:
            out.append(gz.sum(axis=0) if needs[2] else None)
        return out

    return record(y, parents, vjp)


# -- shape manipulation -------------------------------------------------------


def concat_cols(tensors):
    tensors = [as_tensor(t) for t in tensors]
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ConfigurationError(f"concat_cols row counts differ: {sorted(rows)}")
    widths = [t.shape[1] for t in tensors]
    edges = np.cumsum([0] + widths)

    def vjp(g, needs):
        return [g[:, edges[i] : edges[i + 1]] if needs[i] else None for i in range(len(tensors))]

    return record(np.concatenate([t.data for t in tensors], axis=1), tuple(tensors), vjp)


def slice_cols(x, start, stop):
    def vjp(g, needs):
        full = np.zeros_like(x.data)
        full[:, start:stop] = g
        return (full,)

    return record(x.data[:, start:stop], (x,), vjp)


def segment_mean(x, segments):
    """Row-mean of each segment: (total, d) -> (n_segments, d)."""
    if x.shape[0] != segments.total:
        raise ConfigurationError(f"{x.shape[0]} rows do not match {segments}")
    counts = segments.counts[:, None]
    y = np.add.reduceat(x.data, segments.offsets[:-1], axis=0) / counts

    def vjp(g, needs):
        return (np.repeat(g / counts, segments.counts, axis=0),)

    return record(y, (x,), vjp)


def repeat_rows(x, segments):
    """Broadcast row ``b`` of ``x`` to every row of segment ``b``."""
    if x.shape[0] != len(segments):
        raise ConfigurationError(f"{x.shape[0]} rows do not match {segments}")

    def vjp(g, needs):
        return (np.add.reduceat(g, segments.offsets[:-1], axis=0),)

    return record(np.repeat(x.data, segments.counts, axis=0), (x,), vjp)


# -- attention ----------------------------------------------------------------


def _to_padded(rows, seg, width):
    out = np.zeros((len(seg), seg.max, width))
    out[seg.ids, seg.pos] = rows
    return out


def attend(q, k, v, heads, q_segments=None, k_segments=None, return_weights=False):
    """Multi-head scaled dot-product attention on already-projected rows.

    Query rows of segment ``b`` attend only to key/value rows of segment
    ``b``.  Output rows are the concatenated heads (before any output
    projection).  With ``return_weights`` the attention weights are returned
    as a padded ``(n_segments, heads, max_q, max_k)`` array as well.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    if k.shape[0] < 1 or k.shape[0] != v.shape[0]:
        raise PreconditionError(f"need >= 1 key with matching values, got {k.shape[0]}/{v.shape[0]}")
    dm = q.shape[1]
    if k.shape[1] != dm or v.shape[1] != dm or dm % heads:
        raise ConfigurationError(f"model dim {dm} incompatible with keys/values/heads={heads}")
    q_seg = q_segments if q_segments is not None else Segments.single(q.shape[0])
    k_seg = k_segments if k_segments is not None else Segments.single(k.shape[0])
    if len(q_seg) != len(k_seg) or q_seg.total != q.shape[0] or k_seg.total != k.shape[0]:
        raise ConfigurationError("query/key segments do not line up")
    dh = dm // heads
    scale = 1.0 / math.sqrt(dh)
    nb, mq, mk = len(q_seg), q_seg.max, k_seg.max
    count_macs(2 * dm * int(np.dot(q_seg.counts, k_seg.counts)))

    def split(a, m):
        return a.reshape(nb, m, heads, dh).transpose(0, 2, 1, 3)

    Qh = split(_to_padded(q.data, q_seg, dm), mq)
    Kh = split(_to_padded(k.data, k_seg, dm), mk)
    Vh = split(_to_padded(v.data, k_seg, dm), mk)
    S = (Qh @ Kh.transpose(0, 1, 3, 2)) * scale
    padded = np.any(k_seg.counts != mk)
    if padded:
        valid = np.arange(mk)[None, :] < k_seg.counts[:, None]
        S = np.where(valid[:, None, None, :], S, -np.inf)
    S -= S.max(axis=-1, keepdims=True)
    A = np.exp(S)
    A /= A.sum(axis=-1, keepdims=True)
    O = (A @ Vh).transpose(0, 2, 1, 3).reshape(nb, mq, dm)
    out_rows = O[q_seg.ids, q_seg.pos]

    def vjp(g, needs):
        Gh = split(_to_padded(g, q_seg, dm), mq)
        dA = Gh @ Vh.transpose(0, 1, 3, 2)
        dS = A * (dA - (dA * A).sum(axis=-1, keepdims=True))
        dS *= scale

        def rows(x, seg, m):
            return x.transpose(0, 2, 1, 3).reshape(nb, m, dm)[seg.ids, seg.pos]

        return (
            rows(dS @ Kh, q_seg, mq) if needs[0] else None,
            rows(dS.transpose(0, 1, 3, 2) @ Qh, k_seg, mk) if needs[1] else None,
            rows(A.transpose(0, 1, 3, 2) @ Gh, k_seg, mk) if needs[2] else None,
        )

    out = record(out_rows, (q, k, v), vjp)
    return (out, A) if return_weights else out


# -- probabilistic pieces -----------------------------------------------------


def reparameterized_sample(mean, std, noise):
    """``mean + std * noise`` with gradients flowing to ``mean`` and ``std``."""
    mean, std = as_tensor(mean), as_tensor(std)
    if np.any(~(std.data > 0)):
        raise ModelInvariantError("reparameterized_sample requires every std > 0")
    return add(mean, mul(std, as_tensor(noise)))


def gaussian_nll(y, mu, sigma):
    """Per-row negative Gaussian log-likelihood of constants ``y``."""
    y = np.asarray(y, dtype=np.float64)
    r = y - mu.data
    s2 = sigma.data * sigma.data
    out = 0.5 * LOG_2PI + np.log(sigma.data) + r * r / (2.0 * s2)

    def vjp(g, needs):
        return (
            -g * r / s2 if needs[0] else None,
            g * (1.0 / sigma.data - r * r / (s2 * sigma.data)) if needs[1] else None,
        )

    return record(out, (mu, sigma), vjp)


def kl_diag(mu1, s1, mu2, s2):
    """Row-wise KL[N(mu1, s1^2) || N(mu2, s2^2)] summed over columns -> (rows, 1)."""
    d = mu1.data - mu2.data
    v2 = s2.data * s2.data
    terms = np.log(s2.data / s1.data) + (s1.data * s1.data + d * d) / (2.0 * v2) - 0.5
    out = terms.sum(axis=1, keepdims=True)

    def vjp(g, needs):
        return (
            g * d / v2 if needs[0] else None,
            g * (s1.data / v2 - 1.0 / s1.data) if needs[1] else None,
            -g * d / v2 if needs[2] else None,
            g * (1.0 / s2.data - (s1.data * s1.data + d * d) / (v2 * s2.data)) if needs[3] else None,
        )

    return record(out, (mu1, s1, mu2, s2), vjp)


__all__ = [
    "ACTIVATIONS",
    "Segments",
    "Tensor",
    "activation",
    "add",
    "attend",
    "concat_cols",
    "dense",
    "exp",
    "gaussian_nll",
    "kl_diag",
    "log",
    "matmul",
    "mean_all",
    "mul",
    "neg",
    "repeat_rows",
    "reparameterized_sample",
    "segment_mean",
    "slice_cols",
    "square",
    "sub",
    "sum_all",
]
