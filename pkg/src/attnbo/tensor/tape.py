"""Tensors and the reverse-mode tape.

A :class:`Tape` records every differentiable operation executed while it is
active (it is bound to the current context, so threads running inference
without a tape never record anything).  Gradients live in the tape, not on
the tensors, which keeps parameter tensors safe to share between threads.
"""

from __future__ import annotations

import contextvars

import numpy as np

_ACTIVE_TAPE: contextvars.ContextVar = contextvars.ContextVar("attnbo_tape", default=None)
_ACTIVE_COUNTER: contextvars.ContextVar = contextvars.ContextVar("attnbo_flops", default=None)


class Tensor:
    """A float64 array that may take part in gradient computation.

    Activations are 2-D (rows x cols, row-major); bias vectors are 1-D.
    """

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1] if self.data.ndim > 1 else 1

    def numpy(self):
        return self.data

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    # arithmetic sugar, handy in tests and small expressions
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops

        return ops.sub(as_tensor(other), self)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def __neg__(self):
        from . import ops

        return ops.neg(self)


def as_tensor(value):
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data, name=None):
    """A leaf tensor that gradients are computed for."""
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


class Tape:
    """Records one forward pass so that gradients can be pulled back through it.

    Usage::

        with Tape() as tape:
            loss = f(params)
        grads = tape.gradient(loss, params)
    """

    def __init__(self):
        self._nodes = []
        self._token = None
        self._used = False

    def __enter__(self):
        if self._used:
            raise RuntimeError("a Tape records exactly one forward pass")
        self._used = True
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self._nodes)

    def gradient(self, loss, sources):
        """Gradients of the scalar ``loss`` with respect to each of ``sources``.

        Sources that the loss does not depend on get a zero array.
        """
        if loss.data.size != 1:
            raise ValueError(f"loss must be a scalar, got shape {loss.shape}")
        grads = {id(loss): np.ones_like(loss.data)}
        for out, parents, needs, vjp in reversed(self._nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for p, need, gp in zip(parents, needs, vjp(g, needs)):
                if not need or gp is None:
                    continue
                key = id(p)
                prev = grads.get(key)
                grads[key] = gp if prev is None else prev + gp
        return [grads.get(id(s), np.zeros_like(s.data)) for s in sources]


def record(data, parents, vjp):
    """Wrap ``data`` as an op output and, when a tape is active, log the op.

    ``vjp(g, needs)`` must return one gradient (or None) per parent.
    """
    tape = _ACTIVE_TAPE.get()
    if tape is None:
        return Tensor(data)
    needs = tuple(p.requires_grad for p in parents)
    if not any(needs):
        return Tensor(data)
    out = Tensor(data, requires_grad=True)
    tape._nodes.append((out, parents, needs, vjp))
    return out


class FlopCounter:
    """Counts multiply-adds issued by matrix products and attention."""

    def __init__(self):
        self.macs = 0
        self._token = None

    def __enter__(self):
        self._token = _ACTIVE_COUNTER.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_COUNTER.reset(self._token)
        return False


def count_macs(n):
    counter = _ACTIVE_COUNTER.get()
    if counter is not None:
        counter.macs += int(n)
