"""A small dynamic reverse-mode tape over numpy arrays.

Only the operations the network blocks need are provided. Every op
returns a new :class:`Tensor` that remembers its parents and a closure
mapping the output gradient to parent gradients.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ShapeError


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn")

    def __init__(self, data, parents: Sequence["Tensor"] = (), backward_fn: Callable | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def backward(self, seed=None):
        """Accumulate d(self)/d(leaf) into ``.grad`` of every ancestor."""
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node.parents)
        grads = {id(self): np.ones_like(self.data) if seed is None else np.asarray(seed, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            node.grad = g if node.grad is None else node.grad + g
            if node.backward_fn is None:
                continue
            for parent, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg


def lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    return Tensor(a.data + b.data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = lift(a), lift(b)
    return Tensor(a.data * b.data, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def sigmoid(x) -> Tensor:
    x = lift(x)
    # split by sign so large |x| neither overflows nor loses the tail
    pos = x.data >= 0
    ex = np.exp(np.where(pos, -x.data, x.data))
    s = np.where(pos, 1.0 / (1.0 + ex), ex / (1.0 + ex))
    return Tensor(s, (x,), lambda g: (g * s * (1.0 - s),))


def relu(x) -> Tensor:
    x = lift(x)
    mask = x.data > 0
    return Tensor(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def mean_rows(x) -> Tensor:
    """Mean over the point axis: (n, C) -> (C,)."""
    x = lift(x)
    n = x.shape[0]
    return Tensor(x.data.mean(axis=0), (x,), lambda g: (np.broadcast_to(g / n, x.shape).copy(),))


def linear(v, w, b) -> Tensor:
    """Dense layer on the last axis: v @ w + b."""
    v, w, b = lift(v), lift(w), lift(b)
    if v.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear: input width {v.shape[-1]} vs weight rows {w.shape[0]}")

    def back(g):
        gv = g @ w.data.T
        gw = np.outer(v.data, g) if v.data.ndim == 1 else v.data.T @ g
        return gv, gw, _unbroadcast(g, b.shape)

    return Tensor(v.data @ w.data + b.data, (v, w, b), back)


def concat(parts: Sequence, axis: int = 1) -> Tensor:
    parts = [lift(p) for p in parts]
    cuts = np.cumsum([p.shape[axis] for p in parts])[:-1]
    return Tensor(np.concatenate([p.data for p in parts], axis=axis), parts,
                  lambda g: tuple(np.split(g, cuts, axis=axis)))


def conv1d(x, w, b, dilation: int = 1) -> Tensor:
    """Same-padded stride-1 convolution along the point axis.

    x: (n, cin), w: (k, cin, cout) with k odd, b: (cout,).
    out[i] = b + sum_t x_pad[i + t*dilation] @ w[t]
    """
    x, w, b = lift(x), lift(w), lift(b)
    k, cin, cout = w.shape
    if x.data.ndim != 2 or x.shape[1] != cin:
        raise ShapeError(f"conv1d: input shape {x.shape} does not match {cin} input channels")
    n = x.shape[0]
    pad = (k - 1) * dilation // 2
    xp = np.zeros((n + 2 * pad, cin))
    xp[pad:pad + n] = x.data
    out = np.broadcast_to(b.data, (n, cout)).copy()
    for t in range(k):
        out += xp[t * dilation:t * dilation + n] @ w.data[t]

    def back(g):
        gxp = np.zeros_like(xp)
        gw = np.empty_like(w.data)
        for t in range(k):
            window = slice(t * dilation, t * dilation + n)
            gw[t] = xp[window].T @ g
            gxp[window] += g @ w.data[t].T
        return gxp[pad:pad + n], gw, g.sum(axis=0)

    return Tensor(out, (x, w, b), back)


def depthwise_conv1d(x, w, dilation: int = 1) -> Tensor:
    """Per-channel convolution; w: (k, C)."""
    x, w = lift(x), lift(w)
    k, c = w.shape
    if x.data.ndim != 2 or x.shape[1] != c:
        raise ShapeError(f"depthwise conv: input shape {x.shape} vs {c} channels")
    n = x.shape[0]
    pad = (k - 1) * dilation // 2
    xp = np.zeros((n + 2 * pad, c))
    xp[pad:pad + n] = x.data
    out = np.zeros((n, c))
    for t in range(k):
        out += xp[t * dilation:t * dilation + n] * w.data[t]

    def back(g):
        gxp = np.zeros_like(xp)
        gw = np.empty_like(w.data)
        for t in range(k):
            window = slice(t * dilation, t * dilation + n)
            gw[t] = (xp[window] * g).sum(axis=0)
            gxp[window] += g * w.data[t]
        return gxp[pad:pad + n], gw

    return Tensor(out, (x, w), back)


def half_sum_squares(x) -> Tensor:
    x = lift(x)
    return Tensor(0.5 * np.sum(x.data**2), (x,), lambda g: (g * x.data,))
