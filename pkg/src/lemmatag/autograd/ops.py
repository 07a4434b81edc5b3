"""Differentiable operations.

Matrix orientation is row-vector throughout: activations have the feature
axis last and a weight matrix of shape (out, in) maps x to x @ W.T + b.
"""
from __future__ import annotations

import numpy as np

from .tensor import Parameter, Tensor, as_tensor, make_result


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


def add(a, b):
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_result(a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_result(a.data - b.data, (a, b), backward)


def mul(a, b):
    a, b = _pair(a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_result(a.data * b.data, (a, b), backward)


def where(mask, a, b):
    """Select `a` where mask is true, else `b`; mask is a constant."""
    a, b = _pair(a, b)
    mask = np.asarray(mask, dtype=bool)

    def backward(g):
        zero = np.zeros((), dtype=g.dtype)
        return (_unbroadcast(np.where(mask, g, zero), a.shape),
                _unbroadcast(np.where(mask, zero, g), b.shape))

    return make_result(np.where(mask, a.data, b.data), (a, b), backward)


def matmul(a, b):
    """Batched matrix product over the last two axes (both operands >= 2-D)."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return make_result(a.data @ b.data, (a, b), backward)


def affine(x, W, b=None):
    """y = x @ W.T + b over the last axis of x; W has shape (out, in)."""
    x = as_tensor(x, like=W)
    if W.ndim != 2 or x.shape[-1] != W.shape[1]:
        raise ValueError(f"affine shape mismatch: x {x.shape} vs W {W.shape}")
    if b is not None and b.shape != (W.shape[0],):
        raise ValueError(f"affine shape mismatch: b {b.shape} vs W {W.shape}")
    y = x.data @ W.data.T
    if b is not None:
        y = y + b.data
    parents = (x, W) if b is None else (x, W, b)

    def backward(g):
        gx = g @ W.data
        g2 = g.reshape(-1, g.shape[-1])
        gW = g2.T @ x.data.reshape(-1, x.shape[-1])
        if b is None:
            return gx, gW
        return gx, gW, g2.sum(axis=0)

    return make_result(y, parents, backward)


def sigmoid(x):
    # split by sign so exp never overflows
    d = x.data
    e = np.exp(-np.abs(d))
    y = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(d.dtype, copy=False)

    def backward(g):
        return (g * y * (1.0 - y),)

    return make_result(y, (x,), backward)


def tanh(x):
    y = np.tanh(x.data)

    def backward(g):
        return (g * (1.0 - y * y),)

    return make_result(y, (x,), backward)


def relu(x):
    positive = x.data > 0
    y = np.where(positive, x.data, np.zeros((), dtype=x.dtype))

    def backward(g):
        return (np.where(positive, g, np.zeros((), dtype=g.dtype)),)

    return make_result(y, (x,), backward)


ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}


def activation(x, kind):
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    return fn(x)


def sum(x, axis=None, keepdims=False):  # noqa: A001
    y = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return make_result(np.asarray(y), (x,), backward)


def reshape(x, shape):
    def backward(g):
        return (g.reshape(x.shape),)

    return make_result(x.data.reshape(shape), (x,), backward)


def getitem(x, index):
    """Basic indexing (ints and slices)."""
    y = x.data[index]

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return make_result(np.array(y), (x,), backward)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t, like=tensors[0]) for t in tensors]
    y = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return make_result(y, tuple(tensors), backward)


def stack(tensors, axis=0):
    y = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.moveaxis(g, axis, 0))

    return make_result(y, tuple(tensors), backward)


def gather(x, index):
    """Rows of `x` (axis 0) at integer `index`, any index shape."""
    index = np.asarray(index, dtype=np.int64)
    y = x.data[index]

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return make_result(y, (x,), backward)


def embedding_lookup(table, ids):
    """Row gather from an embedding table; backward scatters into gathered rows."""
    ids = np.asarray(ids, dtype=np.int64)
    vocab = table.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        bad = ids[(ids < 0) | (ids >= vocab)][0]
        raise IndexError(f"embedding id {bad} out of range for table with {vocab} rows")
    y = table.data[ids]

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        if isinstance(table, Parameter):
            table.mark_touched(ids)
        return (full,)

    return make_result(y, (table,), backward)


def dropout(x, rate, training, rng):
    """Inverted dropout; the exact identity when not training or rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    scale = np.asarray(1.0 / (1.0 - rate), dtype=x.dtype)
    mask = keep.astype(x.dtype) * scale

    def backward(g):
        return (g * mask,)

    return make_result(x.data * mask, (x,), backward)


def stop_gradient(x):
    """Same values, no path back to `x`."""
    return Tensor(x.data, dtype=x.dtype)


def masked_softmax(x, mask=None, axis=-1):
    """Softmax along `axis`; masked-out entries get exactly zero weight."""
    d = x.data
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        d = np.where(mask, d, -np.inf)
    shift = np.max(d, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    e = np.exp(d - shift)
    total = e.sum(axis=axis, keepdims=True)
    y = (e / np.where(total > 0, total, 1.0)).astype(x.dtype, copy=False)

    def backward(g):
        return (y * (g - np.sum(g * y, axis=axis, keepdims=True)),)

    return make_result(y, (x,), backward)


def log_softmax_array(logits, axis=-1):
    shift = logits.max(axis=axis, keepdims=True)
    z = logits - shift
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def softmax_ce_smoothed(logits, gold, eps=0.0, weights=None):
    """Label-smoothed softmax cross entropy, summed over items.

    The target is (1 - eps) * onehot(gold) + eps / K over all K classes.
    `logits` is (..., K) and `gold` has the leading shape; `weights` (same
    shape as gold) scales each item's loss, so zero-weight items are padding.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"label smoothing must be in [0, 1), got {eps}")
    gold = np.asarray(gold, dtype=np.int64)
    K = logits.shape[-1]
    if gold.shape != logits.shape[:-1]:
        raise ValueError(f"gold shape {gold.shape} does not match logits {logits.shape}")
    if weights is None:
        weights = np.ones(gold.shape, dtype=logits.dtype)
    weights = np.asarray(weights, dtype=logits.dtype)
    active = weights != 0
    if np.any((gold[active] < 0) | (gold[active] >= K)):
        raise IndexError(f"gold class out of range for {K} classes")
    safe_gold = np.where(active, gold, 0)

    target = np.full(logits.shape, eps / K, dtype=logits.dtype)
    np.put_along_axis(target, safe_gold[..., None], (1.0 - eps) + eps / K, axis=-1)
    logp = log_softmax_array(logits.data)
    per_item = -(target * logp).sum(axis=-1)
    loss = np.asarray((per_item * weights).sum(), dtype=logits.dtype)

    def backward(g):
        p = np.exp(logp)
        return (g * (p - target) * weights[..., None],)

    return make_result(loss, (logits,), backward)
