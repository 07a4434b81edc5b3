"""Global-norm gradient clipping and the lazy Adam optimizer."""
from __future__ import annotations

import numpy as np


def global_norm(grads):
    total = 0.0
    for g in grads:
        if g is not None:
            total += float(np.sum(np.square(g, dtype=np.float64)))
    return float(np.sqrt(total))


def clip_global_norm(grads, cap=3.0):
    """Scale every gradient by cap / norm when the joint norm exceeds cap.

    Returns (clipped, pre_clip_norm). Gradients are returned untouched (same
    objects) when no scaling is needed.
    """
    if cap <= 0:
        raise ValueError(f"clip cap must be positive, got {cap}")
    norm = global_norm(grads)
    if norm <= cap:
        return list(grads), norm
    scale = cap / norm
    return [None if g is None else (g * scale).astype(g.dtype, copy=False) for g in grads], norm


class LazyAdam:
    """Adam that updates only the touched rows of sparse (embedding) parameters.

    Dense parameters follow ordinary Adam. For sparse ones, rows that were not
    gathered in the current batch keep their values and both moments. A single
    global step counter drives bias correction for every slot.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.99, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, grads=None, lr=None):
        """Apply one update. `grads` defaults to each parameter's `.grad`."""
        if grads is None:
            grads = [p.grad for p in self.params]
        if len(grads) != len(self.params):
            raise ValueError("grads are not aligned with params")
        lr = self.lr if lr is None else lr
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g is None:
                continue
            if p.sparse:
                rows = p.touched_rows()
                if rows.size == 0:
                    continue
                gr = g[rows]
                m[rows] = b1 * m[rows] + (1 - b1) * gr
                v[rows] = b2 * v[rows] + (1 - b2) * gr * gr
                update = lr * (m[rows] / bc1) / (np.sqrt(v[rows] / bc2) + self.eps)
                p.data[rows] -= update.astype(p.dtype, copy=False)
            else:
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * g * g
                update = lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
                p.data -= update.astype(p.dtype, copy=False)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_arrays(self):
        """Named arrays for checkpointing."""
        out = {}
        for p, m, v in zip(self.params, self.m, self.v):
            out[f"adam.m/{p.name}"] = m
            out[f"adam.v/{p.name}"] = v
        return out

    def load_state_arrays(self, arrays, t):
        self.t = int(t)
        for i, p in enumerate(self.params):
            self.m[i] = np.array(arrays[f"adam.m/{p.name}"], dtype=p.dtype)
            self.v[i] = np.array(arrays[f"adam.v/{p.name}"], dtype=p.dtype)
