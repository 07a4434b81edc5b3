"""GRU and LSTM cells and a masked unidirectional runner.

Gate conventions (row-vector activations):

GRU   z = sigmoid(x Wz' + h Uz' + bz), r = sigmoid(x Wr' + h Ur' + br)
      n = tanh(x Wn' + (r * h) Un' + bn),  h' = z * h + (1 - z) * n
LSTM  [i, f, g, o] = x W' + h U' + b;  i, f, o through sigmoid, g through tanh
      c' = f * c + i * g,  h' = o * tanh(c')
"""
from __future__ import annotations

import numpy as np

from . import ops
from .init import glorot_uniform
from .tensor import Parameter, Tensor


class GRUCell:
    def __init__(self, input_dim, hidden_dim, rng, dtype=np.float32, name="gru"):
        H = hidden_dim
        self.input_dim, self.hidden_dim = input_dim, hidden_dim
        self.W = Parameter(glorot_uniform(rng, (3 * H, input_dim), dtype), name=f"{name}.W")
        self.U_zr = Parameter(glorot_uniform(rng, (2 * H, H), dtype), name=f"{name}.U_zr")
        self.U_n = Parameter(glorot_uniform(rng, (H, H), dtype), name=f"{name}.U_n")
        self.b = Parameter(np.zeros(3 * H, dtype), name=f"{name}.b")

    def parameters(self):
        return [self.W, self.U_zr, self.U_n, self.b]

    def initial_state(self, batch, dtype):
        return Tensor(np.zeros((batch, self.hidden_dim), dtype))

    def project(self, x):
        """Input projection x W' + b, computable for all timesteps at once."""
        return ops.affine(x, self.W, self.b)

    def step(self, x, h):
        if x.shape[-1] != self.input_dim or h.shape[-1] != self.hidden_dim:
            raise ValueError(f"GRU dims: got x {x.shape}, h {h.shape}; "
                             f"expected input {self.input_dim}, hidden {self.hidden_dim}")
        return self.step_projected(self.project(x), h)

    def step_projected(self, xp, h):
        H = self.hidden_dim
        zr = ops.sigmoid(xp[..., : 2 * H] + ops.affine(h, self.U_zr))
        z = zr[..., :H]
        r = zr[..., H:]
        n = ops.tanh(xp[..., 2 * H:] + ops.affine(r * h, self.U_n))
        return n + z * (h - n)


class LSTMCell:
    def __init__(self, input_dim, hidden_dim, rng, dtype=np.float32, name="lstm"):
        H = hidden_dim
        self.input_dim, self.hidden_dim = input_dim, hidden_dim
        self.W = Parameter(glorot_uniform(rng, (4 * H, input_dim), dtype), name=f"{name}.W")
        self.U = Parameter(glorot_uniform(rng, (4 * H, H), dtype), name=f"{name}.U")
        self.b = Parameter(np.zeros(4 * H, dtype), name=f"{name}.b")

    def parameters(self):
        return [self.W, self.U, self.b]

    def initial_state(self, batch, dtype):
        zeros = np.zeros((batch, self.hidden_dim), dtype)
        return Tensor(zeros), Tensor(zeros.copy())

    def project(self, x):
        return ops.affine(x, self.W, self.b)

    def step(self, x, state):
        h, c = state
        if x.shape[-1] != self.input_dim or h.shape[-1] != self.hidden_dim \
                or c.shape[-1] != self.hidden_dim:
            raise ValueError(f"LSTM dims: got x {x.shape}, h {h.shape}, c {c.shape}; "
                             f"expected input {self.input_dim}, hidden {self.hidden_dim}")
        return self.step_projected(self.project(x), state)

    def step_projected(self, xp, state):
        h, c = state
        H = self.hidden_dim
        gates = xp + ops.affine(h, self.U)
        ifo = ops.sigmoid(ops.concat([gates[..., : 2 * H], gates[..., 3 * H:]], axis=-1))
        i = ifo[..., :H]
        f = ifo[..., H: 2 * H]
        o = ifo[..., 2 * H:]
        g = ops.tanh(gates[..., 2 * H: 3 * H])
        c_new = f * c + i * g
        h_new = o * ops.tanh(c_new)
        return h_new, c_new


def recurrent_cell_step(kind, cell, x, state):
    """Single step of either cell kind; GRU state is h, LSTM state is (h, c)."""
    expected = {"gru": GRUCell, "lstm": LSTMCell}.get(kind)
    if expected is None:
        raise ValueError(f"unknown cell kind {kind!r}")
    if not isinstance(cell, expected):
        raise TypeError(f"{kind} step given a {type(cell).__name__}")
    return cell.step(x, state)


def run_masked(cell, inputs, mask, reverse=False):
    """Run `cell` along axis 1 of `inputs` (N, T, D) honoring `mask` (N, T).

    Masked steps carry the previous state unchanged. Since padding sits at
    the end of each row, a reversed pass keeps the zero initial state
    through the padding and starts at each row's last real element.
    Returns the per-step outputs (list of (N, H)) and the final state.
    """
    N, T = mask.shape
    xp = cell.project(inputs)
    is_lstm = isinstance(cell, LSTMCell)
    state = cell.initial_state(N, inputs.dtype)
    outputs = [None] * T
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        m = mask[:, t:t + 1]
        new = cell.step_projected(xp[:, t], state)
        if is_lstm:
            state = (ops.where(m, new[0], state[0]), ops.where(m, new[1], state[1]))
            outputs[t] = state[0]
        else:
            state = ops.where(m, new, state)
            outputs[t] = state
    return outputs, state
