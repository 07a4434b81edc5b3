"""A small reverse-mode autodiff engine over numpy arrays."""
from .ops import (
    activation,
    add,
    affine,
    concat,
    dropout,
    embedding_lookup,
    gather,
    getitem,
    masked_softmax,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    softmax_ce_smoothed,
    stack,
    stop_gradient,
    sub,
    tanh,
    where,
)
from .ops import sum as reduce_sum
from .optim import LazyAdam, clip_global_norm, global_norm
from .rnn import GRUCell, LSTMCell, recurrent_cell_step, run_masked
from .tensor import Parameter, Tensor, backward, grad_enabled, no_grad

__all__ = [
    "GRUCell", "LSTMCell", "LazyAdam", "Parameter", "Tensor", "activation", "add",
    "affine", "backward", "clip_global_norm", "concat", "dropout", "embedding_lookup",
    "gather", "getitem", "global_norm", "grad_enabled", "masked_softmax", "matmul",
    "mul", "no_grad", "recurrent_cell_step", "reduce_sum", "relu", "reshape",
    "run_masked", "sigmoid", "softmax_ce_smoothed", "stack", "stop_gradient", "sub",
    "tanh", "where",
]
