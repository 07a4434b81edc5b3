import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lemmatag import autograd as ag
from lemmatag.autograd import ops

from helpers import op_gradcheck

TOL = 1e-4


def rnd(*shape, seed=0):
    return np.random.default_rng(seed).normal(size=shape)


# embedding_lookup

def test_embedding_gathers_rows():
    table = ag.Parameter(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert ag.embedding_lookup(table, [1]).data.tolist() == [[3.0, 4.0]]


def test_embedding_backward_scatters_into_gathered_rows():
    table = ag.Parameter(np.array([[1.0, 2.0], [3.0, 4.0]]))
    out = ag.embedding_lookup(table, [0])
    ag.backward(ag.reduce_sum(out))
    assert table.grad.tolist() == [[1.0, 1.0], [0.0, 0.0]]
    assert table.touched_rows().tolist() == [0]


def test_embedding_out_of_range():
    table = ag.Parameter(np.zeros((2, 2)))
    with pytest.raises(IndexError):
        ag.embedding_lookup(table, [2])


def test_embedding_gradcheck():
    table = rnd(5, 3)
    ids = np.array([[0, 4, 4], [2, 0, 1]])
    assert op_gradcheck(lambda t: ag.embedding_lookup(t, ids), table) < TOL


# affine

def test_affine_identity():
    x = rnd(3, 4)
    y = ag.affine(ag.Tensor(x), ag.Tensor(np.eye(4)), ag.Tensor(np.zeros(4)))
    np.testing.assert_array_equal(y.data, x)


def test_affine_bias_broadcasts_over_rows():
    b = np.array([1.0, -2.0])
    y = ag.affine(ag.Tensor(np.zeros((3, 4))), ag.Tensor(np.zeros((2, 4))), ag.Tensor(b))
    np.testing.assert_array_equal(y.data, np.tile(b, (3, 1)))


def test_affine_gradcheck():
    assert op_gradcheck(ag.affine, rnd(3, 4), rnd(5, 4, seed=1), rnd(5, seed=2)) < TOL


def test_affine_shape_error_names_both_shapes():
    with pytest.raises(ValueError, match=r"\(3, 4\).*\(5, 3\)"):
        ag.affine(ag.Tensor(np.zeros((3, 4))), ag.Tensor(np.zeros((5, 3))))


# activations

def test_activation_fixed_points():
    assert ag.activation(ag.Tensor(0.0), "sigmoid").item() == 0.5
    assert ag.activation(ag.Tensor(0.0), "tanh").item() == 0.0
    assert ag.activation(ag.Tensor(-1.0), "relu").item() == 0.0


def test_relu_subgradient_at_zero_is_zero():
    x = ag.Tensor(np.array([0.0, 1.0]), requires_grad=True)
    ag.backward(ag.reduce_sum(ag.relu(x)))
    assert x.grad.tolist() == [0.0, 1.0]


@pytest.mark.parametrize("kind", ["sigmoid", "tanh", "relu"])
def test_activation_gradcheck(kind):
    x = rnd(4, 5)
    x[np.abs(x) < 0.05] = 0.5  # keep away from the relu kink
    assert op_gradcheck(lambda t: ag.activation(t, kind), x) < TOL


def test_sigmoid_extreme_inputs_are_finite():
    y = ag.sigmoid(ag.Tensor(np.array([-1000.0, 1000.0])))
    assert y.data.tolist() == [0.0, 1.0]


# softmax cross entropy

def test_ce_uniform_logits():
    loss = ag.softmax_ce_smoothed(ag.Tensor([0.0, 0.0]), 0, 0.0)
    assert abs(loss.item() - math.log(2)) < 1e-9


def test_ce_uniform_logits_with_smoothing():
    loss = ag.softmax_ce_smoothed(ag.Tensor([0.0, 0.0]), 0, 0.1)
    assert abs(loss.item() - math.log(2)) < 1e-9


def test_ce_smoothed_closed_form():
    # q = (0.95, 0.05); -log p = (log(1 + e^-2), 2 + log(1 + e^-2))
    expected = 0.95 * math.log1p(math.exp(-2)) + 0.05 * (2 + math.log1p(math.exp(-2)))
    loss = ag.softmax_ce_smoothed(ag.Tensor([2.0, 0.0]), 0, 0.1)
    assert abs(loss.item() - expected) < 1e-9


def test_ce_gold_out_of_range():
    with pytest.raises(IndexError):
        ag.softmax_ce_smoothed(ag.Tensor([0.0, 0.0]), 2, 0.0)


@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_ce_gradcheck(eps):
    gold = np.array([2, 0, 1])
    w = np.array([1.0, 0.5, 0.0])
    fn = lambda t: ag.softmax_ce_smoothed(t, gold, eps, w)  # noqa: E731
    assert op_gradcheck(fn, rnd(3, 4)) < TOL


def test_ce_zero_weight_rows_contribute_nothing():
    logits = rnd(2, 3)
    full = ag.softmax_ce_smoothed(ag.Tensor(logits), [1, 2], 0.1, [1.0, 0.0]).item()
    single = ag.softmax_ce_smoothed(ag.Tensor(logits[0]), 1, 0.1).item()
    assert full == pytest.approx(single, abs=1e-12)


# dropout

def test_dropout_rate_zero_and_inference_are_identity():
    x = ag.Tensor(rnd(4, 4))
    rng = np.random.default_rng(0)
    assert ag.dropout(x, 0.0, True, rng) is x
    assert ag.dropout(x, 0.5, False, rng) is x


def test_dropout_statistics():
    x = np.abs(rnd(100_000)) + 0.5
    y = ag.dropout(ag.Tensor(x), 0.5, True, np.random.default_rng(1)).data
    zeroed = np.mean(y == 0)
    assert abs(zeroed - 0.5) < 0.01
    assert abs(y.mean() - x.mean()) / x.mean() < 0.02


def test_dropout_gradient_uses_same_mask():
    x = ag.Tensor(np.ones(50), requires_grad=True)
    y = ag.dropout(x, 0.3, True, np.random.default_rng(0))
    ag.backward(ag.reduce_sum(y))
    np.testing.assert_array_equal(x.grad, y.data)


# structural ops

@pytest.mark.parametrize("name,fn,shapes", [
    ("matmul", lambda a, b: ag.matmul(a, b), [(2, 3, 4), (2, 4, 5)]),
    ("mul_broadcast", lambda a, b: a * b, [(3, 4), (1, 4)]),
    ("sub", lambda a, b: a - b, [(3, 4), (4,)]),
    ("concat", lambda a, b: ag.concat([a, b], axis=-1), [(2, 3), (2, 2)]),
    ("stack", lambda a, b: ag.stack([a, b], axis=1), [(2, 3), (2, 3)]),
    ("where", lambda a, b: ag.where(np.array([[True], [False]]), a, b), [(2, 3), (2, 3)]),
])
def test_binary_structural_gradcheck(name, fn, shapes):
    arrays = [rnd(*s, seed=i) for i, s in enumerate(shapes)]
    assert op_gradcheck(fn, *arrays) < TOL


@pytest.mark.parametrize("fn", [
    lambda t: ag.reduce_sum(t, axis=1),
    lambda t: ag.reshape(t, (4, 3)),
    lambda t: t[:, 1:3],
    lambda t: t[..., 2],
    lambda t: ag.gather(t, np.array([0, 2, 2, 1])),
    lambda t: ag.masked_softmax(t, np.array([[1, 1, 0, 1]] * 3, bool)),
])
def test_unary_structural_gradcheck(fn):
    assert op_gradcheck(fn, rnd(3, 4)) < TOL


def test_masked_softmax_zero_on_mask_and_normalized():
    mask = np.array([[True, True, False], [True, False, False]])
    y = ag.masked_softmax(ag.Tensor(rnd(2, 3)), mask).data
    assert y[0, 2] == 0 and y[1, 1] == 0 and y[1, 2] == 0
    np.testing.assert_allclose(y.sum(axis=1), 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 6)),
              elements=st.floats(-50, 50)))
def test_softmax_is_a_distribution(x):
    y = ag.masked_softmax(ag.Tensor(x)).data
    assert (y >= 0).all()
    np.testing.assert_allclose(y.sum(axis=-1), 1.0, atol=1e-6)


def test_stop_gradient_blocks_flow():
    x = ag.Tensor(rnd(3), requires_grad=True)
    y = ag.reduce_sum(ag.stop_gradient(x) * x)
    ag.backward(y)
    np.testing.assert_array_equal(x.grad, x.data)


# backward

def test_backward_sum_gives_ones():
    x = ag.Tensor(rnd(2, 3), requires_grad=True)
    ag.backward(ag.reduce_sum(x))
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_fan_out_accumulates():
    x = ag.Tensor(rnd(3), requires_grad=True)
    ag.backward(ag.reduce_sum(x + x))
    np.testing.assert_array_equal(x.grad, 2 * np.ones(3))


def test_backward_requires_scalar():
    x = ag.Tensor(rnd(3), requires_grad=True)
    with pytest.raises(ValueError, match="scalar"):
        ag.backward(x * 2.0)


def test_backward_visits_shared_subgraph_once():
    x = ag.Tensor(np.array([2.0]), requires_grad=True)
    y = x * x
    z = ag.reduce_sum(y * y + y)  # d/dx (x^4 + x^2) = 4x^3 + 2x
    ag.backward(z)
    assert x.grad.tolist() == [4 * 8 + 2 * 2]


def test_deep_chain_does_not_recurse():
    x = ag.Tensor(np.array([1.0]), requires_grad=True)
    y = x
    for _ in range(5000):
        y = y * 1.0
    ag.backward(ag.reduce_sum(y))
    assert x.grad.tolist() == [1.0]


def test_no_grad_records_nothing():
    x = ag.Tensor(rnd(3), requires_grad=True)
    with ag.no_grad():
        y = x * 2.0
    assert not y.requires_grad and y._parents == ()


# recurrent cells

def _zero_cell(cell):
    for p in cell.parameters():
        p.data[...] = 0.0
    return cell


def test_gru_zero_weights_halves_state():
    cell = _zero_cell(ag.GRUCell(3, 4, np.random.default_rng(0), np.float64))
    h = rnd(2, 4)
    out = ag.recurrent_cell_step("gru", cell, ag.Tensor(rnd(2, 3)), ag.Tensor(h))
    np.testing.assert_allclose(out.data, 0.5 * h, atol=1e-15)


def test_lstm_zero_weights():
    cell = _zero_cell(ag.LSTMCell(3, 4, np.random.default_rng(0), np.float64))
    h, c = rnd(2, 4), rnd(2, 4, seed=1)
    h2, c2 = ag.recurrent_cell_step("lstm", cell, ag.Tensor(rnd(2, 3)),
                                    (ag.Tensor(h), ag.Tensor(c)))
    np.testing.assert_allclose(c2.data, 0.5 * c, atol=1e-15)
    np.testing.assert_allclose(h2.data, 0.5 * np.tanh(0.5 * c), atol=1e-15)


def test_cell_dimension_mismatch():
    cell = ag.GRUCell(3, 4, np.random.default_rng(0), np.float64)
    with pytest.raises(ValueError):
        cell.step(ag.Tensor(rnd(2, 3)), ag.Tensor(rnd(2, 5)))


CELL_PARAMS = {"gru": (ag.GRUCell, ["W", "U_zr", "U_n", "b"]),
               "lstm": (ag.LSTMCell, ["W", "U", "b"])}


@pytest.mark.parametrize("kind", ["gru", "lstm"])
def test_cell_gradcheck(kind):
    cls, names = CELL_PARAMS[kind]
    rng = np.random.default_rng(3)
    proto = cls(5, 5, rng, np.float64)
    params = [rng.normal(scale=0.5, size=getattr(proto, n).shape) for n in names]
    x, h, c = rnd(2, 5, seed=7), rnd(2, 5, seed=8), rnd(2, 5, seed=9)

    def fn(x, h, c, *ps):
        cell = cls(5, 5, np.random.default_rng(0), np.float64)
        for name, t in zip(names, ps):
            setattr(cell, name, t)
        if kind == "gru":
            return cell.step(x, h)
        return ag.concat(list(cell.step(x, (h, c))), axis=-1)

    assert op_gradcheck(fn, x, h, c, *params) < TOL


def test_run_masked_holds_state_through_padding():
    cell = ag.GRUCell(3, 4, np.random.default_rng(0), np.float64)
    x = rnd(2, 3, 3)
    mask = np.array([[True, True, False], [True, True, True]])
    _, last = ag.run_masked(cell, ag.Tensor(x), mask)
    _, last_short = ag.run_masked(cell, ag.Tensor(x[:1, :2]), mask[:1, :2])
    np.testing.assert_array_equal(last.data[0], last_short.data[0])
    outs, first = ag.run_masked(cell, ag.Tensor(x), mask, reverse=True)
    _, first_short = ag.run_masked(cell, ag.Tensor(x[:1, :2]), mask[:1, :2], reverse=True)
    np.testing.assert_allclose(first.data[0], first_short.data[0], rtol=0, atol=1e-15)


def test_ops_module_exports_operator_sugar():
    a = ag.Tensor(np.array([1.0, 2.0]))
    assert (1.0 - a).data.tolist() == [0.0, -1.0]
    assert (-a).data.tolist() == [-1.0, -2.0]
    assert ops.add(a, 1.0).data.tolist() == [2.0, 3.0]
