import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lemmatag import autograd as ag


def test_clip_scales_to_cap():
    clipped, norm = ag.clip_global_norm([np.array([4.8, 3.6])], 3.0)
    assert norm == 6.0
    np.testing.assert_allclose(clipped[0], [2.4, 1.8], rtol=0, atol=1e-15)


def test_clip_below_cap_is_bit_identical():
    g = np.array([1.2, 1.6])  # norm 2
    clipped, norm = ag.clip_global_norm([g], 3.0)
    assert clipped[0] is g
    assert norm == 2.0


def test_clip_all_zero():
    g = np.zeros(4)
    clipped, _ = ag.clip_global_norm([g, None], 3.0)
    assert clipped[0] is g and clipped[1] is None


@settings(max_examples=100, deadline=None)
@given(st.lists(arrays(np.float64, st.integers(1, 5), elements=st.floats(-1e3, 1e3)),
                min_size=1, max_size=4),
       st.floats(0.1, 10.0))
def test_clip_norm_bound_and_direction(grads, cap):
    clipped, norm = ag.clip_global_norm(grads, cap)
    assert ag.global_norm(clipped) <= cap + 1e-6
    if norm > cap:
        a = np.concatenate(grads)
        b = np.concatenate(clipped)
        cosine = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
        assert abs(cosine - 1.0) < 1e-6


def dense_adam(params, grads_per_step, lr, b1=0.9, b2=0.99, eps=1e-8):
    """Textbook Adam, written independently of LazyAdam."""
    params = [p.copy() for p in params]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    for t, grads in enumerate(grads_per_step, start=1):
        for i, g in enumerate(grads):
            m[i] = b1 * m[i] + (1 - b1) * g
            v[i] = b2 * v[i] + (1 - b2) * g ** 2
            m_hat = m[i] / (1 - b1 ** t)
            v_hat = v[i] / (1 - b2 ** t)
            params[i] = params[i] - lr * m_hat / (np.sqrt(v_hat) + eps)
    return params


def test_lazy_adam_skips_untouched_rows():
    table = ag.Parameter(np.random.default_rng(0).normal(size=(4, 3)), sparse=True)
    opt = ag.LazyAdam([table], lr=0.1)
    before = table.data.copy()
    ag.backward(ag.reduce_sum(ag.embedding_lookup(table, [1, 3, 1])))
    opt.step()
    np.testing.assert_array_equal(table.data[[0, 2]], before[[0, 2]])
    assert not np.array_equal(table.data[[1, 3]], before[[1, 3]])
    assert not opt.m[0][[0, 2]].any() and not opt.v[0][[0, 2]].any()


def test_lazy_adam_first_step_is_signed_lr():
    p = ag.Parameter(np.array([1.0, 1.0]))
    opt = ag.LazyAdam([p], lr=0.01)
    opt.step([np.array([0.3, -2.0])])
    np.testing.assert_allclose(p.data, [1.0 - 0.01, 1.0 + 0.01], rtol=0, atol=1e-8)


def test_lazy_adam_zero_lr_updates_moments_only():
    table = ag.Parameter(np.ones((3, 2)), sparse=True)
    opt = ag.LazyAdam([table], lr=0.0)
    ag.backward(ag.reduce_sum(ag.embedding_lookup(table, [2])))
    opt.step(lr=0.0)
    np.testing.assert_array_equal(table.data, np.ones((3, 2)))
    np.testing.assert_allclose(opt.m[0][2], [0.1, 0.1], rtol=1e-12)
    assert not opt.m[0][:2].any()


def test_lazy_matches_dense_when_every_row_is_touched():
    rng = np.random.default_rng(5)
    table0, dense0 = rng.normal(size=(4, 3)), rng.normal(size=(3,))
    table = ag.Parameter(table0.copy(), sparse=True)
    dense = ag.Parameter(dense0.copy())
    opt = ag.LazyAdam([table, dense], lr=0.01)
    history = []
    for _ in range(10):
        opt.zero_grad()
        weights = rng.normal(size=(6, 3))
        out = ag.embedding_lookup(table, [0, 1, 2, 3, 0, 2]) * dense
        ag.backward(ag.reduce_sum(out * weights))
        history.append([table.grad.copy(), dense.grad.copy()])
        opt.step()
    ref_table, ref_dense = dense_adam([table0, dense0], history, lr=0.01)
    np.testing.assert_allclose(table.data, ref_table, rtol=0, atol=1e-6)
    np.testing.assert_allclose(dense.data, ref_dense, rtol=0, atol=1e-6)
