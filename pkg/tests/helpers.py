"""Finite-difference oracle and small builders shared by the tests."""
import numpy as np

from lemmatag import autograd as ag
from lemmatag.corpus import build_vocabularies, encode_batch
from lemmatag.model import LemmaTag
from lemmatag.synthetic import synthetic_corpus
from lemmatag.trainer import TrainConfig

H = 1e-5
FLOOR = 1e-6  # relative-error denominator floor for near-zero gradients


def rel_err(analytic, numeric):
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), FLOOR)
    return np.abs(analytic - numeric) / denom


def central_difference(f, arr, index, h=H):
    """d f / d arr[index] by central differences; `f` reads `arr` in place."""
    old = arr[index]
    arr[index] = old + h
    up = f()
    arr[index] = old - h
    down = f()
    arr[index] = old
    return (up - down) / (2 * h)


def op_gradcheck(fn, *arrays, seed=0):
    """Max relative error of analytic vs numeric gradients of sum(fn(...) * R)."""
    rng = np.random.default_rng(seed)
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    out = fn(*[ag.Tensor(a) for a in arrays])
    weights = rng.normal(size=out.shape)

    def scalar():
        return float(np.sum(fn(*[ag.Tensor(a) for a in arrays]).data * weights))

    tensors = [ag.Tensor(a, requires_grad=True) for a in arrays]
    loss = ag.reduce_sum(ag.mul(fn(*tensors), weights))
    loss.backward()
    worst = 0.0
    for t, arr in zip(tensors, arrays):
        analytic = np.zeros_like(arr) if t.grad is None else t.grad
        for index in np.ndindex(arr.shape):
            numeric = central_difference(scalar, arr, index)
            worst = max(worst, float(rel_err(analytic[index], numeric)))
    return worst


def tiny_config(**overrides):
    return TrainConfig.profile("tiny", **overrides)


def toy_setup(n_sentences=50, seed=0, tau=15, min_word_freq=1):
    sentences = synthetic_corpus(n_sentences, seed)
    vocabs = build_vocabularies(sentences, min_word_freq=min_word_freq, tau=tau)
    return sentences, vocabs


def tiny_model(vocabs, seed=0, dtype=np.float64, **kwargs):
    kwargs.setdefault("rnn_dim", 64)
    kwargs.setdefault("char_dim", 32)
    kwargs.setdefault("tagfeat_dim", 32)
    return LemmaTag(vocabs, rng=np.random.default_rng(seed), dtype=dtype, **kwargs)


def model_gradcheck(model, batch, config, seed=0, per_param=6, training=True):
    """Per-parameter max relative error between backward and finite differences.

    Dropout and word dropout draw from a freshly seeded stream on every
    evaluation, so the loss is a smooth function of the parameters.
    """
    params = model.parameters()
    for p in params:
        p.zero_grad()
    out = model.losses(batch, config, training=training, rng=np.random.default_rng(seed))
    out["total"].backward()

    # The tag features sit behind a gradient stop, so the derivative backward
    # computes treats them as constants. Perturbations must do the same.
    projection = model.tag_projection
    if projection is not None:
        with ag.no_grad():
            _, tag_out, _ = model._forward(batch, training, np.random.default_rng(seed),
                                           config.word_dropout if training else 0.0)
        frozen = ag.Tensor(tag_out.features.data.copy())
        model.tag_projection = lambda features: projection(frozen)

    try:
        def loss_value():
            with ag.no_grad():
                out = model.losses(batch, config, training=training, rng=np.random.default_rng(seed))
            return float(out["total"].item())

        pick = np.random.default_rng(seed + 1)
        errors = {}
        for p in params:
            grad = np.zeros_like(p.data) if p.grad is None else p.grad
            flat = np.abs(grad).ravel()
            chosen = set(np.argsort(flat)[-per_param // 2:].tolist())
            chosen |= set(pick.choice(flat.size, size=min(per_param - len(chosen), flat.size),
                                      replace=False).tolist())
            worst = 0.0
            for flat_index in sorted(chosen):
                index = np.unravel_index(flat_index, p.shape)
                numeric = central_difference(loss_value, p.data, index)
                worst = max(worst, float(rel_err(grad[index], numeric)))
            errors[p.name] = worst
    finally:
        model.tag_projection = projection
    return errors


def toy_batch(vocabs, sentences, n=2):
    return encode_batch(sentences[:n], vocabs)
