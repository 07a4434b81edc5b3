import math

import numpy as np
import pytest

from lemmatag import autograd as ag
from lemmatag.corpus import encode_batch
from lemmatag.tagger import TagFeatureProjection, Tagger, predict_tag

from helpers import tiny_config, tiny_model, toy_setup


def context(n=5, dim=64, seed=0):
    return ag.Tensor(np.random.default_rng(seed).normal(size=(n, dim)))


def test_heads_count_and_feature_width(toy):
    _, vocabs = toy
    tagger = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64)
    out = tagger.heads(context())
    assert 1 + len(out.components) == 16
    assert out.feature_dim == vocabs.tags.feature_dim
    assert out.feature_dim == len(vocabs.tags.whole) + sum(len(v) for v in vocabs.tags.components)


def test_unfactored_features_are_whole_logits():
    _, vocabs = toy_setup(tau=0)
    out = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64).heads(context())
    assert out.components == []
    np.testing.assert_array_equal(out.features.data, out.whole.data)


def test_predict_tag_argmax_and_ties():
    assert predict_tag(np.array([[1.0, 3.0, 2.0]]))[0] == 1
    assert predict_tag(np.array([[2.0, 2.0]]))[0] == 0


def test_predict_tag_shift_invariant():
    logits = np.random.default_rng(3).normal(size=(7, 9))
    np.testing.assert_array_equal(predict_tag(logits), predict_tag(logits + 12.5))


def test_component_logits_do_not_change_predicted_tag(toy):
    _, vocabs = toy
    tagger = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64)
    ctx = context()
    before = predict_tag(tagger.heads(ctx).whole)
    for W, b in tagger.components:
        W.data += 5.0
        b.data -= 3.0
    np.testing.assert_array_equal(predict_tag(tagger.heads(ctx).whole), before)


def test_projection_zero_weights_give_relu_bias():
    proj = TagFeatureProjection(40, 256, np.random.default_rng(0), np.float64)
    proj.W.data[:] = 0.0
    proj.b.data[:] = np.linspace(-1, 1, 256)
    out = proj(ag.Tensor(np.random.default_rng(1).normal(size=(3, 40))))
    assert out.shape == (3, 256)
    np.testing.assert_array_equal(out.data, np.tile(np.maximum(proj.b.data, 0), (3, 1)))


def test_lemma_loss_never_reaches_tagger_heads(toy, model64):
    sents, _ = toy
    batch = encode_batch(sents[:4], model64.vocabs)
    out = model64.losses(batch, tiny_config(), training=True, rng=np.random.default_rng(0))
    out["lemma"].backward()
    for p in model64.tagger.parameters():
        assert p.grad is None or not p.grad.any(), p.name
    # the projection itself does learn from the lemmatizer
    assert np.abs(model64.tag_projection.W.grad).sum() > 0


def test_zero_logits_give_log_k_per_head(toy):
    _, vocabs = toy
    tagger = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64)
    for p in tagger.parameters():
        p.data[:] = 0.0
    batch = encode_batch(toy[0][:3], vocabs)
    out = tagger.heads(context(batch.num_words))
    loss = tagger.loss(out, batch.tag_ids, batch.comp_ids, 1.0, 0.1, smoothing=0.1)
    expected = math.log(len(vocabs.tags.whole)) + 0.1 * sum(
        math.log(len(v)) for v in vocabs.tags.components)
    assert abs(loss.item() - expected) < 1e-9


@pytest.mark.parametrize("alpha_tag,alpha_comp", [(1.0, 0.0), (0.0, 1.0), (1.0, 0.1)])
def test_loss_is_alpha_weighted_sum(toy, alpha_tag, alpha_comp):
    sents, vocabs = toy
    tagger = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64)
    batch = encode_batch(sents[:3], vocabs)
    out = tagger.heads(context(batch.num_words))
    whole = tagger.loss(out, batch.tag_ids, batch.comp_ids, 1.0, 0.0).item()
    comps = tagger.loss(out, batch.tag_ids, batch.comp_ids, 0.0, 1.0).item()
    got = tagger.loss(out, batch.tag_ids, batch.comp_ids, alpha_tag, alpha_comp).item()
    assert abs(got - (alpha_tag * whole + alpha_comp * comps)) < 1e-12


def test_unknown_gold_tag_is_excluded(toy):
    sents, vocabs = toy
    tagger = Tagger(vocabs.tags, 64, np.random.default_rng(0), np.float64)
    batch = encode_batch(sents[:2], vocabs)
    out = tagger.heads(context(batch.num_words))
    tags = batch.tag_ids.copy()
    tags[0] = -1
    comps = batch.comp_ids.copy()
    comps[0] = -1
    full = tagger.loss(out, tags, comps).item()
    out_rest = tagger.heads(ag.Tensor(context(batch.num_words).data[1:]))
    rest = tagger.loss(out_rest, batch.tag_ids[1:], batch.comp_ids[1:]).item()
    assert abs(full - rest) < 1e-12


def test_component_heads_receive_gradient(toy):
    _, vocabs = toy
    model = tiny_model(vocabs)
    batch = encode_batch(toy[0][:4], vocabs)
    model.losses(batch, tiny_config(), rng=np.random.default_rng(0))["tag"].backward()
    for (W, _), vocab in zip(model.tagger.components, vocabs.tags.components):
        if len(vocab) > 1:  # a one-class softmax is constant
            assert np.abs(W.grad).sum() > 0
