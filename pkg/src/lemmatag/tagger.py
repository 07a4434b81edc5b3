"""Whole-tag and tag-component classifiers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd.init import glorot_uniform


@dataclass
class TagOutputs:
    whole: ag.Tensor           # (Nw, |T|)
    components: list           # tau tensors, (Nw, |T_j|)
    features: ag.Tensor        # (Nw, |T| + sum |T_j|), raw logits concatenated

    @property
    def feature_dim(self):
        return self.features.shape[-1]


def _dense(rng, n_out, n_in, dtype, name):
    return (ag.Parameter(glorot_uniform(rng, (n_out, n_in), dtype), name=f"{name}.W"),
            ag.Parameter(np.zeros(n_out, dtype), name=f"{name}.b"))


class Tagger:
    def __init__(self, schema, rnn_dim, rng, dtype=np.float32, name="tagger"):
        self.schema = schema
        self.whole = _dense(rng, len(schema.whole), rnn_dim, dtype, f"{name}.whole")
        self.components = [_dense(rng, len(vocab), rnn_dim, dtype, f"{name}.comp{j}")
                           for j, vocab in enumerate(schema.components)]

    def parameters(self):
        params = list(self.whole)
        for layer in self.components:
            params += layer
        return params

    def heads(self, context):
        whole = ag.affine(context, *self.whole)
        components = [ag.affine(context, *layer) for layer in self.components]
        features = ag.concat([whole, *components], axis=-1) if components else whole
        return TagOutputs(whole, components, features)

    def loss(self, outputs, tag_ids, comp_ids, alpha_tag=1.0, alpha_components=0.1,
             smoothing=0.1):
        """alpha_tag * CE(whole) + alpha_components * sum_j CE(component j), mean over words.

        Words whose gold tag is unknown (-1) are excluded.
        """
        valid = np.asarray(tag_ids) >= 0
        weights = valid / max(int(valid.sum()), 1)
        weights = weights.astype(outputs.whole.dtype)
        loss = alpha_tag * ag.softmax_ce_smoothed(outputs.whole, tag_ids, smoothing, weights)
        for j, logits in enumerate(outputs.components):
            gold = comp_ids[:, j]
            w = np.where(gold >= 0, weights, 0).astype(weights.dtype)
            loss = loss + alpha_components * ag.softmax_ce_smoothed(logits, gold, smoothing, w)
        return loss


def predict_tag(whole_logits):
    """Argmax over whole-tag logits; ties go to the lowest id."""
    logits = whole_logits.data if isinstance(whole_logits, ag.Tensor) else np.asarray(whole_logits)
    return np.argmax(logits, axis=-1)


class TagFeatureProjection:
    """ReLU projection of the tagger logits, behind a gradient stop."""

    def __init__(self, feature_dim, out_dim, rng, dtype=np.float32, name="tag_features"):
        self.W, self.b = _dense(rng, out_dim, feature_dim, dtype, name)

    def parameters(self):
        return [self.W, self.b]

    def __call__(self, features):
        return ag.relu(ag.affine(ag.stop_gradient(features), self.W, self.b))


def project_tag_features(outputs, projection):
    return projection(outputs.features)
