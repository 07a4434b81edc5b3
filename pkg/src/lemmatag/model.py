"""The joint tagger/lemmatizer and the separate-models ablation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .corpus import word_dropout
from .encoder import Encoder
from .lemmatizer import Lemmatizer
from .tagger import TagFeatureProjection, Tagger, predict_tag


@dataclass
class Prediction:
    tags: list          # whole-tag strings per real word, batch order (None if no tagger)
    lemmas: list        # lemma strings per real word (None if no lemmatizer)
    components: list    # per word, list of predicted component values


class LemmaTag:
    """Shared encoder feeding a tagger and an attention lemma decoder.

    `tagger=False` or `lemmatizer=False` drop a head (separate-mode members);
    `tag_features=False` removes the tagger-logit input from the decoder.
    """

    def __init__(self, vocabs, rnn_dim=768, char_dim=384, tagfeat_dim=256, dropout=0.5,
                 rng=None, dtype=np.float32, tagger=True, lemmatizer=True, tag_features=True,
                 name="joint"):
        rng = np.random.default_rng(0) if rng is None else rng
        self.vocabs = vocabs
        self.dtype = np.dtype(dtype)
        self.dropout = dropout
        self.name = name
        self.encoder = Encoder(len(vocabs.words), len(vocabs.chars), rnn_dim, char_dim, rng,
                               dtype, dropout, name=f"{name}.encoder")
        self.tagger = Tagger(vocabs.tags, rnn_dim, rng, dtype, name=f"{name}.tagger") \
            if tagger else None
        use_features = tagger and lemmatizer and tag_features
        self.tag_projection = None
        static_dim = 2 * rnn_dim
        if use_features:
            self.tag_projection = TagFeatureProjection(
                vocabs.tags.feature_dim, tagfeat_dim, rng, dtype, name=f"{name}.tag_features")
            static_dim += tagfeat_dim
        self.lemmatizer = Lemmatizer(vocabs.lemma_chars, rnn_dim, char_dim, static_dim, rng,
                                     dtype, name=f"{name}.lemmatizer") if lemmatizer else None

    @property
    def members(self):
        return [self]

    def parameters(self):
        params = self.encoder.parameters()
        if self.tagger is not None:
            params += self.tagger.parameters()
        if self.tag_projection is not None:
            params += self.tag_projection.parameters()
        if self.lemmatizer is not None:
            params += self.lemmatizer.parameters()
        return params

    def named_parameters(self):
        return {p.name: p for p in self.parameters()}

    def _forward(self, batch, training, rng, word_dropout_rate=0.0):
        word_ids = word_dropout(batch.word_ids, word_dropout_rate, training, rng,
                                mask=batch.word_mask, unk_id=self.vocabs.words.unk)
        enc = self.encoder(batch, training, rng, word_ids=word_ids)
        tag_out = None
        if self.tagger is not None:
            o_tag = ag.dropout(enc.context, self.dropout, training, rng)
            tag_out = self.tagger.heads(o_tag)
        word = None
        if self.lemmatizer is not None:
            o_lem = ag.dropout(enc.context, self.dropout, training, rng)
            features = self.tag_projection(tag_out.features) if self.tag_projection else None
            word = self.lemmatizer.context(enc.chars.keys, enc.chars.mask, o_lem, enc.words,
                                           features)
        return enc, tag_out, word

    def losses(self, batch, config, training=True, rng=None):
        """Weighted tagger and lemmatizer losses for one batch.

        Returns a dict with the scalar tensors `total`, `tag` (alpha-weighted)
        and `lemma` (unweighted), the latter two None when the head is absent.
        """
        _, tag_out, word = self._forward(batch, training, rng,
                                         config.word_dropout if training else 0.0)
        tag_loss = lemma_loss = None
        if tag_out is not None:
            tag_loss = self.tagger.loss(tag_out, batch.tag_ids, batch.comp_ids,
                                        config.alpha_tag, config.alpha_components,
                                        config.label_smoothing)
        if word is not None:
            lemma_loss = self.lemmatizer.loss(word, batch.lemma_in, batch.lemma_out,
                                              batch.lemma_mask, batch.has_lemma)
        return {"total": joint_loss(tag_loss, lemma_loss, config.beta),
                "tag": tag_loss, "lemma": lemma_loss}

    def predict(self, batch):
        with ag.no_grad():
            _, tag_out, word = self._forward(batch, training=False, rng=None)
        schema = self.vocabs.tags
        tags = components = lemmas = None
        if tag_out is not None:
            tags = [schema.whole.symbol(i) for i in predict_tag(tag_out.whole)]
            comp_ids = [predict_tag(c) for c in tag_out.components]
            components = [[schema.components[j].symbol(ids[n]) for j, ids in enumerate(comp_ids)]
                          for n in range(batch.num_words)]
        if word is not None:
            lemmas = self.lemmatizer.greedy_decode(word, batch.char_lens)
        return Prediction(tags, lemmas, components)


def joint_loss(tag_loss, lemma_loss, beta=0.5):
    """L = alpha-weighted tagger loss + beta * lemmatizer loss (absent terms skipped)."""
    if tag_loss is None:
        return beta * lemma_loss
    if lemma_loss is None:
        return tag_loss
    return tag_loss + beta * lemma_loss


class SeparateLemmaTag:
    """Two disjoint models: a tagger and a lemmatizer without tag features."""

    def __init__(self, vocabs, rng=None, **kwargs):
        rng = np.random.default_rng(0) if rng is None else rng
        self.vocabs = vocabs
        self.tagger_model = LemmaTag(vocabs, rng=rng, lemmatizer=False, name="tagonly", **kwargs)
        self.lemma_model = LemmaTag(vocabs, rng=rng, tagger=False, tag_features=False,
                                    name="lemonly", **kwargs)
        self.dtype = self.tagger_model.dtype

    @property
    def members(self):
        return [self.tagger_model, self.lemma_model]

    def parameters(self):
        return self.tagger_model.parameters() + self.lemma_model.parameters()

    def named_parameters(self):
        return {p.name: p for p in self.parameters()}

    def predict(self, batch):
        tagged = self.tagger_model.predict(batch)
        lemmatized = self.lemma_model.predict(batch)
        return Prediction(tagged.tags, lemmatized.lemmas, tagged.components)


def build_model(vocabs, config, rng, dtype=np.float32):
    kwargs = dict(rnn_dim=config.rnn_dim, char_dim=config.char_dim,
                  tagfeat_dim=config.tagfeat_dim, dropout=config.dropout, dtype=dtype)
    if config.mode == "joint":
        return LemmaTag(vocabs, rng=rng, **kwargs)
    if config.mode == "separate":
        return SeparateLemmaTag(vocabs, rng=rng, **kwargs)
    raise ValueError(f"mode must be 'joint' or 'separate', got {config.mode!r}")
