"""Character-level lemma decoder with multiplicative attention over character keys."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd.init import embedding_uniform, glorot_uniform
from .corpus import BOW, EOW, PAD, UNK

EXTRA_CHARS = 10  # decoding cap is m_i + EXTRA_CHARS


@dataclass
class DecoderState:
    h: ag.Tensor
    c: ag.Tensor
    step: int
    prev: np.ndarray  # previously emitted char ids, (Nw,)


@dataclass
class WordContext:
    """Everything the decoder needs about the Nw words being lemmatized."""
    keys: ag.Tensor           # (Nw, M, D)
    key_mask: np.ndarray      # (Nw, M)
    projected_keys: ag.Tensor  # W_a k_j, (Nw, M, D)
    static: ag.Tensor         # concat(o^w, e^w, T^f), (Nw, S)
    initial: ag.Tensor        # o^w, (Nw, D)


class Lemmatizer:
    def __init__(self, lemma_chars, rnn_dim, char_dim, static_dim, rng, dtype=np.float32,
                 name="lemmatizer"):
        self.vocab = lemma_chars
        V = len(lemma_chars)
        self.rnn_dim = rnn_dim
        self.embed = ag.Parameter(embedding_uniform(rng, (V, char_dim), dtype),
                                  name=f"{name}.char_embed", sparse=True)
        self.W_att = ag.Parameter(glorot_uniform(rng, (rnn_dim, rnn_dim), dtype),
                                  name=f"{name}.W_att")
        self.cell = ag.LSTMCell(char_dim + rnn_dim + static_dim, rnn_dim, rng, dtype,
                                name=f"{name}.cell")
        self.W_out = ag.Parameter(glorot_uniform(rng, (V, rnn_dim), dtype), name=f"{name}.out.W")
        self.b_out = ag.Parameter(np.zeros(V, dtype), name=f"{name}.out.b")
        self.bow = lemma_chars.id(BOW)
        self.eow = lemma_chars.id(EOW)
        # never emitted by greedy decoding
        self.blocked = [lemma_chars.id(s) for s in (PAD, BOW, UNK)]

    def parameters(self):
        return [self.embed, self.W_att, *self.cell.parameters(), self.W_out, self.b_out]

    def context(self, keys, key_mask, o_w, e_w, tag_features=None):
        static_parts = [o_w, e_w] if tag_features is None else [o_w, e_w, tag_features]
        return WordContext(keys, np.asarray(key_mask, bool), ag.affine(keys, self.W_att),
                           ag.concat(static_parts, axis=-1), o_w)

    def attend(self, query, keys, key_mask, projected_keys=None):
        """score_j = query . (W_att key_j); softmax over real characters only."""
        if projected_keys is None:
            projected_keys = ag.affine(keys, self.W_att)
        Nw, M, D = keys.shape
        scores = ag.reshape(ag.matmul(projected_keys, ag.reshape(query, (Nw, D, 1))), (Nw, M))
        weights = ag.masked_softmax(scores, key_mask)
        ctx = ag.reshape(ag.matmul(ag.reshape(weights, (Nw, 1, M)), keys), (Nw, D))
        return ctx, weights

    def init_decoder(self, initial):
        Nw = initial.shape[0]
        zeros = ag.Tensor(np.zeros(initial.shape, initial.dtype))
        return DecoderState(initial, zeros, 0, np.full(Nw, self.bow, dtype=np.int64))

    def _advance(self, state, prev_ids, word):
        prev = ag.embedding_lookup(self.embed, prev_ids)
        ctx, _ = self.attend(state.h, word.keys, word.key_mask, word.projected_keys)
        x = ag.concat([prev, ctx, word.static], axis=-1)
        h, c = self.cell.step(x, (state.h, state.c))
        return DecoderState(h, c, state.step + 1, np.asarray(prev_ids))

    def decode_step(self, state, word):
        """One autoregressive step from state.prev; returns (logits, new state)."""
        new = self._advance(state, state.prev, word)
        return ag.affine(new.h, self.W_out, self.b_out), new

    def loss(self, word, lemma_in, lemma_out, lemma_mask, has_lemma=None):
        """Teacher-forced CE summed over characters (incl. <eow>), mean over words."""
        state = self.init_decoder(word.initial)
        hidden = []
        for t in range(lemma_in.shape[1]):
            state = self._advance(state, lemma_in[:, t], word)
            hidden.append(state.h)
        logits = ag.affine(ag.stack(hidden, axis=1), self.W_out, self.b_out)
        mask = np.asarray(lemma_mask, bool)
        if has_lemma is not None:
            mask = mask & np.asarray(has_lemma, bool)[:, None]
        n_words = max(int(mask.any(axis=1).sum()), 1)
        weights = (mask / n_words).astype(logits.dtype)
        return ag.softmax_ce_smoothed(logits, lemma_out, 0.0, weights)

    def greedy_decode(self, word, form_lengths):
        """Argmax decoding until <eow> or m_i + 10 characters per word."""
        form_lengths = np.asarray(form_lengths)
        Nw = len(form_lengths)
        caps = form_lengths + EXTRA_CHARS
        emitted = [[] for _ in range(Nw)]
        done = np.zeros(Nw, dtype=bool)
        with ag.no_grad():
            state = self.init_decoder(word.initial)
            for step in range(int(caps.max()) + 1 if Nw else 0):
                logits, state = self.decode_step(state, word)
                scores = logits.data.copy()
                scores[:, self.blocked] = -np.inf
                best = np.argmax(scores, axis=-1)
                for n in np.flatnonzero(~done):
                    if best[n] == self.eow or len(emitted[n]) >= caps[n]:
                        done[n] = True
                    else:
                        emitted[n].append(self.vocab.symbol(best[n]))
                if done.all():
                    break
                state.prev = best
        return ["".join(chars) for chars in emitted]
