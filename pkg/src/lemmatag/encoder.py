"""Shared encoder: character BiGRU, word embeddings, residual sentence BiLSTM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd.init import embedding_uniform


@dataclass
class CharEncoding:
    keys: ag.Tensor      # (Nw, M, 2 * char_dim) per-character outputs, attention keys
    mask: np.ndarray     # (Nw, M)
    summary: ag.Tensor   # (Nw, 2 * char_dim) concatenated final states


@dataclass
class Encoding:
    chars: CharEncoding
    word_embedding: ag.Tensor  # e^b, (Nw, D)
    words: ag.Tensor           # e^w = s^c + e^b, (Nw, D)
    context: ag.Tensor         # o^w, (Nw, D)


class Encoder:
    def __init__(self, n_words, n_chars, rnn_dim, char_dim, rng, dtype=np.float32,
                 dropout=0.5, name="encoder"):
        if rnn_dim != 2 * char_dim:
            raise ValueError(f"rnn_dim ({rnn_dim}) must equal 2 * char_dim ({char_dim})")
        self.rnn_dim, self.char_dim, self.dropout = rnn_dim, char_dim, dropout
        self.dtype = dtype
        self.char_embed = ag.Parameter(embedding_uniform(rng, (n_chars, char_dim), dtype),
                                       name=f"{name}.char_embed", sparse=True)
        self.char_fw = ag.GRUCell(char_dim, char_dim, rng, dtype, name=f"{name}.char_fw")
        self.char_bw = ag.GRUCell(char_dim, char_dim, rng, dtype, name=f"{name}.char_bw")
        self.word_embed = ag.Parameter(embedding_uniform(rng, (n_words, rnn_dim), dtype),
                                       name=f"{name}.word_embed", sparse=True)
        self.sent = [
            (ag.LSTMCell(rnn_dim, rnn_dim, rng, dtype, name=f"{name}.sent{layer}_fw"),
             ag.LSTMCell(rnn_dim, rnn_dim, rng, dtype, name=f"{name}.sent{layer}_bw"))
            for layer in (1, 2)
        ]

    def parameters(self):
        params = [self.char_embed, *self.char_fw.parameters(), *self.char_bw.parameters(),
                  self.word_embed]
        for fw, bw in self.sent:
            params += fw.parameters() + bw.parameters()
        return params

    def encode_chars(self, char_ids, char_mask, training=False, rng=None):
        char_mask = np.asarray(char_mask, dtype=bool)
        if char_mask.ndim != 2 or not char_mask[:, 0].all():
            raise ValueError("every word needs at least one character")
        emb = ag.embedding_lookup(self.char_embed, char_ids)
        emb = ag.dropout(emb, self.dropout, training, rng)
        fw_out, fw_last = ag.run_masked(self.char_fw, emb, char_mask)
        bw_out, bw_last = ag.run_masked(self.char_bw, emb, char_mask, reverse=True)
        keys = ag.concat([ag.stack(fw_out, axis=1), ag.stack(bw_out, axis=1)], axis=-1)
        summary = ag.concat([fw_last, bw_last], axis=-1)
        return CharEncoding(keys, char_mask, summary)

    def embed_and_combine(self, word_ids, summary):
        e_b = ag.embedding_lookup(self.word_embed, word_ids)
        if e_b.shape != summary.shape:
            raise ValueError(f"word embedding {e_b.shape} and char summary {summary.shape} differ")
        return e_b, e_b + summary

    def encode_sentence(self, words, word_index, word_mask, training=False, rng=None):
        """Run the two residual BiLSTM layers over the padded (B, K) layout.

        `words` holds the Nw real words; outputs come back in the same order.
        """
        word_mask = np.asarray(word_mask, dtype=bool)
        B, K = word_mask.shape
        if B == 0 or not word_mask[:, 0].all():
            raise ValueError("every sentence needs at least one word")
        Nw, D = words.shape
        layout = np.full(B * K, Nw, dtype=np.int64)
        layout[word_index] = np.arange(Nw)
        padded = ag.concat([words, np.zeros((1, D), words.dtype)], axis=0)
        x = ag.reshape(ag.gather(padded, layout), (B, K, D))
        x = ag.dropout(x, self.dropout, training, rng)

        layer_in = x
        for depth, (fw, bw) in enumerate(self.sent):
            fw_out, _ = ag.run_masked(fw, layer_in, word_mask)
            bw_out, _ = ag.run_masked(bw, layer_in, word_mask, reverse=True)
            out = ag.stack(fw_out, axis=1) + ag.stack(bw_out, axis=1)
            layer_in = out if depth == 0 else out + layer_in
        flat = ag.reshape(layer_in, (B * K, D))
        return ag.gather(flat, word_index)

    def __call__(self, batch, training=False, rng=None, word_ids=None):
        """Encode a Batch; `word_ids` overrides batch.word_ids (word dropout)."""
        if word_ids is None:
            word_ids = batch.word_ids
        chars = self.encode_chars(batch.char_ids, batch.char_mask, training, rng)
        real_ids = np.asarray(word_ids).reshape(-1)[batch.word_index]
        e_b, e_w = self.embed_and_combine(real_ids, chars.summary)
        context = self.encode_sentence(e_w, batch.word_index, batch.word_mask, training, rng)
        return Encoding(chars, e_b, e_w, context)
