"""Training loop, learning-rate schedule and evaluation metrics."""
from __future__ import annotations

import copy
import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .corpus import Sentence, Token, build_vocabularies, make_batches, strip_sense
from .model import build_model

log = logging.getLogger(__name__)


class NumericError(RuntimeError):
    """Loss or gradient became NaN/Inf."""


@dataclass
class TrainConfig:
    alpha_tag: float = 1.0
    alpha_components: float = 0.1
    beta: float = 0.5
    lr: float = 1e-3
    lr_decay: float = 0.25
    decay_epochs: tuple = (20, 30)
    epochs: int = 40
    batch_size: int = 16
    clip: float = 3.0
    dropout: float = 0.5
    word_dropout: float = 0.25
    label_smoothing: float = 0.1
    rnn_dim: int = 768
    char_dim: int = 384
    tagfeat_dim: int = 256
    min_word_freq: int = 2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    mode: str = "joint"

    def __post_init__(self):
        self.decay_epochs = tuple(int(e) for e in self.decay_epochs)
        if self.mode not in ("joint", "separate"):
            raise ValueError(f"mode must be 'joint' or 'separate', got {self.mode!r}")
        if self.rnn_dim != 2 * self.char_dim:
            raise ValueError("rnn_dim must be twice char_dim")
        for name in ("lr", "epochs", "batch_size", "clip", "rnn_dim", "char_dim", "tagfeat_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def profile(cls, name="paper", **overrides):
        """`paper` uses the published sizes; `tiny` is the 64/32/32 desk profile."""
        if name not in PROFILES:
            raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
        return cls(**{**PROFILES[name], **overrides})

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["decay_epochs"] = list(self.decay_epochs)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


PROFILES = {
    "paper": {},
    "tiny": {"rnn_dim": 64, "char_dim": 32, "tagfeat_dim": 32},
}


def lr_at(epoch, config):
    """Piecewise-constant rate; epochs are 1-based, decay applies from each listed epoch on."""
    drops = sum(1 for e in config.decay_epochs if epoch >= e)
    return config.lr * config.lr_decay ** drops


@dataclass
class Metrics:
    tag_accuracy: float | None = None
    lemma_accuracy: float | None = None
    lemma_accuracy_sense_insensitive: float | None = None
    component_accuracy: list = field(default_factory=list)
    empty_lemmas: int = 0
    tokens: int = 0

    def to_dict(self):
        return dataclasses.asdict(self)


def predict_corpus(model, sentences, batch_size=64):
    """Copies of `sentences` with lemma/tag replaced by model predictions."""
    out = []
    vocabs = model.vocabs
    components = []
    # gold annotations play no part in prediction
    bare = [Sentence([Token(t.form, line=t.line) for t in s.tokens], list(s.lines))
            for s in sentences]
    for batch in make_batches(bare, vocabs, batch_size):
        pred = model.predict(batch)
        n = 0
        for sentence in batch.sentences:
            tokens = []
            for tok in sentence.tokens:
                tokens.append(Token(
                    tok.form,
                    pred.lemmas[n] if pred.lemmas is not None else tok.lemma,
                    pred.tags[n] if pred.tags is not None else tok.tag,
                    line=tok.line))
                components.append(pred.components[n] if pred.components is not None else None)
                n += 1
            out.append(Sentence(tokens, list(sentence.lines)))
    return out, components


def _ratio(hits, total):
    return hits / total if total else None


def evaluate(model, sentences, batch_size=64):
    """Tag accuracy, sense-sensitive and sense-insensitive lemma accuracy."""
    predicted, components = predict_corpus(model, sentences, batch_size)
    schema = model.vocabs.tags
    tag_hits = tag_total = lem_hits = lem_loose = lem_total = empty = tokens = 0
    comp_hits = np.zeros(schema.tau)
    comp_total = 0
    n = 0
    for gold_s, pred_s in zip(sentences, predicted):
        for gold, pred in zip(gold_s.tokens, pred_s.tokens):
            tokens += 1
            if gold.tag is not None:
                tag_total += 1
                tag_hits += pred.tag == gold.tag
                if schema.tau and components[n] is not None:
                    comp_total += 1
                    comp_hits += np.array(components[n]) == np.array(schema.factorize(gold.tag))
            if gold.lemma is not None:
                lem_total += 1
                lem_hits += pred.lemma == gold.lemma
                lem_loose += strip_sense(pred.lemma) == strip_sense(gold.lemma)
                empty += pred.lemma == ""
            n += 1
    return Metrics(
        tag_accuracy=_ratio(tag_hits, tag_total),
        lemma_accuracy=_ratio(lem_hits, lem_total),
        lemma_accuracy_sense_insensitive=_ratio(lem_loose, lem_total),
        component_accuracy=[float(h / comp_total) for h in comp_hits] if comp_total else [],
        empty_lemmas=empty,
        tokens=tokens,
    )


def _dev_score(metrics):
    return sum(v for v in (metrics.tag_accuracy, metrics.lemma_accuracy) if v is not None)


class Trainer:
    """Owns a model, its optimizers and the random streams of one run."""

    def __init__(self, vocabs, config, seed=0, dtype=np.float32):
        self.vocabs, self.config, self.seed = vocabs, config, seed
        init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(seed).spawn(3)
        self.model = build_model(vocabs, config, np.random.default_rng(init_ss), dtype)
        self.shuffle_rng = np.random.default_rng(shuffle_ss)
        self.dropout_rng = np.random.default_rng(dropout_ss)
        self.optimizers = [ag.LazyAdam(m.parameters(), config.lr, config.adam_beta1,
                                       config.adam_beta2, config.adam_eps)
                           for m in self.model.members]
        self.epoch = 0
        self.history = []
        self.best_epoch = None
        self._best_state = None
        self._best_score = -1.0

    def train_step(self, batch, lr):
        stats = {"tag": 0.0, "lemma": 0.0, "total": 0.0, "grad_norm": 0.0, "clipped": 0}
        for member, opt in zip(self.model.members, self.optimizers):
            opt.zero_grad()
            losses = member.losses(batch, self.config, training=True, rng=self.dropout_rng)
            total = losses["total"]
            values = {k: float(v.item()) for k, v in losses.items() if v is not None}
            if not all(np.isfinite(v) for v in values.values()):
                raise NumericError(f"non-finite loss at epoch {self.epoch + 1}: {values}")
            total.backward()
            grads = [p.grad for p in opt.params]
            clipped, norm = ag.clip_global_norm(grads, self.config.clip)
            if not np.isfinite(norm):
                raise NumericError(f"non-finite gradient norm at epoch {self.epoch + 1}")
            opt.step(clipped, lr)
            for k, v in values.items():
                stats[k] += v
            stats["grad_norm"] = max(stats["grad_norm"], norm)
            stats["clipped"] += int(norm > self.config.clip)
        return stats

    def train_epoch(self, sentences):
        self.epoch += 1
        lr = lr_at(self.epoch, self.config)
        start = time.perf_counter()
        batches = make_batches(sentences, self.vocabs, self.config.batch_size,
                               rng=self.shuffle_rng, shuffle=True)
        sums = {"tag": 0.0, "lemma": 0.0, "total": 0.0}
        max_norm, clipped = 0.0, 0
        for batch in batches:
            stats = self.train_step(batch, lr)
            for k in sums:
                sums[k] += stats[k]
            max_norm = max(max_norm, stats["grad_norm"])
            clipped += stats["clipped"]
        n = len(batches)
        return {"epoch": self.epoch, "lr": lr, "loss": sums["total"] / n,
                "tag_loss": sums["tag"] / n, "lemma_loss": sums["lemma"] / n,
                "max_grad_norm": max_norm, "clipped_steps": clipped, "batches": n,
                "seconds": round(time.perf_counter() - start, 3)}

    def fit(self, train_sentences, dev_sentences=None, epochs=None, on_epoch=None):
        """Train for `epochs` (default config.epochs) and keep the best-dev snapshot."""
        epochs = self.config.epochs if epochs is None else epochs
        for _ in range(epochs):
            record = self.train_epoch(train_sentences)
            if dev_sentences:
                metrics = evaluate(self.model, dev_sentences)
                record["dev"] = metrics.to_dict()
                score = _dev_score(metrics)
                record["best"] = score > self._best_score
                if record["best"]:
                    self._best_score = score
                    self.best_epoch = self.epoch
                    self._best_state = self.state_snapshot()
            log.info("epoch %d loss %.4f", record["epoch"], record["loss"])
            self.history.append(record)
            if on_epoch is not None:
                on_epoch(record)
        if self._best_state is not None:
            self.restore_snapshot(self._best_state)
        return self.history

    def state_snapshot(self):
        return {
            "params": {name: p.data.copy() for name, p in self.model.named_parameters().items()},
            "adam": [(copy.deepcopy(o.m), copy.deepcopy(o.v), o.t) for o in self.optimizers],
            "epoch": self.epoch,
            "rng": self.rng_state(),
        }

    def restore_snapshot(self, snap):
        for name, p in self.model.named_parameters().items():
            p.data = snap["params"][name].copy()
        for opt, (m, v, t) in zip(self.optimizers, snap["adam"]):
            opt.m, opt.v, opt.t = copy.deepcopy(m), copy.deepcopy(v), t
        self.epoch = snap["epoch"]
        self.set_rng_state(snap["rng"])

    def rng_state(self):
        return {"shuffle": self.shuffle_rng.bit_generator.state,
                "dropout": self.dropout_rng.bit_generator.state}

    def set_rng_state(self, state):
        self.shuffle_rng.bit_generator.state = state["shuffle"]
        self.dropout_rng.bit_generator.state = state["dropout"]


def train(sentences, config, seed=0, dev=None, vocabs=None, tau=0, on_epoch=None,
          dtype=np.float32):
    """Build vocabularies from `sentences` (unless given) and run the full schedule."""
    if vocabs is None:
        vocabs = build_vocabularies(sentences, config.min_word_freq, tau=tau)
    trainer = Trainer(vocabs, config, seed=seed, dtype=dtype)
    history = trainer.fit(sentences, dev, on_epoch=on_epoch)
    return trainer, history
