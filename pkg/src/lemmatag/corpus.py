"""Corpus readers/writers, vocabularies, tag factorization and batching."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD, UNK, BOW, EOW = "<pad>", "<unk>", "<bow>", "<eow>"
WORD_RESERVED = (PAD, UNK)
CHAR_RESERVED = (PAD, UNK, BOW, EOW)

_SENSE = re.compile(r"(.+)-([1-9][0-9]*)", re.DOTALL)

# CoNLL-U column indices
ID, FORM, LEMMA, UPOS, XPOS = 0, 1, 2, 3, 4
TAG_COLUMNS = {"upos": UPOS, "xpos": XPOS}


class CorpusError(ValueError):
    """Malformed input data."""


class SchemaError(ValueError):
    """Tag does not fit the tag schema."""


def split_sense(lemma):
    """Split a trailing `-<digits>` sense indicator: "moc-1" -> ("moc", 1)."""
    match = _SENSE.fullmatch(lemma)
    if match is None:
        return lemma, None
    return match.group(1), int(match.group(2))


def join_sense(raw, sense):
    return raw if sense is None else f"{raw}-{sense}"


def strip_sense(lemma):
    return split_sense(lemma)[0]


@dataclass
class Token:
    form: str
    lemma: str | None = None
    tag: str | None = None
    line: int | None = None  # index into Sentence.lines for CoNLL-U write-back

    def __post_init__(self):
        if not self.form:
            raise CorpusError("token with empty form")

    @property
    def chars(self):
        return list(self.form)

    @property
    def raw_lemma(self):
        return None if self.lemma is None else split_sense(self.lemma)[0]

    @property
    def sense(self):
        return None if self.lemma is None else split_sense(self.lemma)[1]


@dataclass
class Sentence:
    tokens: list[Token]
    lines: list[str] = field(default_factory=list)  # original CoNLL-U lines

    def __len__(self):
        return len(self.tokens)

    @property
    def forms(self):
        return [t.form for t in self.tokens]


def _blocks(text):
    """Yield lists of (line_number, line) separated by blank lines."""
    block = []
    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            block.append((number, line.rstrip("\r\n")))
        elif block:
            yield block
            block = []
    if block:
        yield block


def parse_conllu(text, tag_column="upos"):
    """Read CoNLL-U, keeping FORM, LEMMA and the UPOS or XPOS column.

    Multiword-token ranges (`1-2`) and empty nodes (`1.1`) are skipped but
    kept in `Sentence.lines` so predictions can be written back in place.
    """
    column = TAG_COLUMNS[tag_column]
    sentences = []
    for block in _blocks(text):
        tokens, lines = [], []
        for number, line in block:
            lines.append(line)
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise CorpusError(f"line {number}: expected 10 tab-separated columns, got {len(cols)}")
            if "-" in cols[ID] or "." in cols[ID]:
                continue
            lemma = None if cols[LEMMA] == "_" and cols[FORM] != "_" else cols[LEMMA]
            tag = None if cols[column] == "_" else cols[column]
            tokens.append(Token(cols[FORM], lemma, tag, line=len(lines) - 1))
        if tokens:
            sentences.append(Sentence(tokens, lines))
    return sentences


def parse_tsv(text, require_gold=True):
    """Read `form<TAB>lemma<TAB>tag` lines with blank lines between sentences.

    With `require_gold=False` the lemma and tag columns may be omitted.
    """
    sentences = []
    for block in _blocks(text):
        tokens = []
        for number, line in block:
            cols = line.split("\t")
            if len(cols) != 3 and (require_gold or len(cols) not in (1, 2)):
                raise CorpusError(f"line {number}: expected 3 tab-separated fields, got {len(cols)}")
            cols += [None] * (3 - len(cols))
            tokens.append(Token(cols[0], cols[1] or None, cols[2] or None))
        sentences.append(Sentence(tokens))
    return sentences


def write_tsv(sentences):
    out = []
    for sentence in sentences:
        for tok in sentence.tokens:
            out.append(f"{tok.form}\t{tok.lemma or '_'}\t{tok.tag or '_'}")
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def write_conllu(sentences, tag_column="upos"):
    """Write sentences back, replacing LEMMA and the tag column."""
    column = TAG_COLUMNS[tag_column]
    out = []
    for sentence in sentences:
        lines = list(sentence.lines)
        if not lines:
            lines = ["\t".join([str(i), t.form] + ["_"] * 8)
                     for i, t in enumerate(sentence.tokens, start=1)]
            for i, tok in enumerate(sentence.tokens):
                tok.line = i
        for tok in sentence.tokens:
            cols = lines[tok.line].split("\t")
            cols[LEMMA] = tok.lemma or "_"
            cols[column] = tok.tag or "_"
            lines[tok.line] = "\t".join(cols)
        out.extend(lines)
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def read_corpus(path, fmt="conllu", tag_column="upos", require_gold=True):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if fmt == "conllu":
        return parse_conllu(text, tag_column)
    if fmt == "tsv":
        return parse_tsv(text, require_gold=require_gold)
    raise ValueError(f"unknown format {fmt!r}")


def write_corpus(path, sentences, fmt="conllu", tag_column="upos"):
    text = write_conllu(sentences, tag_column) if fmt == "conllu" else write_tsv(sentences)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


class Vocabulary:
    """Symbol <-> id bijection with reserved symbols at the lowest ids."""

    def __init__(self, symbols=(), reserved=()):
        self.reserved = tuple(reserved)
        self._symbols = []
        self._ids = {}
        for s in (*self.reserved, *symbols):
            self.add(s)

    def add(self, symbol):
        if symbol not in self._ids:
            self._ids[symbol] = len(self._symbols)
            self._symbols.append(symbol)
        return self._ids[symbol]

    def __len__(self):
        return len(self._symbols)

    def __contains__(self, symbol):
        return symbol in self._ids

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()

    @property
    def symbols(self):
        return list(self._symbols)

    @property
    def unk(self):
        return self._ids.get(UNK)

    def id(self, symbol, default=None):
        """Id of `symbol`, falling back to `<unk>` (or `default`) when unseen."""
        found = self._ids.get(symbol)
        if found is not None:
            return found
        if default is not None:
            return default
        if UNK in self._ids:
            return self._ids[UNK]
        raise KeyError(symbol)

    def ids(self, symbols):
        return [self.id(s) for s in symbols]

    def symbol(self, index):
        return self._symbols[index]

    def to_dict(self):
        return {"reserved": list(self.reserved), "symbols": self._symbols[len(self.reserved):]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["symbols"], reserved=d["reserved"])


class TagSchema:
    """Whole-tag vocabulary plus `tau` positional component vocabularies.

    `tau == 0` means tags are not factored into components.
    """

    def __init__(self, tau=0):
        self.tau = tau
        self.whole = Vocabulary()
        self.components = [Vocabulary() for _ in range(tau)]

    def factorize(self, tag):
        if self.tau == 0:
            return []
        if len(tag) != self.tau:
            raise SchemaError(f"tag {tag!r} has length {len(tag)}, positional schema expects {self.tau}")
        return list(tag)

    @staticmethod
    def reassemble(components):
        return "".join(components)

    def add(self, tag):
        self.whole.add(tag)
        for vocab, value in zip(self.components, self.factorize(tag)):
            vocab.add(value)

    def check(self, sentences):
        """Raise SchemaError if any gold tag does not fit this schema."""
        for sentence in sentences:
            for tok in sentence.tokens:
                if tok.tag is not None:
                    self.factorize(tok.tag)

    @property
    def feature_dim(self):
        return len(self.whole) + sum(len(c) for c in self.components)

    @property
    def spec(self):
        return f"positional:{self.tau}" if self.tau else "unfactored"

    def to_dict(self):
        return {"tau": self.tau, "whole": self.whole.to_dict(),
                "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, d):
        schema = cls(d["tau"])
        schema.whole = Vocabulary.from_dict(d["whole"])
        schema.components = [Vocabulary.from_dict(c) for c in d["components"]]
        return schema


def parse_schema(spec):
    """`positional:N` -> N, `unfactored` -> 0."""
    if spec == "unfactored":
        return 0
    kind, _, n = spec.partition(":")
    if kind != "positional" or not n.isdigit() or int(n) < 1:
        raise ValueError(f"schema must be 'positional:N' or 'unfactored', got {spec!r}")
    return int(n)


def factorize_tag(tag, schema):
    return schema.factorize(tag)


@dataclass
class Vocabularies:
    words: Vocabulary
    chars: Vocabulary
    lemma_chars: Vocabulary
    tags: TagSchema

    def to_dict(self):
        return {"words": self.words.to_dict(), "chars": self.chars.to_dict(),
                "lemma_chars": self.lemma_chars.to_dict(), "tags": self.tags.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(Vocabulary.from_dict(d["words"]), Vocabulary.from_dict(d["chars"]),
                   Vocabulary.from_dict(d["lemma_chars"]), TagSchema.from_dict(d["tags"]))


def build_vocabularies(sentences, min_word_freq=2, tau=0):
    if not sentences:
        raise CorpusError("cannot build vocabularies from an empty corpus")
    word_counts = Counter(t.form for s in sentences for t in s.tokens)
    words = Vocabulary(sorted(w for w, n in word_counts.items() if n >= min_word_freq),
                       reserved=WORD_RESERVED)
    chars = Vocabulary(sorted({c for s in sentences for t in s.tokens for c in t.form}),
                       reserved=CHAR_RESERVED)
    lemma_chars = Vocabulary(
        sorted({c for s in sentences for t in s.tokens if t.lemma for c in t.lemma}),
        reserved=CHAR_RESERVED)
    schema = TagSchema(tau)
    for tag in sorted({t.tag for s in sentences for t in s.tokens if t.tag is not None}):
        schema.add(tag)
    return Vocabularies(words, chars, lemma_chars, schema)


def word_dropout(word_ids, rate, training, rng, mask=None, unk_id=1):
    """Replace each real word id by `<unk>` with probability `rate` (training only)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"word dropout rate must be in [0, 1), got {rate}")
    word_ids = np.asarray(word_ids)
    if not training or rate == 0.0:
        return word_ids
    hit = rng.random(word_ids.shape) < rate
    if mask is not None:
        hit &= np.asarray(mask, dtype=bool)
    return np.where(hit, unk_id, word_ids)


@dataclass
class Batch:
    """Padded arrays for up to `batch_size` sentences.

    Word-level arrays are (B, K). Character and lemma arrays are laid out over
    the Nw real words of the batch in row-major sentence order; `word_index`
    holds each real word's flat position b * K + k.
    """
    sentences: list[Sentence]
    word_ids: np.ndarray       # (B, K)
    word_mask: np.ndarray      # (B, K) bool
    word_index: np.ndarray     # (Nw,)
    char_ids: np.ndarray       # (Nw, M)
    char_mask: np.ndarray      # (Nw, M) bool
    char_lens: np.ndarray      # (Nw,)
    tag_ids: np.ndarray        # (Nw,), -1 when gold unknown
    comp_ids: np.ndarray       # (Nw, tau), -1 when gold unknown
    lemma_in: np.ndarray       # (Nw, L + 1): <bow> l_1 .. l_L
    lemma_out: np.ndarray      # (Nw, L + 1): l_1 .. l_L <eow>
    lemma_mask: np.ndarray     # (Nw, L + 1) bool
    has_lemma: np.ndarray      # (Nw,) bool

    @property
    def num_words(self):
        return len(self.word_index)


def encode_batch(sentences, vocabs):
    B = len(sentences)
    K = max(len(s) for s in sentences)
    tokens = [t for s in sentences for t in s.tokens]
    Nw = len(tokens)
    M = max(len(t.form) for t in tokens)
    L = max((len(t.lemma) for t in tokens if t.lemma), default=0)
    tau = vocabs.tags.tau
    chars, lchars, schema = vocabs.chars, vocabs.lemma_chars, vocabs.tags

    word_ids = np.zeros((B, K), np.int64)
    word_mask = np.zeros((B, K), bool)
    word_index = np.zeros(Nw, np.int64)
    char_ids = np.zeros((Nw, M), np.int64)
    char_mask = np.zeros((Nw, M), bool)
    tag_ids = np.full(Nw, -1, np.int64)
    comp_ids = np.full((Nw, tau), -1, np.int64)
    lemma_in = np.zeros((Nw, L + 1), np.int64)
    lemma_out = np.zeros((Nw, L + 1), np.int64)
    lemma_mask = np.zeros((Nw, L + 1), bool)
    has_lemma = np.zeros(Nw, bool)

    n = 0
    for b, sentence in enumerate(sentences):
        for k, tok in enumerate(sentence.tokens):
            word_ids[b, k] = vocabs.words.id(tok.form)
            word_mask[b, k] = True
            word_index[n] = b * K + k
            m = len(tok.form)
            char_ids[n, :m] = chars.ids(tok.form)
            char_mask[n, :m] = True
            if tok.tag is not None:
                tag_ids[n] = schema.whole.id(tok.tag, default=-1)
                for j, value in enumerate(schema.factorize(tok.tag)):
                    comp_ids[n, j] = schema.components[j].id(value, default=-1)
            lemma = tok.lemma or ""
            lam = len(lemma)
            lemma_in[n, 0] = lchars.id(BOW)
            lemma_in[n, 1:lam + 1] = lchars.ids(lemma)
            lemma_out[n, :lam] = lchars.ids(lemma)
            lemma_out[n, lam] = lchars.id(EOW)
            lemma_mask[n, :lam + 1] = True
            has_lemma[n] = tok.lemma is not None
            n += 1
    return Batch(list(sentences), word_ids, word_mask, word_index, char_ids, char_mask,
                 char_mask.sum(axis=1), tag_ids, comp_ids, lemma_in, lemma_out, lemma_mask,
                 has_lemma)


def make_batches(sentences, vocabs, batch_size=16, rng=None, shuffle=False):
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = np.arange(len(sentences))
    if shuffle:
        order = rng.permutation(len(sentences))
    return [encode_batch([sentences[i] for i in order[start:start + batch_size]], vocabs)
            for start in range(0, len(sentences), batch_size)]


def unbatch(batch, vocabs):
    """Recover (form-or-<unk>, chars-form) per token from the padded arrays."""
    out = []
    B, K = batch.word_ids.shape
    n = 0
    for b in range(B):
        words = []
        for k in range(K):
            if not batch.word_mask[b, k]:
                continue
            m = batch.char_lens[n]
            form = "".join(vocabs.chars.symbol(i) for i in batch.char_ids[n, :m])
            words.append((vocabs.words.symbol(batch.word_ids[b, k]), form))
            n += 1
        out.append(words)
    return out
