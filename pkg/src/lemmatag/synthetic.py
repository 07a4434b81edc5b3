"""Small synthetic suffixing-morphology corpus with positional tags.

Used for capacity checks and demos: 20 lemma types (some sense-suffixed),
8 fifteen-character tags, agreement between adjective, noun and verb number.
"""
import numpy as np

from .corpus import Sentence, Token, split_sense

NOUNS = ["hrad", "most-1", "strom", "les-2", "dub", "vlak", "plot", "sad-1"]
ADJECTIVES = ["velk", "mal", "star", "nov", "bíl", "čern"]
VERBS = ["stoj", "pad", "zn", "hled", "ček", "děl"]

NOUN_TAGS = {
    ("S", 1): ("NNIS1-----A----", ""),
    ("S", 2): ("NNIS2-----A----", "u"),
    ("P", 1): ("NNIP1-----A----", "y"),
    ("P", 2): ("NNIP2-----A----", "ů"),
}
ADJ_TAGS = {"S": ("AAIS1----1A----", "ý"), "P": ("AAIP1----1A----", "é")}
VERB_TAGS = {"S": ("VB-S---3P-AA---", "á"), "P": ("VB-P---3P-AA---", "ají")}


def _noun(lemma, number, case):
    tag, suffix = NOUN_TAGS[(number, case)]
    return Token(split_sense(lemma)[0] + suffix, lemma, tag)


def _adj(stem, number):
    tag, suffix = ADJ_TAGS[number]
    return Token(stem + suffix, stem + "ý", tag)


def _verb(stem, number):
    tag, suffix = VERB_TAGS[number]
    return Token(stem + suffix, stem + "at", tag)


def synthetic_corpus(n_sentences=50, seed=0):
    """Sentences of the shape [ADJ] NOUN VERB [NOUN-genitive]."""
    rng = np.random.default_rng(seed)
    sentences = []
    for _ in range(n_sentences):
        number = "SP"[rng.integers(2)]
        tokens = []
        if rng.random() < 0.7:
            tokens.append(_adj(ADJECTIVES[rng.integers(len(ADJECTIVES))], number))
        tokens.append(_noun(NOUNS[rng.integers(len(NOUNS))], number, 1))
        tokens.append(_verb(VERBS[rng.integers(len(VERBS))], number))
        if rng.random() < 0.6:
            tokens.append(_noun(NOUNS[rng.integers(len(NOUNS))], "SP"[rng.integers(2)], 2))
        sentences.append(Sentence(tokens))
    return sentences
