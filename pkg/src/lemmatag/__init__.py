"""Joint morphological tagging and lemmatization with a shared recurrent encoder."""
from .corpus import build_vocabularies, parse_conllu, parse_tsv, split_sense
from .model import LemmaTag, SeparateLemmaTag
from .trainer import TrainConfig, Trainer, evaluate, lr_at, train

__version__ = "0.1.0"

__all__ = [
    "LemmaTag", "SeparateLemmaTag", "TrainConfig", "Trainer", "build_vocabularies",
    "evaluate", "lr_at", "parse_conllu", "parse_tsv", "split_sense", "train",
]
