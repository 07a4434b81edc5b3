"""Command-line entry point: train, eval, predict, plus report and compare.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

A config file (``--config FILE``) holds flat ``key = value`` lines using the
long flag names (dashes or underscores) and any training hyperparameter
(``lr``, ``epochs``, ``dropout`` ...). Flags given on the command line win.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .corpus import CorpusError, SchemaError, build_vocabularies, parse_schema, read_corpus, \
    write_corpus
from .trainer import NumericError, TrainConfig, Trainer, evaluate, predict_corpus

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3

DEFAULTS = {
    "format": "conllu",
    "tag_column": "upos",
    "mode": "joint",
    "profile": "paper",
    "seed": 0,
}
TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)} - {"mode"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--format", choices=["conllu", "tsv"])
    p.add_argument("--tag-column", choices=["upos", "xpos"])
    p.add_argument("--schema", help="positional:N or unfactored")
    p.add_argument("--model", help="checkpoint path")
    p.add_argument("--out", help="output path")


def build_parser():
    parser = _Parser(prog="lemmatag", description="Joint morphological tagger and lemmatizer.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _common(p)
    p.add_argument("--train", help="training corpus")
    p.add_argument("--dev", help="development corpus (best-dev checkpoint is kept)")
    p.add_argument("--mode", choices=["joint", "separate"])
    p.add_argument("--profile", choices=["paper", "tiny"])
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--figures", help="directory for learning-curve figures")

    p = sub.add_parser("eval", help="report accuracies of a checkpoint on a corpus")
    _common(p)
    p.add_argument("--test", help="evaluation corpus")

    p = sub.add_parser("predict", help="fill lemma and tag columns with predictions")
    _common(p)
    p.add_argument("--test", "--input", dest="test", help="input corpus")

    p = sub.add_parser("report", help="render figures from a metrics stream")
    p.add_argument("--metrics", required=True, help="line-delimited metrics file")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("compare", help="joint vs separate under identical seeds")
    _common(p)
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--test")
    p.add_argument("--profile", choices=["paper", "tiny"])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--epochs", type=int)
    p.add_argument("--train-limit", type=int, help="use only the first N training sentences")
    return parser


def load_config_file(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_string("[lemmatag]\n" + f.read())
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in parser["lemmatag"].items()}


def _coerce(key, value):
    field = {f.name: f for f in dataclasses.fields(TrainConfig)}.get(key)
    if key in ("seed", "epochs"):
        return int(value)
    if field is None:
        return value
    if key == "decay_epochs":
        return tuple(int(v) for v in value.replace(",", " ").split())
    return type(field.default)(value)


def resolve(args):
    """Merge config file, flags and defaults into one flat dict."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        for key, value in load_config_file(args.config).items():
            try:
                settings[key] = _coerce(key, value)
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
    for key, value in vars(args).items():
        if value is not None and key != "config":
            settings[key] = value
    return settings


def _train_config(settings):
    overrides = {k: settings[k] for k in TRAIN_KEYS if k in settings}
    try:
        return TrainConfig.profile(settings["profile"], mode=settings["mode"], **overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _require(settings, *keys):
    for key in keys:
        if not settings.get(key):
            raise UsageError(f"--{key.replace('_', '-')} is required")


def _read(settings, key, require_gold=True):
    path = settings[key]
    if not os.path.isfile(path):
        raise DataError(f"{key} file not found: {path}")
    sentences = read_corpus(path, settings["format"], settings["tag_column"], require_gold)
    if not sentences:
        raise DataError(f"{key} file contains no sentences: {path}")
    return sentences


def _emit(record, stream):
    line = json.dumps(record, sort_keys=True)
    print(line, flush=True)
    if stream is not None:
        stream.write(line + "\n")
        stream.flush()


def cmd_train(settings):
    _require(settings, "train", "model")
    config = _train_config(settings)
    try:
        tau = parse_schema(settings.get("schema", "unfactored"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train = _read(settings, "train")
    dev = _read(settings, "dev") if settings.get("dev") else None
    vocabs = build_vocabularies(train, config.min_word_freq, tau=tau)
    if dev:
        vocabs.tags.check(dev)
    trainer = Trainer(vocabs, config, seed=settings["seed"])
    metrics_path = settings.get("out") or settings["model"] + ".metrics.jsonl"
    with open(metrics_path, "w", encoding="utf-8") as stream:
        history = trainer.fit(train, dev, epochs=settings.get("epochs"),
                              on_epoch=lambda r: _emit(r, stream))
    save_checkpoint(trainer, settings["model"])
    if settings.get("figures"):
        from .plotting import render_history
        render_history(history, settings["figures"])
    return 0


def _load(settings):
    _require(settings, "model")
    if not os.path.isfile(settings["model"]):
        raise DataError(f"model file not found: {settings['model']}")
    trainer = load_checkpoint(settings["model"])
    schema = trainer.vocabs.tags
    if settings.get("schema") and settings["schema"] != schema.spec:
        raise DataError(f"schema {settings['schema']} does not match checkpoint schema {schema.spec}")
    return trainer


def cmd_eval(settings):
    _require(settings, "test")
    trainer = _load(settings)
    test = _read(settings, "test")
    trainer.vocabs.tags.check(test)
    metrics = evaluate(trainer.model, test)
    report = metrics.to_dict()
    for key in ("tag_accuracy", "lemma_accuracy", "lemma_accuracy_sense_insensitive"):
        value = report[key]
        print(f"{key}\t{'n/a' if value is None else f'{value:.4f}'}")
    for j, acc in enumerate(report["component_accuracy"], start=1):
        print(f"component_{j}_accuracy\t{acc:.4f}")
    print(f"empty_lemmas\t{report['empty_lemmas']}")
    print(f"tokens\t{report['tokens']}")
    if settings.get("out"):
        with open(settings["out"], "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    return 0


def cmd_predict(settings):
    _require(settings, "test", "out")
    trainer = _load(settings)
    sentences = _read(settings, "test", require_gold=False)
    predicted, _ = predict_corpus(trainer.model, sentences)
    write_corpus(settings["out"], predicted, settings["format"], settings["tag_column"])
    return 0


def cmd_report(settings):
    from .plotting import read_metrics, render_history

    if not os.path.isfile(settings["metrics"]):
        raise DataError(f"metrics file not found: {settings['metrics']}")
    for path in render_history(read_metrics(settings["metrics"]), settings["out"]):
        print(path)
    return 0


def cmd_compare(settings):
    from .plotting import plot_comparison

    _require(settings, "train", "dev", "out")
    try:
        tau = parse_schema(settings.get("schema", "unfactored"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train = _read(settings, "train")
    if settings.get("train_limit"):
        train = train[:settings["train_limit"]]
    dev = _read(settings, "dev")
    test = _read(settings, "test") if settings.get("test") else dev
    os.makedirs(settings["out"], exist_ok=True)
    rows = []
    for seed in settings["seeds"]:
        row = {"seed": seed}
        for mode in ("joint", "separate"):
            config = _train_config({**settings, "mode": mode})
            vocabs = build_vocabularies(train, config.min_word_freq, tau=tau)
            trainer = Trainer(vocabs, config, seed=seed)
            trainer.fit(train, dev, epochs=settings.get("epochs"))
            m = evaluate(trainer.model, test)
            row[f"{mode}_tag"], row[f"{mode}_lemma"] = m.tag_accuracy, m.lemma_accuracy
        row["delta_tag"] = row["joint_tag"] - row["separate_tag"]
        row["delta_lemma"] = row["joint_lemma"] - row["separate_lemma"]
        row["sign_tag"] = (row["delta_tag"] > 0) - (row["delta_tag"] < 0)
        row["sign_lemma"] = (row["delta_lemma"] > 0) - (row["delta_lemma"] < 0)
        _emit(row, None)
        rows.append(row)
    columns = list(rows[0])
    with open(os.path.join(settings["out"], "comparison.tsv"), "w", encoding="utf-8") as f:
        f.write("\t".join(columns) + "\n")
        for row in rows:
            f.write("\t".join(str(row[c]) for c in columns) + "\n")
    plot_comparison(rows, os.path.join(settings["out"], "comparison.png"))
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "predict": cmd_predict,
            "report": cmd_report, "compare": cmd_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](resolve(args))
    except UsageError as exc:
        print(f"lemmatag: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorpusError, SchemaError, CheckpointError, OSError) as exc:
        print(f"lemmatag: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"lemmatag: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
