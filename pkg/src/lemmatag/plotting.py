"""Figures rendered from the per-epoch metrics stream and seed comparisons."""
import json
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def figsize(width=5.0):
    golden = (math.sqrt(5) - 1.0) / 2.0
    return width, width * golden


def read_metrics(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_losses(records, path):
    epochs = [r["epoch"] for r in records]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.plot(epochs, [r["loss"] for r in records], label="joint loss", color="k")
        ax.plot(epochs, [r["tag_loss"] for r in records], label="tagger (weighted)", ls="--")
        ax.plot(epochs, [r["lemma_loss"] for r in records], label="lemmatizer", ls=":")
        ax.set_xlabel("epoch")
        ax.set_ylabel("training loss")
        lr_ax = ax.twinx()
        lr_ax.step(epochs, [r["lr"] for r in records], where="post", color="0.6", lw=0.8)
        lr_ax.set_ylabel("learning rate", color="0.4")
        lr_ax.set_yscale("log")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_accuracy(records, path):
    dev = [(r["epoch"], r["dev"]) for r in records if r.get("dev")]
    if not dev:
        return None
    keys = [("tag_accuracy", "tag"), ("lemma_accuracy", "lemma"),
            ("lemma_accuracy_sense_insensitive", "lemma (no sense)")]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for key, label in keys:
            points = [(e, d[key]) for e, d in dev if d.get(key) is not None]
            if points:
                ax.plot(*zip(*points), label=label, marker=".", ms=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel("dev accuracy")
        ax.set_ylim(0, 1.02)
        ax.legend(loc="lower right")
        return _save(fig, path)


def render_history(records, out_dir, prefix=""):
    """Write loss and accuracy curves into `out_dir`; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = [plot_losses(records, os.path.join(out_dir, f"{prefix}loss.png"))]
    acc = plot_accuracy(records, os.path.join(out_dir, f"{prefix}accuracy.png"))
    if acc:
        written.append(acc)
    return written


def plot_comparison(rows, path):
    """Per-seed joint-minus-separate accuracy deltas as paired bars."""
    seeds = [str(r["seed"]) for r in rows]
    x = range(len(rows))
    width = 0.38
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        ax.bar([i - width / 2 for i in x], [100 * r["delta_tag"] for r in rows], width,
               label="tag")
        ax.bar([i + width / 2 for i in x], [100 * r["delta_lemma"] for r in rows], width,
               label="lemma")
        ax.axhline(0, color="k", lw=0.8)
        ax.set_xticks(list(x))
        ax.set_xticklabels(seeds)
        ax.set_xlabel("seed")
        ax.set_ylabel("joint - separate (accuracy points)")
        ax.legend()
        return _save(fig, path)
