"""Versioned binary checkpoint container.

Layout: 8-byte magic, u32 format version, u64 header length, UTF-8 JSON
header (config, vocabularies, tag schema, epoch, rng and optimizer counters,
tensor index), then the raw little-endian tensor blobs in index order.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .corpus import Vocabularies
from .trainer import TrainConfig, Trainer

MAGIC = b"LEMMATAG"
VERSION = 1
_PREFIX = struct.Struct("<8sIQ")


class CheckpointError(ValueError):
    pass


def _tensor_blobs(trainer):
    arrays = {f"param/{name}": p.data for name, p in trainer.model.named_parameters().items()}
    for opt in trainer.optimizers:
        arrays.update(opt.state_arrays())
    return arrays


def to_bytes(trainer):
    arrays = _tensor_blobs(trainer)
    index, blobs, offset = [], [], 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        dt = arr.dtype.newbyteorder("<")
        raw = arr.astype(dt, copy=False).tobytes()
        index.append({"name": name, "dtype": dt.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = {
        "config": trainer.config.to_dict(),
        "vocabs": trainer.vocabs.to_dict(),
        "seed": trainer.seed,
        "dtype": np.dtype(trainer.model.dtype).str,
        "epoch": trainer.epoch,
        "best_epoch": trainer.best_epoch,
        "adam_steps": [opt.t for opt in trainer.optimizers],
        "rng": trainer.rng_state(),
        "tensors": index,
    }
    head = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(head)) + head + b"".join(blobs)


def from_bytes(data):
    if len(data) < _PREFIX.size:
        raise CheckpointError("checkpoint truncated: missing header")
    magic, version, head_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"not a checkpoint file (bad magic {magic!r})")
    if version != VERSION:
        raise CheckpointError(f"checkpoint format version {version}, expected {VERSION}")
    start = _PREFIX.size + head_len
    if len(data) < start:
        raise CheckpointError("checkpoint truncated inside header")
    try:
        header = json.loads(data[_PREFIX.size:start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from None
    expected = start + sum(t["nbytes"] for t in header["tensors"])
    if len(data) != expected:
        raise CheckpointError(f"checkpoint truncated or padded: {len(data)} bytes, expected {expected}")

    arrays = {}
    for t in header["tensors"]:
        lo = start + t["offset"]
        arr = np.frombuffer(data[lo:lo + t["nbytes"]], dtype=np.dtype(t["dtype"]))
        arrays[t["name"]] = arr.reshape(t["shape"]).copy()

    config = TrainConfig.from_dict(header["config"])
    vocabs = Vocabularies.from_dict(header["vocabs"])
    trainer = Trainer(vocabs, config, seed=header["seed"], dtype=np.dtype(header["dtype"]))
    for name, p in trainer.model.named_parameters().items():
        key = f"param/{name}"
        if key not in arrays or arrays[key].shape != p.shape:
            raise CheckpointError(f"checkpoint tensor {key} missing or mis-shaped")
        p.data = arrays[key].astype(p.dtype)
    for opt, t in zip(trainer.optimizers, header["adam_steps"]):
        opt.load_state_arrays(arrays, t)
    trainer.epoch = header["epoch"]
    trainer.best_epoch = header["best_epoch"]
    trainer.set_rng_state(header["rng"])
    return trainer


def save_checkpoint(trainer, path):
    with open(path, "wb") as f:
        f.write(to_bytes(trainer))


def load_checkpoint(path):
    with open(path, "rb") as f:
        return from_bytes(f.read())
