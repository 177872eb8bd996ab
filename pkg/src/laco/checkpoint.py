"""Single-file binary checkpoints.

Layout: a UTF-8 text header (format tag, step counter, best validation
micro-F1, optimizer hyperparameters, config snapshot, inline vocabulary,
array manifest), a `DATA` sentinel line, then the raw little-endian
float64 buffers concatenated in manifest order.  Floats in the header
are written with `repr`, which round-trips exactly, so save -> load ->
save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .encoder import EncoderDims, Vocab
from .model import Model, ModelParams
from .optim import AdamState

_MAGIC = "LACO-CKPT 1"


class CheckpointError(ValueError):
    """A checkpoint file is malformed or inconsistent."""


@dataclass
class Checkpoint:
    """Everything needed to reproduce a model state bit-exactly."""

    params: dict[str, np.ndarray]
    adam: AdamState
    step: int
    best_micro_f1: float
    config: dict
    vocab: Vocab


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    manifest: list[tuple[str, str, np.ndarray]] = []
    for name, arr in ckpt.params.items():
        manifest.append((name, "param", arr))
    for name, arr in ckpt.adam.m.items():
        manifest.append((name, "adam_m", arr))
    for name, arr in ckpt.adam.v.items():
        manifest.append((name, "adam_v", arr))

    lines = [
        _MAGIC,
        f"step {ckpt.step}",
        f"best_micro_f1 {ckpt.best_micro_f1!r}",
        f"adam {ckpt.adam.lr!r} {ckpt.adam.beta1!r} {ckpt.adam.beta2!r} "
        f"{ckpt.adam.eps!r} {ckpt.adam.step}",
        "config " + json.dumps(ckpt.config, sort_keys=True),
    ]
    vocab_lines = ckpt.vocab.to_lines()
    lines.append(f"vocab {len(vocab_lines)}")
    lines.extend(vocab_lines)
    lines.append(f"arrays {len(manifest)}")
    offset = 0
    for name, group, arr in manifest:
        shape = ",".join(str(s) for s in arr.shape)
        lines.append(f"{name}\t{group}\t{shape}\t{offset}")
        offset += arr.size * 8
    lines.append("DATA")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        for _, _, arr in manifest:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        blob = fh.read()
    sentinel = b"\nDATA\n"
    cut = blob.find(sentinel)
    if cut < 0:
        raise CheckpointError(f"{path}: missing DATA sentinel")
    header = blob[:cut].decode("utf-8").split("\n")
    data = blob[cut + len(sentinel):]

    it = iter(header)
    if next(it) != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    step = int(_expect(it, "step"))
    best = float(_expect(it, "best_micro_f1"))
    adam_fields = _expect(it, "adam").split()
    config = json.loads(_expect(it, "config"))
    n_vocab = int(_expect(it, "vocab"))
    vocab_lines = [next(it) for _ in range(n_vocab)]
    vocab = Vocab.from_lines(vocab_lines, origin=f"{path}(vocab)")
    n_arrays = int(_expect(it, "arrays"))
    manifest = []
    for _ in range(n_arrays):
        name, group, shape_text, offset_text = next(it).split("\t")
        shape = tuple(int(s) for s in shape_text.split(",") if s)
        manifest.append((name, group, shape, int(offset_text)))

    adam = AdamState(
        lr=float(adam_fields[0]),
        beta1=float(adam_fields[1]),
        beta2=float(adam_fields[2]),
        eps=float(adam_fields[3]),
        step=int(adam_fields[4]),
    )
    params: dict[str, np.ndarray] = {}
    for name, group, shape, offset in manifest:
        count = int(np.prod(shape)) if shape else 1
        raw = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        arr = raw.reshape(shape).copy()
        if group == "param":
            params[name] = arr
        elif group == "adam_m":
            adam.m[name] = arr
        elif group == "adam_v":
            adam.v[name] = arr
        else:
            raise CheckpointError(f"{path}: unknown array group '{group}'")
    return Checkpoint(params=params, adam=adam, step=step, best_micro_f1=best,
                      config=config, vocab=vocab)


def _expect(lines, key: str) -> str:
    line = next(lines)
    if not line.startswith(key + " "):
        raise CheckpointError(f"expected '{key}' header line, got {line!r}")
    return line[len(key) + 1 :]


def model_from_checkpoint(ckpt: Checkpoint) -> Model:
    """Rebuild a model whose forward pass matches the saved one bit-exactly."""
    cfg = RunConfig.from_dict(ckpt.config).validate()
    params = ModelParams.from_arrays(ckpt.params)
    dims = EncoderDims(layers=cfg.layers, heads=cfg.heads, hidden=cfg.hidden,
                       max_len=cfg.max_len)
    return Model(cfg, ckpt.vocab, params, dims)
