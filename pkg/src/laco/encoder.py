"""Tokenization, vocabulary, joint document-label packing, and a small
bidirectional transformer encoder.

The input layout packs one document together with the *entire* label
inventory: ``[CLS] x_1 .. x_m [SEP] y_1 .. y_n [SEP]``, segment 0 for the
document half and segment 1 for the label half.  Encoding the pair in one
pass lets self-attention mix word and label tokens freely, which is where
label-label and word-label interactions are learned.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import math

import numpy as np

from .autograd import (
    Tensor,
    add,
    gather_rows,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    sqrt,
    sub,
    tensor_mean,
    transpose,
)
from .config import ConfigError

PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN)
PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3

_LABEL_PREFIX = "[LABEL]"
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_token(token: str) -> str:
    """Lowercase and strip punctuation characters; may produce ''."""
    return token.lower().translate(_PUNCT_TABLE)


class Vocab:
    """Token inventory: specials, then corpus words, then one id per label.

    Label ids form a contiguous block at the top of the id range, disjoint
    from word ids, so ablations that never feed label tokens through the
    encoder can simply use a shorter embedding table.
    """

    def __init__(self, words: Sequence[str], labels: Sequence[str]):
        if not labels:
            raise ConfigError("label space is empty")
        if len(set(labels)) != len(labels):
            raise ConfigError("duplicate label names in label space")
        for name in labels:
            if not name or any(ch.isspace() for ch in name):
                raise ConfigError(f"invalid label name {name!r}")
        self._words = list(words)
        self._labels = list(labels)
        self._word_ids = {w: i + len(SPECIAL_TOKENS) for i, w in enumerate(self._words)}
        base = len(SPECIAL_TOKENS) + len(self._words)
        self._label_ids = {name: base + i for i, name in enumerate(self._labels)}
        self.label_base = base

    @property
    def size(self) -> int:
        return len(SPECIAL_TOKENS) + len(self._words) + len(self._labels)

    @property
    def word_rows(self) -> int:
        """Embedding rows needed when label tokens are never encoded."""
        return len(SPECIAL_TOKENS) + len(self._words)

    @property
    def n_labels(self) -> int:
        return len(self._labels)

    @property
    def label_names(self) -> tuple[str, ...]:
        return tuple(self._labels)

    @property
    def label_ids(self) -> range:
        return range(self.label_base, self.label_base + len(self._labels))

    def word_id(self, token: str) -> int:
        return self._word_ids.get(normalize_token(token), UNK_ID)

    def label_id(self, name: str) -> int:
        return self._label_ids[name]

    def label_index(self, name: str) -> int:
        """Position of a label inside the ordered label block."""
        return self._label_ids[name] - self.label_base

    def encode_document(self, tokens: Iterable[str]) -> list[int]:
        """Map raw tokens to ids; tokens that normalize away are dropped."""
        ids = []
        for tok in tokens:
            norm = normalize_token(tok)
            if not norm:
                continue
            ids.append(self._word_ids.get(norm, UNK_ID))
        return ids

    def save(self, path) -> None:
        """One token per line, line number = id; label lines are prefixed."""
        with open(path, "w", encoding="utf-8") as fh:
            for tok in SPECIAL_TOKENS:
                fh.write(tok + "\n")
            for word in self._words:
                fh.write(word + "\n")
            for name in self._labels:
                fh.write(_LABEL_PREFIX + name + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.rstrip("\n") for line in fh]
        return cls.from_lines(lines, origin=str(path))

    @classmethod
    def from_lines(cls, lines: Sequence[str], origin: str = "<vocab>") -> "Vocab":
        if tuple(lines[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ConfigError(f"{origin}: missing or reordered special tokens")
        words, labels = [], []
        for line in lines[len(SPECIAL_TOKENS):]:
            if line.startswith(_LABEL_PREFIX):
                labels.append(line[len(_LABEL_PREFIX):])
            else:
                if labels:
                    raise ConfigError(f"{origin}: word entry after label block")
                words.append(line)
        return cls(words, labels)

    def to_lines(self) -> list[str]:
        lines = list(SPECIAL_TOKENS)
        lines.extend(self._words)
        lines.extend(_LABEL_PREFIX + name for name in self._labels)
        return lines


def build_vocab(instances, label_space: Sequence[str], min_freq: int = 1) -> Vocab:
    """Count normalized word tokens over a corpus and keep the frequent ones.

    Words below `min_freq` map to [UNK].  Every label in `label_space`
    gets a dedicated token regardless of its surface form.
    """
    if not label_space:
        raise ConfigError("label space is empty")
    counts: Counter[str] = Counter()
    for inst in instances:
        for tok in inst.text:
            norm = normalize_token(tok)
            if norm:
                counts[norm] += 1
    kept = [w for w, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda w: (-counts[w], w))
    return Vocab(kept, list(label_space))


@dataclass
class JointSequence:
    """A packed encoder input with document and label span bookkeeping.

    `n_real` is the count of content tokens; positions at or beyond it
    are padding and are masked out of attention by position, so the ids
    stored there can never influence the encoder output.
    """

    token_ids: np.ndarray
    segment_ids: np.ndarray
    doc_span: range
    label_span: range
    n_real: int

    def __len__(self) -> int:
        return int(self.token_ids.shape[0])


def pack(instance, vocab: Vocab, max_len: int, pad_to: int | None = None,
         include_labels: bool = True) -> JointSequence:
    """Pack a document (and, by default, the full label block) for encoding.

    The document is truncated from the right so the label block always
    fits; `pad_to` appends [PAD] tokens for fixed-length batching.
    """
    n = vocab.n_labels if include_labels else 0
    overhead = 3 if include_labels else 2
    budget = max_len - n - overhead
    if budget < 0:
        raise ConfigError(
            f"max_len={max_len} cannot fit {n} label tokens plus special tokens"
        )
    doc_ids = vocab.encode_document(instance.text)[:budget]
    ids = [CLS_ID, *doc_ids, SEP_ID]
    segments = [0] * len(ids)
    doc_span = range(1, 1 + len(doc_ids))
    if include_labels:
        start = len(ids)
        ids.extend(vocab.label_ids)
        ids.append(SEP_ID)
        segments.extend([1] * (n + 1))
        label_span = range(start, start + n)
    else:
        label_span = range(0, 0)
    n_real = len(ids)
    if pad_to is not None:
        if pad_to < n_real:
            raise ConfigError(f"pad_to={pad_to} shorter than packed length {n_real}")
        if pad_to > max_len:
            raise ConfigError(f"pad_to={pad_to} exceeds max_len={max_len}")
        pad = pad_to - n_real
        ids.extend([PAD_ID] * pad)
        segments.extend([0] * pad)
    return JointSequence(
        token_ids=np.asarray(ids, dtype=np.intp),
        segment_ids=np.asarray(segments, dtype=np.intp),
        doc_span=doc_span,
        label_span=label_span,
        n_real=n_real,
    )


@dataclass(frozen=True)
class EncoderDims:
    """Structural sizes of the encoder stack; ff width is fixed at 4x hidden."""

    layers: int
    heads: int
    hidden: int
    max_len: int

    def __post_init__(self):
        if self.hidden % self.heads != 0:
            raise ConfigError(
                f"hidden={self.hidden} must be divisible by heads={self.heads}"
            )

    @property
    def ff(self) -> int:
        return 4 * self.hidden


def init_encoder_params(params, dims: EncoderDims, vocab_rows: int,
                        n_segments: int, rng: np.random.Generator,
                        std: float = 0.02) -> None:
    """Add embedding and layer weights: N(0, std) matrices, zero biases,
    layer-norm scale 1 / shift 0."""
    k = dims.hidden
    params.add("emb.tok", rng.normal(0.0, std, (vocab_rows, k)))
    params.add("emb.pos", rng.normal(0.0, std, (dims.max_len, k)))
    params.add("emb.seg", rng.normal(0.0, std, (n_segments, k)))
    for layer in range(dims.layers):
        prefix = f"enc{layer}"
        for name in ("wq", "wk", "wv", "wo"):
            params.add(f"{prefix}.attn.{name}", rng.normal(0.0, std, (k, k)))
        for name in ("bq", "bk", "bv", "bo"):
            params.add(f"{prefix}.attn.{name}", np.zeros(k))
        params.add(f"{prefix}.ln1.scale", np.ones(k))
        params.add(f"{prefix}.ln1.shift", np.zeros(k))
        params.add(f"{prefix}.ff.w1", rng.normal(0.0, std, (k, dims.ff)))
        params.add(f"{prefix}.ff.b1", np.zeros(dims.ff))
        params.add(f"{prefix}.ff.w2", rng.normal(0.0, std, (dims.ff, k)))
        params.add(f"{prefix}.ff.b2", np.zeros(k))
        params.add(f"{prefix}.ln2.scale", np.ones(k))
        params.add(f"{prefix}.ln2.shift", np.zeros(k))


def layer_norm(x: Tensor, scale: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    mu = tensor_mean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = tensor_mean(mul(centered, centered), axis=-1, keepdims=True)
    inv = 1.0 / sqrt(add(var, eps))
    return add(mul(mul(centered, inv), scale), shift)


def _attention(x: Tensor, params, prefix: str, dims: EncoderDims,
               mask: Tensor | None, seq_len: int) -> Tensor:
    k, n_heads = dims.hidden, dims.heads
    head_dim = k // n_heads
    q = add(matmul(x, params[f"{prefix}.wq"]), params[f"{prefix}.bq"])
    key = add(matmul(x, params[f"{prefix}.wk"]), params[f"{prefix}.bk"])
    v = add(matmul(x, params[f"{prefix}.wv"]), params[f"{prefix}.bv"])
    qh = transpose(reshape(q, (seq_len, n_heads, head_dim)), (1, 0, 2))
    kh = transpose(reshape(key, (seq_len, n_heads, head_dim)), (1, 0, 2))
    vh = transpose(reshape(v, (seq_len, n_heads, head_dim)), (1, 0, 2))
    scores = mul(matmul(qh, transpose(kh, (0, 2, 1))), 1.0 / math.sqrt(head_dim))
    if mask is not None:
        scores = add(scores, mask)
    attn = softmax(scores, axis=-1)
    ctx = matmul(attn, vh)
    merged = reshape(transpose(ctx, (1, 0, 2)), (seq_len, k))
    return add(matmul(merged, params[f"{prefix}.wo"]), params[f"{prefix}.bo"])


def encode(seq: JointSequence, params, dims: EncoderDims):
    """Run the encoder stack; returns (h_cls, H_D, H_Y or None).

    Padding positions contribute exactly zero attention weight: the
    additive -1e9 mask underflows to 0.0 after the softmax in float64,
    so a padded token id can never influence any returned row.
    """
    ids = seq.token_ids
    seq_len = int(ids.shape[0])
    if seq_len > dims.max_len:
        raise ConfigError(f"sequence length {seq_len} exceeds max_len {dims.max_len}")
    x = add(
        add(gather_rows(params["emb.tok"], ids), params["emb.pos"][0:seq_len]),
        gather_rows(params["emb.seg"], seq.segment_ids),
    )
    mask = None
    if seq.n_real < seq_len:
        pads = np.arange(seq_len) >= seq.n_real
        mask = Tensor(np.where(pads, -1e9, 0.0).reshape(1, 1, seq_len))
    for layer in range(dims.layers):
        attn_out = _attention(x, params, f"enc{layer}.attn", dims, mask, seq_len)
        x = layer_norm(
            add(x, attn_out),
            params[f"enc{layer}.ln1.scale"],
            params[f"enc{layer}.ln1.shift"],
        )
        hidden = relu(add(matmul(x, params[f"enc{layer}.ff.w1"]),
                          params[f"enc{layer}.ff.b1"]))
        ff_out = add(matmul(hidden, params[f"enc{layer}.ff.w2"]),
                     params[f"enc{layer}.ff.b2"])
        x = layer_norm(
            add(x, ff_out),
            params[f"enc{layer}.ln2.scale"],
            params[f"enc{layer}.ln2.shift"],
        )
    h_cls = x[0]
    h_doc = x[seq.doc_span.start : seq.doc_span.stop]
    h_labels = None
    if len(seq.label_span):
        h_labels = x[seq.label_span.start : seq.label_span.stop]
    return h_cls, h_doc, h_labels
