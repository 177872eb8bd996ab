"""MLTC head: word-label compatibility, cross attention, classifier, loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import (
    Tensor,
    add,
    binary_cross_entropy,
    conv1d,
    matmul,
    relu,
    reshape,
    sigmoid,
    softmax,
    tanh,
    tensor_max,
    transpose,
)
from .config import ConfigError


@dataclass(frozen=True)
class Prediction:
    """Per-label probabilities and the thresholded label-index set."""

    probs: np.ndarray
    predicted: tuple[int, ...]


def compatibility(h_doc: Tensor, h_labels: Tensor) -> Tensor:
    """Word-label compatibility matrix: dot products of every (word, label)."""
    return matmul(h_doc, transpose(h_labels))


def cross_attention(compat: Tensor, h_doc: Tensor, conv_w: Tensor,
                    conv_b: Tensor, window: int):
    """Reduce the compatibility matrix to a label-aware document vector.

    Pipeline: same-length convolution over the word axis (label columns
    as input channels), ReLU, max-pool over the filter channel, tanh,
    then a softmax over words giving the attention distribution beta;
    the result is the beta-weighted average of the word vectors.

    An even window pads asymmetrically (window//2 left, the rest right).
    Returns (c, beta); an empty document yields a zero vector and
    beta=None so the caller can flag the degenerate case.
    """
    m = compat.shape[0]
    if m == 0:
        return Tensor(np.zeros(h_doc.shape[1])), None
    pad_left = window // 2
    pad_right = window - 1 - pad_left
    hidden = relu(conv1d(compat, conv_w, conv_b, pad_left, pad_right))
    scores = tanh(tensor_max(hidden, axis=1))
    beta = softmax(scores, axis=-1)
    c = reshape(matmul(reshape(beta, (1, m)), h_doc), (h_doc.shape[1],))
    return c, beta


def classifier_probs(rep: Tensor, w_cls: Tensor, b_cls: Tensor) -> Tensor:
    """Sigmoid classifier over a document representation: one prob per label."""
    logits = add(reshape(matmul(w_cls, reshape(rep, (-1, 1))), (w_cls.shape[0],)),
                 b_cls)
    return sigmoid(logits)


def predict(rep: Tensor, w_cls: Tensor, b_cls: Tensor, threshold: float) -> Prediction:
    """Threshold the classifier output; probs >= threshold are predicted.

    Empty predicted sets are allowed -- no minimum-size rule.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    probs = classifier_probs(rep, w_cls, b_cls).data
    predicted = tuple(int(i) for i in np.nonzero(probs >= threshold)[0])
    return Prediction(probs=probs, predicted=predicted)


def mlc_loss(probs: Tensor, gold) -> Tensor:
    """Binary cross entropy summed over the label axis (not averaged)."""
    return binary_cross_entropy(probs, gold, reduction="sum")
