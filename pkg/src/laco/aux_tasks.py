"""Auxiliary label co-occurrence tasks.

Two heads share the encoder's label representations:

  * pairwise prediction -- given an ordered pair of label vectors,
    predict whether both labels belong to the instance's relevant set
    (second-order signal);
  * conditional prediction -- given the mean vector of a sampled subset
    of the relevant labels, score every remaining label for membership
    in the rest of the relevant set (high-order signal).

Both samplers take an explicit random generator and are deterministic
for a fixed seed and instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autograd import (
    Tensor,
    add,
    binary_cross_entropy,
    concat,
    gather_rows,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    tensor_mean,
)
from .config import ConfigError, normalize_mode


@dataclass(frozen=True)
class PlcpSample:
    """One pair draw: `given` comes from the relevant set, `queried` is
    scored for co-occurrence with it (1 = IsCo-occur, 0 = NotCo-occur)."""

    given: int
    queried: int
    target: int


def sample_plcp(y_plus, y_minus, gamma: float, rng: np.random.Generator,
                count: int = 4) -> list[PlcpSample]:
    """Draw `count` pairs with IsCo-occur : NotCo-occur odds of gamma : 1.

    With fewer than two relevant labels only NotCo-occur pairs exist;
    with an empty irrelevant set only IsCo-occur pairs exist.  If neither
    kind is possible the sample list is empty.
    """
    pos = sorted(y_plus)
    neg = sorted(y_minus)
    if not pos:
        raise ValueError("sample_plcp needs at least one relevant label")
    can_pos = len(pos) >= 2
    can_neg = len(neg) >= 1
    if not can_pos and not can_neg:
        return []
    p_pos = gamma / (1.0 + gamma)
    samples = []
    for _ in range(count):
        if can_pos and (not can_neg or rng.random() < p_pos):
            i, j = rng.choice(len(pos), size=2, replace=False)
            samples.append(PlcpSample(pos[int(i)], pos[int(j)], 1))
        else:
            i = int(rng.integers(len(pos)))
            j = int(rng.integers(len(neg)))
            samples.append(PlcpSample(pos[i], neg[j], 0))
    return samples


def plcp_loss(h_labels: Tensor, samples: Sequence[PlcpSample], w: Tensor,
              b: Tensor, symmetric: bool = False) -> Tensor:
    """Mean BCE over the instance's sampled pairs.

    The head scores the ordered concatenation [h_given; h_queried]; the
    `symmetric` option averages the logits of both orders instead.
    """
    if not samples:
        raise ValueError("plcp_loss needs at least one sample")
    given = gather_rows(h_labels, [s.given for s in samples])
    queried = gather_rows(h_labels, [s.queried for s in samples])
    w_col = reshape(w, (-1, 1))
    logits = matmul(concat([given, queried], axis=1), w_col)
    if symmetric:
        swapped = matmul(concat([queried, given], axis=1), w_col)
        logits = mul(add(logits, swapped), 0.5)
    probs = sigmoid(add(reshape(logits, (len(samples),)), b))
    targets = np.array([s.target for s in samples], dtype=np.float64)
    return binary_cross_entropy(probs, targets, reduction="mean")


@dataclass(frozen=True)
class ClcpSample:
    """A conditioning subset and the positions it leaves to be scored.

    `given` holds the sampled relevant labels (the zero positions of the
    position vector); `scored` holds every other label index ascending;
    `targets[i]` is 1 iff `scored[i]` is relevant but not given.
    """

    given: tuple[int, ...]
    scored: tuple[int, ...]
    targets: tuple[int, ...]

    def position_mask(self, n_labels: int) -> np.ndarray:
        mask = np.ones(n_labels, dtype=np.int64)
        mask[list(self.given)] = 0
        return mask


def sample_clcp(y_plus, n_labels: int, rng: np.random.Generator) -> ClcpSample | None:
    """Pick a uniform subset size s in {1, .., |Y+|-1}, then a uniform
    s-subset of the relevant labels.  Returns None when |Y+| < 2 (the
    task is skipped for single-label instances)."""
    pos = sorted(y_plus)
    if len(pos) < 2:
        return None
    s = int(rng.integers(1, len(pos)))
    chosen = rng.choice(len(pos), size=s, replace=False)
    given = sorted(pos[int(i)] for i in chosen)
    given_set = set(given)
    pos_set = set(pos)
    scored = tuple(i for i in range(n_labels) if i not in given_set)
    targets = tuple(1 if i in pos_set else 0 for i in scored)
    return ClcpSample(tuple(given), scored, targets)


def clcp_loss(h_labels: Tensor, sample: ClcpSample, w_hidden: Tensor,
              b_hidden: Tensor, w_out: Tensor, b_out: Tensor) -> Tensor:
    """Summed BCE over every scored (nonzero-position) label.

    The conditioning vector is the mean of the given labels' rows,
    concatenated to each scored label's row and passed through a small
    two-layer scorer (ReLU hidden, sigmoid output).  The hidden layer
    matters: a purely linear scorer pushes every scored representation
    along one weight direction and measurably collapses the label space
    into a single relevance axis, destroying the geometry the
    compatibility matrix depends on.
    """
    given = gather_rows(h_labels, list(sample.given))
    h_given = tensor_mean(given, axis=0, keepdims=True)
    tiled = matmul(Tensor(np.ones((len(sample.scored), 1))), h_given)
    scored = gather_rows(h_labels, list(sample.scored))
    feats = concat([tiled, scored], axis=1)
    hidden = relu(add(matmul(feats, w_hidden), b_hidden))
    logits = reshape(matmul(hidden, reshape(w_out, (-1, 1))),
                     (len(sample.scored),))
    probs = sigmoid(add(logits, b_out))
    targets = np.array(sample.targets, dtype=np.float64)
    return binary_cross_entropy(probs, targets, reduction="sum")


def combined_loss(l_mlc: Tensor, l_plcp: Tensor | None = None,
                  l_clcp: Tensor | None = None, alpha: float | None = None,
                  mode: str = "mlc") -> Tensor:
    """Combine the task losses according to the training mode.

    mlc: the classification loss alone; +plcp / +clcp add the auxiliary
    loss unweighted; +both uses alpha * plcp + (1 - alpha) * clcp.
    Missing auxiliary losses (skipped instances) contribute nothing.
    """
    mode = normalize_mode(mode)
    if mode == "mlc":
        return l_mlc
    if mode == "+plcp":
        return l_mlc if l_plcp is None else add(l_mlc, l_plcp)
    if mode == "+clcp":
        return l_mlc if l_clcp is None else add(l_mlc, l_clcp)
    if alpha is None or not 0.0 < alpha < 1.0:
        raise ConfigError("mode +both requires alpha in (0, 1)")
    out = l_mlc
    if l_plcp is not None:
        out = add(out, mul(l_plcp, alpha))
    if l_clcp is not None:
        out = add(out, mul(l_clcp, 1.0 - alpha))
    return out
