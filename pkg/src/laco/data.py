"""Corpus ingestion, dataset statistics, batching, and a synthetic
corpus generator with planted label co-occurrence structure.

File format: one document per line, UTF-8, two tab-separated fields --
field 1 the space-separated label names, field 2 the raw text.  The
label space is ordered lexicographically and fixed at load time; every
label vector in the package uses that order.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class CorpusFormatError(ValueError):
    """A corpus file violates the line-record format."""


@dataclass(frozen=True)
class Instance:
    """One document: its whitespace tokens and its relevant label set."""

    text: tuple[str, ...]
    labels: frozenset[str]


@dataclass
class Corpus:
    """An ordered label space plus disjoint train/valid/test splits."""

    label_space: list[str]
    train: list[Instance] = field(default_factory=list)
    valid: list[Instance] = field(default_factory=list)
    test: list[Instance] = field(default_factory=list)

    def __post_init__(self):
        self.label_index = {name: i for i, name in enumerate(self.label_space)}

    @property
    def n_labels(self) -> int:
        return len(self.label_space)

    def all_instances(self) -> list[Instance]:
        return [*self.train, *self.valid, *self.test]

    def y_vector(self, instance: Instance) -> np.ndarray:
        vec = np.zeros(self.n_labels)
        for name in instance.labels:
            vec[self.label_index[name]] = 1.0
        return vec


def read_instances(path) -> list[Instance]:
    """Parse one split file; errors name the offending line."""
    instances = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            record = line.rstrip("\n")
            if not record:
                continue
            if "\t" not in record:
                raise CorpusFormatError(
                    f"{path}:{lineno}: missing tab separator between labels and text"
                )
            label_field, _, text_field = record.partition("\t")
            labels = label_field.split()
            if not labels:
                raise CorpusFormatError(f"{path}:{lineno}: empty label set")
            instances.append(
                Instance(text=tuple(text_field.split()), labels=frozenset(labels))
            )
    if not instances:
        raise CorpusFormatError(f"{path}: no records found")
    return instances


def write_instances(path, instances: Iterable[Instance]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(" ".join(sorted(inst.labels)) + "\t" + " ".join(inst.text) + "\n")


def load_corpus(train_path, valid_path=None, test_path=None,
                label_space: Sequence[str] | None = None) -> Corpus:
    """Load up to three splits; the label space is the lexicographically
    sorted union unless one is supplied, in which case unknown labels are
    a hard error listing the offenders."""
    train = read_instances(train_path)
    valid = read_instances(valid_path) if valid_path else []
    test = read_instances(test_path) if test_path else []
    everything = [*train, *valid, *test]
    seen = set()
    for inst in everything:
        seen.update(inst.labels)
    if label_space is None:
        space = sorted(seen)
    else:
        space = list(label_space)
        unknown = sorted(seen - set(space))
        if unknown:
            raise CorpusFormatError(
                f"labels outside the declared label space: {', '.join(unknown)}"
            )
    return Corpus(label_space=space, train=train, valid=valid, test=test)


@dataclass
class CorpusStats:
    n_docs: int
    n_labels: int
    mean_doc_len: float
    mean_labels: float
    label_freq: dict[str, int]
    n_combinations: int
    split_sizes: dict[str, int]

    def to_text(self) -> str:
        lines = [
            f"documents        {self.n_docs}",
            f"labels           {self.n_labels}",
            f"mean doc length  {self.mean_doc_len:.2f}",
            f"mean labels/doc  {self.mean_labels:.2f}",
            f"combinations     {self.n_combinations}",
            "splits           "
            + ", ".join(f"{k}={v}" for k, v in self.split_sizes.items() if v),
        ]
        return "\n".join(lines)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Table-style statistics over all splits combined."""
    instances = corpus.all_instances()
    if not instances:
        raise ValueError("corpus is empty")
    freq: Counter[str] = Counter()
    combos = set()
    total_len = 0
    total_labels = 0
    for inst in instances:
        total_len += len(inst.text)
        total_labels += len(inst.labels)
        freq.update(inst.labels)
        combos.add(inst.labels)
    return CorpusStats(
        n_docs=len(instances),
        n_labels=corpus.n_labels,
        mean_doc_len=total_len / len(instances),
        mean_labels=total_labels / len(instances),
        label_freq={name: freq.get(name, 0) for name in corpus.label_space},
        n_combinations=len(combos),
        split_sizes={
            "train": len(corpus.train),
            "valid": len(corpus.valid),
            "test": len(corpus.test),
        },
    )


def train_label_frequencies(corpus: Corpus) -> dict[str, int]:
    """Label occurrence counts over the training split only."""
    freq: Counter[str] = Counter()
    for inst in corpus.train:
        freq.update(inst.labels)
    return {name: freq.get(name, 0) for name in corpus.label_space}


# ---------------------------------------------------------------------------
# synthetic corpora


@dataclass
class SynthSpec:
    """Recipe for a corpus with known co-occurrence structure.

    Documents are generated label-set first: an anchor label is drawn
    from a power-law marginal profile (label 0 most frequent), then each
    other label joins with probability affinity[anchor, other].  Tokens
    mix the chosen labels' keywords with noise words.

    `rider_emission` scales how loudly non-anchor ("riding") labels
    speak in the text relative to the anchor (weight 1.0).  At 0.0 a
    riding label leaves no keyword trace at all, so its presence is
    recoverable only through its co-occurrence with the anchor -- the
    regime where correlation learning pays off.

    `confusable_groups` lists label-index groups that share one keyword
    vocabulary: their members are indistinguishable from their own
    tokens and can only be told apart by which other labels accompany
    them.  That plants a long-tail disambiguation problem whose answer
    is the co-occurrence structure itself.
    """

    n_labels: int
    affinity: np.ndarray
    power_exponent: float = 1.5
    keywords_per_label: int = 6
    doc_len: int = 20
    noise_rate: float = 0.2
    noise_vocab: int = 50
    rider_emission: float = 1.0
    confusable_groups: tuple = ()
    n_train: int = 1000
    n_valid: int = 100
    n_test: int = 100

    def __post_init__(self):
        self.affinity = np.asarray(self.affinity, dtype=np.float64)
        if self.affinity.shape != (self.n_labels, self.n_labels):
            raise ValueError(
                f"affinity must be {self.n_labels}x{self.n_labels}, "
                f"got {self.affinity.shape}"
            )
        if (self.affinity < 0).any() or (self.affinity > 1).any():
            raise ValueError("affinities must lie in [0, 1]")

    @property
    def label_names(self) -> list[str]:
        width = max(2, len(str(self.n_labels - 1)))
        return [f"l{i:0{width}d}" for i in range(self.n_labels)]

    def keyword(self, label: int, which: int) -> str:
        for gid, group in enumerate(self.confusable_groups):
            if label in group:
                return f"kwg{gid}w{which}"
        return f"kw{label:02d}w{which}"

    def noise_word(self, which: int) -> str:
        return f"zz{which:03d}"

    def anchor_profile(self) -> np.ndarray:
        ranks = np.arange(1, self.n_labels + 1, dtype=np.float64)
        weights = ranks ** (-self.power_exponent)
        return weights / weights.sum()


def generative_cooccurrence(spec: SynthSpec) -> np.ndarray:
    """Exact per-document presence probabilities implied by the recipe.

    Diagonal entries are single-label marginals P(i in Y); off-diagonal
    entries are joint probabilities P(i in Y and j in Y).
    """
    pi = spec.anchor_profile()
    aff = spec.affinity.copy()
    np.fill_diagonal(aff, 0.0)
    n = spec.n_labels
    table = np.zeros((n, n))
    for i in range(n):
        table[i, i] = pi[i] + sum(pi[a] * aff[a, i] for a in range(n) if a != i)
    for i in range(n):
        for j in range(i + 1, n):
            joint = pi[i] * aff[i, j] + pi[j] * aff[j, i]
            joint += sum(
                pi[a] * aff[a, i] * aff[a, j]
                for a in range(n)
                if a != i and a != j
            )
            table[i, j] = table[j, i] = joint
    return table


def empirical_cooccurrence(instances: Sequence[Instance],
                           label_space: Sequence[str]) -> np.ndarray:
    """Observed per-document presence and joint-presence frequencies."""
    idx = {name: i for i, name in enumerate(label_space)}
    n = len(label_space)
    table = np.zeros((n, n))
    for inst in instances:
        members = sorted(idx[name] for name in inst.labels)
        for a_pos, a in enumerate(members):
            table[a, a] += 1
            for b in members[a_pos + 1:]:
                table[a, b] += 1
                table[b, a] += 1
    return table / max(1, len(instances))


def generate_synthetic(spec: SynthSpec, seed: int) -> tuple[Corpus, np.ndarray]:
    """Deterministically generate a corpus; returns it with the exact
    generative co-occurrence table recorded alongside."""
    isolated = [
        i for i in range(spec.n_labels)
        if not spec.affinity[i].any() and not spec.affinity[:, i].any()
    ]
    expected_extra = float(spec.anchor_profile() @ spec.affinity.sum(axis=1))
    if isolated and expected_extra > 0:
        warnings.warn(
            f"{len(isolated)} label(s) have zero affinity everywhere and will "
            "only ever appear alone",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    names = spec.label_names
    pi = spec.anchor_profile()

    def one_document() -> Instance:
        anchor = int(rng.choice(spec.n_labels, p=pi))
        draws = rng.random(spec.n_labels)
        chosen = [anchor]
        for j in range(spec.n_labels):
            if j != anchor and draws[j] < spec.affinity[anchor, j]:
                chosen.append(j)
        chosen.sort()
        weights = np.array([1.0 if i == anchor else spec.rider_emission
                            for i in chosen])
        weights /= weights.sum()
        tokens = []
        for _ in range(spec.doc_len):
            if rng.random() < spec.noise_rate:
                tokens.append(spec.noise_word(int(rng.integers(spec.noise_vocab))))
            else:
                label = chosen[int(rng.choice(len(chosen), p=weights))]
                tokens.append(spec.keyword(label, int(rng.integers(spec.keywords_per_label))))
        return Instance(text=tuple(tokens), labels=frozenset(names[i] for i in chosen))

    train = [one_document() for _ in range(spec.n_train)]
    valid = [one_document() for _ in range(spec.n_valid)]
    test = [one_document() for _ in range(spec.n_test)]
    corpus = Corpus(label_space=list(names), train=train, valid=valid, test=test)
    return corpus, generative_cooccurrence(spec)


def planted_affinity(n_labels: int, strength: float = 0.7,
                     anchor_fraction: float = 0.25) -> np.ndarray:
    """A simple planted co-occurrence graph for desk-scale experiments.

    The most frequent quarter of labels (under the power-law profile)
    act as anchors; every non-anchor label rides on one anchor with the
    given strength, so rare labels co-occur predictably with common
    ones.  Anchors also link weakly to their neighbor anchor.
    """
    if n_labels < 2:
        raise ValueError("need at least two labels")
    n_anchors = max(1, int(round(anchor_fraction * n_labels)))
    aff = np.zeros((n_labels, n_labels))
    for j in range(n_anchors, n_labels):
        anchor = j % n_anchors
        aff[anchor, j] = strength
        aff[j, anchor] = strength
    for a in range(n_anchors - 1):
        aff[a, a + 1] = aff[a + 1, a] = strength / 4.0
    return aff


def write_truth_table(path, label_names: Sequence[str], table: np.ndarray) -> None:
    """Plain-text matrix with a header row of label names."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(label_names) + "\n")
        for row in table:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_truth_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        names = fh.readline().split()
        rows = [[float(v) for v in line.split()] for line in fh if line.strip()]
    return names, np.asarray(rows)


def batches(instances: Sequence[Instance], batch_size: int,
            shuffle_seed: int) -> list[list[Instance]]:
    """Deterministic shuffled batching; the final partial batch is kept."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = np.random.default_rng(shuffle_seed).permutation(len(instances))
    shuffled = [instances[i] for i in order]
    return [shuffled[i : i + batch_size] for i in range(0, len(shuffled), batch_size)]
