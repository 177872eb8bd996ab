"""Multi-label metrics and label-correlation analytics.

Covers hamming loss, micro/macro precision-recall-F1, subset accuracy,
predicted-combination diversity, frequency-group macro-F1, and the
conditional KL distance between two label-set collections' induced
pairwise conditional distributions.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence


class PredFileError(ValueError):
    """A prediction file violates its format or label-space contract."""


@dataclass
class PredFile:
    """Aligned gold and predicted label sets over one label space."""

    label_space: list[str]
    gold: list[frozenset[str]]
    pred: list[frozenset[str]]

    def __post_init__(self):
        if len(self.gold) != len(self.pred):
            raise PredFileError(
                f"gold and predicted lists differ in length: "
                f"{len(self.gold)} vs {len(self.pred)}"
            )
        space = set(self.label_space)
        for row, (g, p) in enumerate(zip(self.gold, self.pred), start=1):
            stray = (g | p) - space
            if stray:
                raise PredFileError(
                    f"row {row}: labels outside the label space: {sorted(stray)}"
                )

    def __len__(self) -> int:
        return len(self.gold)

    @classmethod
    def load(cls, path, label_space: Sequence[str] | None = None) -> "PredFile":
        """One line per document: gold labels TAB predicted labels, each
        field space-separated; either field may be empty."""
        gold, pred = [], []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                record = line.rstrip("\n")
                if not record:
                    continue
                if "\t" not in record:
                    raise PredFileError(f"{path}:{lineno}: missing tab separator")
                g, _, p = record.partition("\t")
                gold.append(frozenset(g.split()))
                pred.append(frozenset(p.split()))
        if label_space is None:
            seen = set()
            for s in gold + pred:
                seen.update(s)
            label_space = sorted(seen)
        return cls(label_space=list(label_space), gold=gold, pred=pred)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for g, p in zip(self.gold, self.pred):
                fh.write(" ".join(sorted(g)) + "\t" + " ".join(sorted(p)) + "\n")


def hamming_loss(pf: PredFile) -> float:
    """Fraction of wrong individual label decisions over N * n slots."""
    if not len(pf):
        raise PredFileError("empty prediction file")
    disagreements = sum(len(g ^ p) for g, p in zip(pf.gold, pf.pred))
    return disagreements / (len(pf) * len(pf.label_space))


def per_label_counts(pf: PredFile) -> dict[str, tuple[int, int, int]]:
    """(tp, fp, fn) tallies per label, in label-space order."""
    counts = {name: [0, 0, 0] for name in pf.label_space}
    for g, p in zip(pf.gold, pf.pred):
        for name in p & g:
            counts[name][0] += 1
        for name in p - g:
            counts[name][1] += 1
        for name in g - p:
            counts[name][2] += 1
    return {name: tuple(v) for name, v in counts.items()}


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    # 0/0 resolves to 0: a never-predicted label scores zero precision.
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class MicroMacro:
    micro_p: float
    micro_r: float
    micro_f1: float
    macro_p: float
    macro_r: float
    macro_f1: float


def micro_macro(pf: PredFile) -> MicroMacro:
    """Micro scores from pooled tallies; macro as the unweighted label mean."""
    if not len(pf):
        raise PredFileError("empty prediction file")
    counts = per_label_counts(pf)
    tp = sum(c[0] for c in counts.values())
    fp = sum(c[1] for c in counts.values())
    fn = sum(c[2] for c in counts.values())
    micro = _prf(tp, fp, fn)
    per_label = [_prf(*counts[name]) for name in pf.label_space]
    n = len(pf.label_space)
    macro = tuple(sum(v[i] for v in per_label) / n for i in range(3))
    return MicroMacro(*micro, *macro)


def subset_acc_and_diversity(pf: PredFile) -> tuple[float, int]:
    """(exact-match fraction, number of distinct predicted label sets)."""
    if not len(pf):
        raise PredFileError("empty prediction file")
    exact = sum(1 for g, p in zip(pf.gold, pf.pred) if g == p)
    return exact / len(pf), len(set(pf.pred))


def mass_group_boundaries(freq: Mapping[str, int], n_groups: int = 4) -> list[int]:
    """Rank-cut indices so each group covers ~1/n_groups of occurrence mass.

    Labels are ranked by descending frequency; label r joins group g when
    its cumulative mass *before* it has passed g/n_groups of the total.
    Integer arithmetic keeps the cuts exact.
    """
    ranked = sorted(freq, key=lambda name: (-freq[name], name))
    total = sum(freq.values())
    cuts = []
    running = 0
    group = 0
    for rank, name in enumerate(ranked):
        while group + 1 < n_groups and n_groups * running >= (group + 1) * total:
            cuts.append(rank)
            group += 1
        running += freq[name]
    while len(cuts) < n_groups - 1:
        cuts.append(len(ranked))
    return cuts


@dataclass(frozen=True)
class GroupScore:
    labels: tuple[str, ...]
    macro_f1: float


def frequency_groups(freq: Mapping[str, int], pf: PredFile,
                     boundaries: Sequence[int] | None = None,
                     n_groups: int = 4) -> dict[int, GroupScore]:
    """Macro-F1 within frequency-ranked label groups (group 1 = most frequent).

    `boundaries` gives explicit rank cuts; the default splits so each
    group carries about a quarter of the training occurrence mass.
    Groups that end up with zero labels are omitted from the result.
    """
    ranked = sorted(freq, key=lambda name: (-freq[name], name))
    cuts = list(boundaries) if boundaries is not None else mass_group_boundaries(freq, n_groups)
    if len(cuts) != n_groups - 1 or sorted(cuts) != cuts:
        raise ValueError(f"boundaries must be {n_groups - 1} ascending rank cuts")
    edges = [0, *cuts, len(ranked)]
    counts = per_label_counts(pf)
    out: dict[int, GroupScore] = {}
    for g in range(n_groups):
        members = ranked[edges[g] : edges[g + 1]]
        if not members:
            continue
        scores = [_prf(*counts[name])[2] for name in members]
        out[g + 1] = GroupScore(tuple(members), sum(scores) / len(members))
    return out


def _cooccurrence_counts(sets: Sequence[frozenset[str]]):
    singles: Counter[str] = Counter()
    pairs: Counter[tuple[str, str]] = Counter()
    for s in sets:
        members = sorted(s)
        singles.update(members)
        for a, b in combinations(members, 2):
            pairs[(a, b)] += 1
    return singles, pairs


def conditional_kl(reference_sets: Sequence[frozenset[str]],
                   model_sets: Sequence[frozenset[str]],
                   epsilon: float = 1e-6) -> float:
    """KL distance between pairwise conditional co-occurrence distributions.

    For every ordered pair (a, b) that co-occurs in the reference, the
    conditional p(b|a) = #(a,b) / #(a) is compared between reference and
    model; model-side zero probabilities are floored at `epsilon`.
    A reference without any co-occurring pair scores 0 by convention.
    """
    ref_singles, ref_pairs = _cooccurrence_counts(reference_sets)
    mod_singles, mod_pairs = _cooccurrence_counts(model_sets)
    if not ref_pairs:
        warnings.warn("reference contains no co-occurring label pair; KL = 0",
                      stacklevel=2)
        return 0.0
    total = 0.0
    for (a, b), joint in sorted(ref_pairs.items()):
        for x, y in ((a, b), (b, a)):
            p_ref = joint / ref_singles[x]
            if mod_singles.get(x, 0) > 0:
                p_mod = mod_pairs.get((a, b), 0) / mod_singles[x]
            else:
                p_mod = 0.0
            total += p_ref * math.log(p_ref / max(p_mod, epsilon))
    return total


@dataclass
class EvalReport:
    """Metric bundle for one prediction file."""

    hamming_loss: float
    micro_p: float
    micro_r: float
    micro_f1: float
    macro_p: float
    macro_r: float
    macro_f1: float
    subset_accuracy: float
    c_test: int
    group_f1: dict[int, GroupScore] | None
    kl_distance: float

    def to_kv_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("hamming_loss", repr(self.hamming_loss)),
            ("micro_p", repr(self.micro_p)),
            ("micro_r", repr(self.micro_r)),
            ("micro_f1", repr(self.micro_f1)),
            ("macro_p", repr(self.macro_p)),
            ("macro_r", repr(self.macro_r)),
            ("macro_f1", repr(self.macro_f1)),
            ("subset_accuracy", repr(self.subset_accuracy)),
            ("c_test", str(self.c_test)),
            ("kl_distance", repr(self.kl_distance)),
        ]
        if self.group_f1:
            for g in sorted(self.group_f1):
                score = self.group_f1[g]
                rows.append((f"group{g}_f1", repr(score.macro_f1)))
                rows.append((f"group{g}_labels", str(len(score.labels))))
        return rows

    def to_text(self) -> str:
        lines = [
            f"hamming loss     {self.hamming_loss:.4f}",
            f"micro  P/R/F1    {self.micro_p:.4f} / {self.micro_r:.4f} / {self.micro_f1:.4f}",
            f"macro  P/R/F1    {self.macro_p:.4f} / {self.macro_r:.4f} / {self.macro_f1:.4f}",
            f"subset accuracy  {self.subset_accuracy:.4f}",
            f"distinct sets    {self.c_test}",
            f"KL(gold||pred)   {self.kl_distance:.4f}",
        ]
        if self.group_f1:
            for g in sorted(self.group_f1):
                score = self.group_f1[g]
                lines.append(
                    f"group {g} F1       {score.macro_f1:.4f} "
                    f"({len(score.labels)} labels)"
                )
        return "\n".join(lines)

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("key,value\n")
            for key, value in self.to_kv_rows():
                fh.write(f"{key},{value}\n")

    def save_text(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text() + "\n")


def build_report(pf: PredFile, train_freq: Mapping[str, int] | None = None,
                 boundaries: Sequence[int] | None = None,
                 kl_epsilon: float = 1e-6) -> EvalReport:
    """Compute the full metric bundle; the report's KL term compares the
    file's own gold sets (reference) against its predictions (model)."""
    mm = micro_macro(pf)
    acc, c_test = subset_acc_and_diversity(pf)
    groups = None
    if train_freq is not None:
        groups = frequency_groups(train_freq, pf, boundaries)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        kl = conditional_kl(pf.gold, pf.pred, epsilon=kl_epsilon)
    return EvalReport(
        hamming_loss=hamming_loss(pf),
        micro_p=mm.micro_p,
        micro_r=mm.micro_r,
        micro_f1=mm.micro_f1,
        macro_p=mm.macro_p,
        macro_r=mm.macro_r,
        macro_f1=mm.macro_f1,
        subset_accuracy=acc,
        c_test=c_test,
        group_f1=groups,
        kl_distance=kl,
    )
