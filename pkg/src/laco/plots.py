"""Matplotlib rendering of report figures and training curves to files."""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def save_convergence_figure(points, path) -> None:
    """Training loss and validation micro-F1 against the step counter."""
    steps = [p.step for p in points]
    fig, ax_loss = plt.subplots(figsize=(6.4, 4.0))
    ax_loss.plot(steps, [p.loss for p in points], color="tab:red", label="loss")
    ax_loss.set_xlabel("training step")
    ax_loss.set_ylabel("loss", color="tab:red")
    ax_f1 = ax_loss.twinx()
    ax_f1.plot(steps, [p.val_micro_f1 for p in points], color="tab:blue",
               label="val micro-F1")
    ax_f1.set_ylabel("validation micro-F1", color="tab:blue")
    ax_f1.set_ylim(0.0, 1.05)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_group_f1_figure(group_f1: Mapping[int, "GroupScore"], path) -> None:
    """Bar chart of macro-F1 per frequency group (group 1 = most frequent)."""
    groups = sorted(group_f1)
    values = [group_f1[g].macro_f1 for g in groups]
    sizes = [len(group_f1[g].labels) for g in groups]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.bar([str(g) for g in groups], values, color="tab:blue")
    for i, (v, s) in enumerate(zip(values, sizes)):
        ax.text(i, v + 0.01, f"{s} labels", ha="center", fontsize=8)
    ax.set_xlabel("frequency group (1 = most frequent)")
    ax.set_ylabel("macro-F1")
    ax.set_ylim(0.0, 1.1)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_label_frequency_figure(freq: Mapping[str, int], path,
                                top: int | None = None) -> None:
    """Labels ranked by training frequency; the long tail made visible."""
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    if top:
        ranked = ranked[:top]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.bar(range(len(ranked)), [c for _, c in ranked], color="tab:gray")
    ax.set_xlabel("label rank")
    ax.set_ylabel("occurrences")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
