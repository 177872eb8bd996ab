"""End-to-end training with early stopping on validation micro-F1.

Each step packs a batch, runs one shared forward pass per instance,
computes the classification loss plus whichever auxiliary losses the
mode enables (all from the same encoder outputs), backpropagates, and
applies one Adam update.  Validation micro-F1 is measured every
`eval_interval` steps; training stops after `patience` evaluations
without improvement, at `max_steps`, or on divergence (the best
checkpoint so far is kept in all cases).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .autograd import add, mul, tape
from .checkpoint import Checkpoint
from .config import ConfigError, RunConfig
from .data import Corpus, batches, train_label_frequencies
from .encoder import build_vocab
from .metrics import EvalReport, PredFile, build_report, micro_macro
from .model import Model, rng_streams
from .optim import AdamState, GradientNaNError, adam_step

logger = logging.getLogger("laco.train")

CURVE_COLUMNS = ("step", "loss", "loss_mlc", "loss_plcp", "loss_clcp",
                 "val_micro_f1", "wall_clock")


@dataclass
class CurvePoint:
    step: int
    loss: float
    loss_mlc: float
    loss_plcp: float
    loss_clcp: float
    val_micro_f1: float
    wall_clock: float


@dataclass
class CurveLog:
    """Convergence curve rows; steps are strictly increasing."""

    points: list[CurvePoint] = field(default_factory=list)

    def append(self, point: CurvePoint) -> None:
        if self.points and point.step <= self.points[-1].step:
            raise ValueError("curve steps must be strictly increasing")
        self.points.append(point)

    def to_csv_text(self) -> str:
        lines = [",".join(CURVE_COLUMNS)]
        for p in self.points:
            lines.append(
                f"{p.step},{p.loss!r},{p.loss_mlc!r},{p.loss_plcp!r},"
                f"{p.loss_clcp!r},{p.val_micro_f1!r},{p.wall_clock!r}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())


def read_curve_csv(path) -> list[CurvePoint]:
    points = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CURVE_COLUMNS:
            raise ValueError(f"{path}: unexpected curve columns {header}")
        for line in fh:
            if not line.strip():
                continue
            cells = line.strip().split(",")
            points.append(CurvePoint(int(cells[0]), *[float(c) for c in cells[1:]]))
    return points


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    curve: CurveLog
    stop_reason: str
    best_micro_f1: float
    steps: int


class _Meter:
    """Running means of the loss components between curve rows."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.n = 0
        self.loss = 0.0
        self.mlc = 0.0
        self.plcp = 0.0
        self.clcp = 0.0

    def add(self, loss, mlc, plcp, clcp):
        self.n += 1
        self.loss += loss
        self.mlc += mlc
        self.plcp += plcp
        self.clcp += clcp

    def means(self) -> tuple[float, float, float, float]:
        d = max(1, self.n)
        return self.loss / d, self.mlc / d, self.plcp / d, self.clcp / d


def _micro_f1(model: Model, instances) -> float:
    pf = PredFile(
        label_space=list(model.vocab.label_names),
        gold=[frozenset(inst.labels) for inst in instances],
        pred=[model.predicted_labels(inst) for inst in instances],
    )
    return micro_macro(pf).micro_f1


def train(cfg: RunConfig, corpus: Corpus,
          warm_start: Checkpoint | None = None) -> TrainResult:
    """Train from scratch, or continue from a checkpoint (`warm_start`).

    A warm start keeps every parameter whose name and shape match the
    new model (fresh heads keep their initialization) and restarts the
    optimizer; it is how a mature encoder is handed to a different
    training mode.
    """
    cfg.validate()
    if not corpus.train:
        raise ConfigError("training split is empty")
    vocab = build_vocab(corpus.train, corpus.label_space, cfg.min_freq)
    streams = rng_streams(cfg.seed)
    model = Model.build(cfg, vocab, streams["encoder_init"], streams["head_init"])
    if warm_start is not None:
        for name, tensor in model.params.items():
            src = warm_start.params.get(name)
            if src is not None and src.shape == tensor.data.shape:
                tensor.data[...] = src
    adam = AdamState.for_params(model.params, lr=cfg.lr)
    sampler_rng = streams["sampler"]
    shuffle_rng = streams["shuffle"]
    eval_instances = corpus.valid if corpus.valid else corpus.train

    curve = CurveLog()
    meter = _Meter()
    t0 = time.perf_counter()
    best_f1 = -math.inf
    best: tuple[dict, AdamState, int] | None = None
    strikes = 0
    step = 0
    stop = None

    logger.info("training: %d instances, %d labels, %d parameters, mode %s",
                len(corpus.train), vocab.n_labels, model.n_parameters(), cfg.mode)

    while stop is None:
        epoch_seed = int(shuffle_rng.integers(2**62))
        for batch in batches(corpus.train, cfg.batch_size, epoch_seed):
            step += 1
            model.params.zero_grad()
            comp = {"mlc": 0.0, "plcp": 0.0, "clcp": 0.0}
            with tape() as tp:
                total = None
                for inst in batch:
                    losses = model.losses(inst, sampler_rng)
                    comp["mlc"] += losses.mlc.item()
                    if losses.plcp is not None:
                        comp["plcp"] += losses.plcp.item()
                    if losses.clcp is not None:
                        comp["clcp"] += losses.clcp.item()
                    total = losses.combined if total is None \
                        else add(total, losses.combined)
                total = mul(total, 1.0 / len(batch))
            loss_value = total.item()
            if not math.isfinite(loss_value):
                logger.error("loss diverged at step %d; keeping last good "
                             "checkpoint", step)
                stop = "diverged"
                break
            tp.backward(total)
            try:
                adam_step(model.params, adam)
            except GradientNaNError as err:
                logger.error("aborting at step %d: %s", step, err)
                stop = "nan_grad"
                break
            meter.add(loss_value, *(comp[k] / len(batch) for k in ("mlc", "plcp", "clcp")))

            if step % cfg.eval_interval == 0:
                f1 = _micro_f1(model, eval_instances)
                means = meter.means()
                meter.reset()
                curve.append(CurvePoint(step, *means, f1,
                                        time.perf_counter() - t0))
                logger.info("step %d: loss %.4f, val micro-F1 %.4f",
                            step, means[0], f1)
                if f1 > best_f1:
                    best_f1 = f1
                    best = (model.params.snapshot(), adam.copy(), step)
                    strikes = 0
                else:
                    strikes += 1
                    if strikes >= cfg.patience:
                        stop = "patience"
                        break
            if step >= cfg.max_steps:
                stop = stop or "max_steps"
                break

    if best is None:
        # stopped before the first scheduled evaluation
        f1 = _micro_f1(model, eval_instances)
        best_f1 = f1
        best = (model.params.snapshot(), adam.copy(), step)
        if not curve.points or curve.points[-1].step < step:
            curve.append(CurvePoint(step, *meter.means(), f1,
                                    time.perf_counter() - t0))

    snap, adam_best, best_step = best
    ckpt = Checkpoint(params=snap, adam=adam_best, step=best_step,
                      best_micro_f1=best_f1, config=cfg.to_dict(), vocab=vocab)
    logger.info("stopped (%s) after %d steps; best micro-F1 %.4f at step %d",
                stop, step, best_f1, best_step)
    return TrainResult(checkpoint=ckpt, curve=curve, stop_reason=stop,
                       best_micro_f1=best_f1, steps=step)


def evaluate(model: Model, instances, train_freq: dict[str, int] | None = None,
             kl_epsilon: float = 1e-6) -> tuple[EvalReport, PredFile]:
    """Thresholded predictions for a split plus the full metric bundle."""
    if not instances:
        raise ValueError("nothing to evaluate")
    space = set(model.vocab.label_names)
    gold, pred = [], []
    for inst in instances:
        stray = inst.labels - space
        if stray:
            raise ConfigError(
                f"instance labels outside the checkpoint label space: {sorted(stray)}"
            )
        gold.append(frozenset(inst.labels))
        pred.append(model.predicted_labels(inst))
    pf = PredFile(label_space=list(model.vocab.label_names), gold=gold, pred=pred)
    return build_report(pf, train_freq=train_freq, kl_epsilon=kl_epsilon), pf


def evaluate_corpus_split(model: Model, corpus: Corpus, split: str,
                          kl_epsilon: float = 1e-6) -> tuple[EvalReport, PredFile]:
    """Evaluate one named split with frequency groups from the train split."""
    instances = getattr(corpus, split)
    freq = train_label_frequencies(corpus) if corpus.train else None
    return evaluate(model, instances, train_freq=freq, kl_epsilon=kl_epsilon)
