"""Command-line surface: train, eval, analyze, gen-synth, stats.

Reports are written twice -- human-readable text and key-value CSV --
and the report paths also render figures (training curve, per-group F1
bars, label-frequency distribution) next to the delimited output.
Set LACO_LOG=DEBUG|INFO|WARNING|ERROR to control verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, model_from_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, parse_config_file, write_config_file
from .data import (
    Corpus,
    CorpusFormatError,
    SynthSpec,
    corpus_stats,
    generate_synthetic,
    load_corpus,
    planted_affinity,
    train_label_frequencies,
    write_instances,
    write_truth_table,
)
from .metrics import PredFile, build_report, conditional_kl
from .train import evaluate, read_curve_csv, train

logger = logging.getLogger("laco")

_CONFIG_FLAGS = ("seed", "mode", "alpha", "gamma", "threshold", "layers",
                 "heads", "hidden", "max_len", "batch_size", "lr",
                 "plcp_pairs", "patience", "eval_interval", "max_steps",
                 "min_freq", "window", "ca_filters", "no_je", "no_ca",
                 "symmetric_plcp")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", help="mlc, +plcp, +clcp, or +both")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--layers", type=int)
    parser.add_argument("--heads", type=int)
    parser.add_argument("--hidden", type=int)
    parser.add_argument("--max-len", dest="max_len", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--plcp-pairs", dest="plcp_pairs", type=int)
    parser.add_argument("--patience", type=int)
    parser.add_argument("--eval-interval", dest="eval_interval", type=int)
    parser.add_argument("--max-steps", dest="max_steps", type=int)
    parser.add_argument("--min-freq", dest="min_freq", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--ca-filters", dest="ca_filters", type=int)
    parser.add_argument("--no-je", dest="no_je", action="store_true", default=None)
    parser.add_argument("--no-ca", dest="no_ca", action="store_true", default=None)
    parser.add_argument("--symmetric-plcp", dest="symmetric_plcp",
                        action="store_true", default=None)


def _build_config(args: argparse.Namespace, extra: dict | None = None) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key in _CONFIG_FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if extra:
        values.update(extra)
    return RunConfig.from_dict(values).validate()


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(report, pf: PredFile, out: Path, stem: str,
                  freq: dict | None) -> None:
    from . import plots

    pf.save(out / f"{stem}_predictions.tsv")
    report.save_text(out / f"{stem}_report.txt")
    report.save_csv(out / f"{stem}_report.csv")
    if report.group_f1:
        plots.save_group_f1_figure(report.group_f1, out / f"{stem}_group_f1.png")
    if freq:
        plots.save_label_frequency_figure(freq, out / f"{stem}_label_freq.png")
    print(report.to_text())


def _cmd_train(args) -> int:
    from . import plots

    corpus = load_corpus(args.train, args.valid, args.test)
    cfg = _build_config(args, extra={
        "out_dir": args.out_dir,
        "train_path": args.train,
        "valid_path": args.valid,
        "test_path": args.test,
    })
    out = _out_dir(args)
    result = train(cfg, corpus)
    save_checkpoint(out / "checkpoint.bin", result.checkpoint)
    result.checkpoint.vocab.save(out / "vocab.txt")
    result.curve.save(out / "curve.csv")
    if result.curve.points:
        plots.save_convergence_figure(result.curve.points, out / "curve.png")
    write_config_file(out / "config_used.txt", cfg)
    print(f"stopped: {result.stop_reason} after {result.steps} steps")
    print(f"best validation micro-F1: {result.best_micro_f1:.4f} "
          f"(step {result.checkpoint.step})")
    if corpus.test:
        model = model_from_checkpoint(result.checkpoint)
        report, pf = evaluate(model, corpus.test,
                              train_freq=train_label_frequencies(corpus))
        _write_report(report, pf, out, "test", train_label_frequencies(corpus))
    return 0


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model = model_from_checkpoint(ckpt)
    if args.threshold is not None:
        model.cfg.threshold = args.threshold
        model.cfg.validate()
    label_space = list(model.vocab.label_names)
    corpus = load_corpus(args.data, label_space=label_space)
    freq = None
    if args.train:
        train_corpus = load_corpus(args.train, label_space=label_space)
        freq = train_label_frequencies(train_corpus)
    report, pf = evaluate(model, corpus.train, train_freq=freq)
    _write_report(report, pf, _out_dir(args), "eval", freq)
    return 0


def _cmd_analyze(args) -> int:
    from . import plots

    did_something = False
    out = _out_dir(args)
    if args.kl:
        ref = PredFile.load(args.kl[0])
        model_pf = PredFile.load(args.kl[1])
        value = conditional_kl(ref.pred, model_pf.pred, epsilon=args.kl_epsilon)
        print(f"{value!r}")
        did_something = True
    if args.pred:
        pf = PredFile.load(args.pred)
        freq = None
        if args.train:
            train_corpus = load_corpus(args.train)
            freq = train_label_frequencies(train_corpus)
        report = build_report(pf, train_freq=freq, kl_epsilon=args.kl_epsilon)
        _write_report(report, pf, out, "analyze", freq)
        did_something = True
    if args.curve:
        points = read_curve_csv(args.curve)
        plots.save_convergence_figure(points, out / "curve.png")
        print(f"wrote {out / 'curve.png'}")
        did_something = True
    if not did_something:
        print("analyze: nothing to do (pass --pred, --kl, or --curve)",
              file=sys.stderr)
        return 2
    return 0


def _cmd_gen_synth(args) -> int:
    spec = SynthSpec(
        n_labels=args.labels,
        affinity=planted_affinity(args.labels, strength=args.affinity_strength),
        power_exponent=args.exponent,
        keywords_per_label=args.keywords,
        doc_len=args.doc_len,
        noise_rate=args.noise_rate,
        n_train=args.train,
        n_valid=args.valid,
        n_test=args.test,
    )
    corpus, truth = generate_synthetic(spec, seed=args.seed)
    out = _out_dir(args)
    write_instances(out / "train.tsv", corpus.train)
    write_instances(out / "valid.tsv", corpus.valid)
    write_instances(out / "test.tsv", corpus.test)
    write_truth_table(out / "truth.tsv", corpus.label_space, truth)
    print(f"wrote {spec.n_train}/{spec.n_valid}/{spec.n_test} docs with "
          f"{spec.n_labels} labels to {out}")
    return 0


def _cmd_stats(args) -> int:
    corpus = load_corpus(args.train, args.valid, args.test)
    stats = corpus_stats(corpus)
    print(stats.to_text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("key,value\n")
            fh.write(f"n_docs,{stats.n_docs}\n")
            fh.write(f"n_labels,{stats.n_labels}\n")
            fh.write(f"mean_doc_len,{stats.mean_doc_len!r}\n")
            fh.write(f"mean_labels,{stats.mean_labels!r}\n")
            fh.write(f"n_combinations,{stats.n_combinations}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laco",
        description="Multi-label text classification lab with joint "
                    "document-label encoding and co-occurrence auxiliary tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    p_train.add_argument("--train", required=True, help="training split (tsv)")
    p_train.add_argument("--valid", help="validation split (tsv)")
    p_train.add_argument("--test", help="test split (tsv); evaluated at the end")
    p_train.add_argument("--out-dir", default="run")
    _add_config_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="split to evaluate (tsv)")
    p_eval.add_argument("--train", help="training split for frequency groups")
    p_eval.add_argument("--threshold", type=float)
    p_eval.add_argument("--out-dir", default=".")
    p_eval.set_defaults(func=_cmd_eval)

    p_an = sub.add_parser("analyze", help="metrics and figures from files")
    p_an.add_argument("--pred", help="prediction file (gold TAB predicted)")
    p_an.add_argument("--train", help="training split for frequency groups")
    p_an.add_argument("--kl", nargs=2, metavar=("REF", "MODEL"),
                      help="KL distance between two prediction files' "
                           "predicted label sets")
    p_an.add_argument("--kl-epsilon", dest="kl_epsilon", type=float, default=1e-6)
    p_an.add_argument("--curve", help="render a curve.csv to curve.png")
    p_an.add_argument("--out-dir", default=".")
    p_an.set_defaults(func=_cmd_analyze)

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p_gen.add_argument("--out-dir", default="synth")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--labels", type=int, default=20)
    p_gen.add_argument("--train", type=int, default=1000)
    p_gen.add_argument("--valid", type=int, default=100)
    p_gen.add_argument("--test", type=int, default=100)
    p_gen.add_argument("--doc-len", dest="doc_len", type=int, default=20)
    p_gen.add_argument("--noise-rate", dest="noise_rate", type=float, default=0.2)
    p_gen.add_argument("--exponent", type=float, default=1.5)
    p_gen.add_argument("--keywords", type=int, default=6)
    p_gen.add_argument("--affinity-strength", dest="affinity_strength",
                       type=float, default=0.7)
    p_gen.set_defaults(func=_cmd_gen_synth)

    p_stats = sub.add_parser("stats", help="dataset statistics")
    p_stats.add_argument("--train", required=True)
    p_stats.add_argument("--valid")
    p_stats.add_argument("--test")
    p_stats.add_argument("--csv", help="also write the stats as key-value CSV")
    p_stats.set_defaults(func=_cmd_stats)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LACO_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CorpusFormatError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
