"""Calibration experiment for the correlation-trend acceptance run."""
import sys
import time

import numpy as np

from laco.config import RunConfig
from laco.checkpoint import model_from_checkpoint
from laco.data import SynthSpec, generate_synthetic, planted_affinity, train_label_frequencies
from laco.metrics import frequency_groups, mass_group_boundaries
from laco.train import train, evaluate


def run(seed, mode, corpus, freq, **cfg_kw):
    cfg = RunConfig(layers=1, heads=2, hidden=32, max_len=48, batch_size=32,
                    lr=3e-3, window=5, ca_filters=16, eval_interval=30,
                    patience=5, max_steps=250, mode=mode, seed=seed)
    for k, v in cfg_kw.items():
        setattr(cfg, k, v)
    t0 = time.time()
    res = train(cfg, corpus)
    model = model_from_checkpoint(res.checkpoint)
    report, pf = evaluate(model, corpus.test, train_freq=freq)
    g4 = report.group_f1.get(4)
    return dict(
        macro=report.macro_f1,
        micro=report.micro_f1,
        g4=g4.macro_f1 if g4 else float("nan"),
        steps=res.steps,
        secs=time.time() - t0,
    )


def main(args):
    n = 20
    spec = SynthSpec(
        n_labels=n,
        affinity=planted_affinity(n, strength=float(args.get("strength", 0.7))),
        power_exponent=float(args.get("exp", 1.5)),
        keywords_per_label=int(args.get("kw", 5)),
        doc_len=int(args.get("doclen", 18)),
        noise_rate=float(args.get("noise", 0.25)),
        rider_emission=float(args.get("rider", 1.0)),
        n_train=5000, n_valid=500, n_test=500,
    )
    corpus, _ = generate_synthetic(spec, seed=int(args.get("cseed", 100)))
    freq = train_label_frequencies(corpus)
    cuts = mass_group_boundaries(freq)
    ranked = sorted(freq, key=lambda l: (-freq[l], l))
    print(f"group cuts {cuts}; group4 labels {ranked[cuts[2]:]}")
    print(f"rarest freq: {min(freq.values())}/{5000}")

    cfg_kw = {}
    if "max_steps" in args:
        cfg_kw["max_steps"] = int(args["max_steps"])
    if "hidden" in args:
        cfg_kw["hidden"] = int(args["hidden"])
    if "lr" in args:
        cfg_kw["lr"] = float(args["lr"])

    rows = []
    for seed in range(5):
        a = run(seed, "mlc", corpus, freq, **cfg_kw)
        b = run(seed, "+clcp", corpus, freq, **cfg_kw)
        rows.append((a, b))
        print(f"seed {seed}: mlc macro={a['macro']:.4f} g4={a['g4']:.4f} "
              f"({a['steps']}st {a['secs']:.0f}s) | +clcp macro={b['macro']:.4f} "
              f"g4={b['g4']:.4f} ({b['steps']}st {b['secs']:.0f}s)")
    mean_mlc = np.mean([r[0]["macro"] for r in rows])
    mean_clcp = np.mean([r[1]["macro"] for r in rows])
    gaps = [r[1]["g4"] - r[0]["g4"] for r in rows]
    nonneg = sum(1 for g in gaps if g >= 0)
    total = sum(r[0]["secs"] + r[1]["secs"] for r in rows)
    print(f"\nmean macro: mlc={mean_mlc:.4f} +clcp={mean_clcp:.4f} "
          f"(pass={mean_clcp >= mean_mlc})")
    print(f"g4 gaps: {[f'{g:+.3f}' for g in gaps]} nonneg={nonneg}/5 (pass={nonneg >= 4})")
    print(f"total time: {total:.0f}s")


if __name__ == "__main__":
    kv = dict(a.split("=", 1) for a in sys.argv[1:])
    main(kv)
