"""Trajectory diagnostic: test metrics measured along training for both modes."""
import sys
import time

import numpy as np

from laco.config import RunConfig
from laco.data import SynthSpec, generate_synthetic, planted_affinity, train_label_frequencies
from laco.encoder import build_vocab
from laco.model import Model, rng_streams
from laco.optim import AdamState, adam_step
from laco.autograd import add, mul, tape
from laco.data import batches
from laco.train import evaluate


def run(corpus, freq, seed, mode, max_steps, probe_every, cfg_kw):
    cfg = RunConfig(layers=1, heads=2, hidden=32, max_len=64, batch_size=32,
                    lr=3e-3, window=5, ca_filters=16, mode=mode, seed=seed,
                    **cfg_kw)
    cfg.validate()
    vocab = build_vocab(corpus.train, corpus.label_space, 1)
    streams = rng_streams(cfg.seed)
    model = Model.build(cfg, vocab, streams["encoder_init"], streams["head_init"])
    adam = AdamState.for_params(model.params, lr=cfg.lr)
    sampler = streams["sampler"]
    shuffle = streams["shuffle"]
    step = 0
    track = []
    while step < max_steps:
        for batch in batches(corpus.train, cfg.batch_size, int(shuffle.integers(2**62))):
            step += 1
            model.params.zero_grad()
            with tape() as tp:
                total = None
                for inst in batch:
                    sl = model.losses(inst, sampler)
                    total = sl.combined if total is None else add(total, sl.combined)
                total = mul(total, 1.0 / len(batch))
            tp.backward(total)
            adam_step(model.params, adam)
            if step % probe_every == 0:
                report, _ = evaluate(model, corpus.test, train_freq=freq)
                g4 = report.group_f1.get(4)
                track.append((step, report.macro_f1,
                              g4.macro_f1 if g4 else 0.0, report.micro_f1))
            if step >= max_steps:
                break
    return track


def main(args):
    spec = SynthSpec(n_labels=20, affinity=planted_affinity(20, float(args.get("strength", 0.65))),
                     power_exponent=float(args.get("exp", 1.5)),
                     keywords_per_label=int(args.get("kw", 5)),
                     doc_len=int(args.get("doclen", 18)),
                     noise_rate=float(args.get("noise", 0.25)),
                     rider_emission=float(args.get("rider", 0.0)),
                     n_train=5000, n_valid=500, n_test=500)
    corpus, _ = generate_synthetic(spec, seed=100)
    freq = train_label_frequencies(corpus)
    max_steps = int(args.get("max_steps", 800))
    probe = int(args.get("probe", 40))
    cfg_kw = {}
    if "doclen_enc" in args:
        cfg_kw["max_len"] = int(args["doclen_enc"])
    seed = int(args.get("seed", 0))
    t0 = time.time()
    tracks = {}
    for mode in ("mlc", "+clcp"):
        tracks[mode] = run(corpus, freq, seed, mode, max_steps, probe, cfg_kw)
        print(f"# {mode} done {time.time()-t0:.0f}s", flush=True)
    print(f"{'step':>5} {'macro.mlc':>10} {'macro.clcp':>10} {'g4.mlc':>8} "
          f"{'g4.clcp':>8} {'micro.mlc':>9} {'micro.clcp':>10}")
    for (s1, ma, ga, mia), (s2, mb, gb, mib) in zip(tracks["mlc"], tracks["+clcp"]):
        print(f"{s1:>5} {ma:>10.4f} {mb:>10.4f} {ga:>8.4f} {gb:>8.4f} "
              f"{mia:>9.4f} {mib:>10.4f}", flush=True)


if __name__ == "__main__":
    main(dict(a.split("=", 1) for a in sys.argv[1:]))
