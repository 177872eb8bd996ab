"""Multi-label text classification lab.

A document and the full label inventory are encoded jointly by a small
transformer; a document-label cross attention head produces the
classifier input; two optional auxiliary tasks (pairwise and conditional
label co-occurrence prediction) share the encoder and sharpen the label
representations.  Everything runs on a self-contained float64
reverse-mode autograd substrate, desk scale, CPU only.
"""

__version__ = "0.1.0"

from .autograd import Tape, Tensor, tape
from .config import ConfigError, RunConfig
from .data import Corpus, Instance, SynthSpec, corpus_stats, generate_synthetic, load_corpus
from .encoder import Vocab, build_vocab, encode, pack
from .metrics import EvalReport, PredFile, build_report, conditional_kl
from .model import Model, ModelParams
from .train import CurveLog, TrainResult, evaluate, train

__all__ = [
    "Tape",
    "Tensor",
    "tape",
    "ConfigError",
    "RunConfig",
    "Corpus",
    "Instance",
    "SynthSpec",
    "corpus_stats",
    "generate_synthetic",
    "load_corpus",
    "Vocab",
    "build_vocab",
    "encode",
    "pack",
    "EvalReport",
    "PredFile",
    "build_report",
    "conditional_kl",
    "Model",
    "ModelParams",
    "CurveLog",
    "TrainResult",
    "evaluate",
    "train",
]
