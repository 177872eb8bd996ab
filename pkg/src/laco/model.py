"""Model assembly: parameter construction, ablation routing, forward pass.

Four structural variants are selectable:

  * full          -- joint encoding of document + labels, cross attention
  * no_ca         -- joint encoding, classifier reads the [CLS] vector
  * no_je         -- document-only encoding, labels are free embeddings
  * no_je + no_ca -- document-only encoding, [CLS] classifier, no label
                     representations at all (a plain sentence classifier)

Each variant builds a distinct parameter set, so ablations are visible
in the parameter count, not just in behavior.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Tensor, stop_gradient
from .aux_tasks import combined_loss, clcp_loss, plcp_loss, sample_clcp, sample_plcp
from .config import ConfigError, RunConfig
from .encoder import EncoderDims, JointSequence, Vocab, encode, init_encoder_params, pack
from .heads import Prediction, classifier_probs, compatibility, cross_attention, mlc_loss, predict


class ModelParams:
    """Insertion-ordered name -> Tensor(requires_grad=True) collection."""

    def __init__(self):
        self._store: dict[str, Tensor] = {}

    def add(self, name: str, array) -> None:
        if name in self._store:
            raise ValueError(f"duplicate parameter '{name}'")
        self._store[name] = Tensor(np.array(array, dtype=np.float64),
                                   requires_grad=True)

    def __getitem__(self, name: str) -> Tensor:
        return self._store[name]

    def __contains__(self, name: str) -> bool:
        return name in self._store

    def __len__(self) -> int:
        return len(self._store)

    def names(self) -> list[str]:
        return list(self._store)

    def items(self):
        return self._store.items()

    def n_values(self) -> int:
        """Total count of scalar parameters."""
        return sum(t.size for t in self._store.values())

    def zero_grad(self) -> None:
        for t in self._store.values():
            t.grad = None

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._store.items()}

    def load_snapshot(self, snap: dict[str, np.ndarray]) -> None:
        for name, t in self._store.items():
            t.data[...] = snap[name]

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "ModelParams":
        params = cls()
        for name, arr in arrays.items():
            params.add(name, arr)
        return params


def rng_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent named random streams derived from one seed.

    Keeping initialization, shuffling, and task sampling on separate
    streams means enabling an auxiliary task cannot perturb encoder
    initialization or batch order.
    """
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("encoder_init", "head_init", "shuffle", "sampler")
    return {name: np.random.default_rng(ss) for name, ss in zip(names, children)}


def zero_weights(params: ModelParams) -> None:
    """Zero every parameter except layer-norm scales (kept at 1)."""
    for name, t in params.items():
        if name.endswith(".scale"):
            t.data[...] = 1.0
        else:
            t.data[...] = 0.0


@dataclass
class ForwardOut:
    """One instance's forward pass; auxiliary heads must consume the same
    `h_labels` tensor object that the classification head saw."""

    sequence: JointSequence
    h_cls: Tensor
    h_doc: Tensor
    h_labels: Tensor | None
    rep: Tensor
    attention: Tensor | None
    probs: Tensor
    degenerate: bool


@dataclass
class StepLosses:
    out: ForwardOut
    mlc: Tensor
    plcp: Tensor | None
    clcp: Tensor | None
    combined: Tensor


class Model:
    """A configured parameter set plus the routing its ablation flags imply."""

    def __init__(self, cfg: RunConfig, vocab: Vocab, params: ModelParams,
                 dims: EncoderDims):
        self.cfg = cfg
        self.vocab = vocab
        self.params = params
        self.dims = dims
        # Instance is frozen/hashable and packing is deterministic, so
        # packed sequences can be reused across steps.
        self._pack_cache: dict = {}

    # -- construction ----------------------------------------------------

    @classmethod
    def build(cls, cfg: RunConfig, vocab: Vocab,
              rng_encoder: np.random.Generator | None = None,
              rng_heads: np.random.Generator | None = None) -> "Model":
        cfg.validate()
        if rng_encoder is None or rng_heads is None:
            streams = rng_streams(cfg.seed)
            rng_encoder = rng_encoder or streams["encoder_init"]
            rng_heads = rng_heads or streams["head_init"]
        dims = EncoderDims(layers=cfg.layers, heads=cfg.heads,
                           hidden=cfg.hidden, max_len=cfg.max_len)
        rows = vocab.word_rows if cfg.no_je else vocab.size
        segments = 1 if cfg.no_je else 2
        params = ModelParams()
        init_encoder_params(params, dims, rows, segments, rng_encoder)
        n, k = vocab.n_labels, cfg.hidden
        needs_labels = (not cfg.no_ca) or cfg.mode != "mlc"
        if cfg.no_je and needs_labels:
            params.add("labels.emb", rng_heads.normal(0.0, 0.02, (n, k)))
        if not cfg.no_ca:
            params.add("ca.conv.w", rng_heads.normal(0.0, 0.02, (cfg.window, n, cfg.ca_filters)))
            params.add("ca.conv.b", np.zeros(cfg.ca_filters))
        params.add("cls.w1", rng_heads.normal(0.0, 0.02, (n, k)))
        params.add("cls.b1", np.zeros(n))
        # auxiliary output layers start at zero so sigma(0) = 0.5 before
        # training; the CLCP hidden layer is random (it sees no gradient
        # until the output weights move off zero)
        if cfg.mode in ("+plcp", "+both"):
            params.add("plcp.w", np.zeros(2 * k))
            params.add("plcp.b", np.zeros(1))
        if cfg.mode in ("+clcp", "+both"):
            params.add("clcp.w1", rng_heads.normal(0.0, 0.02, (2 * k, k)))
            params.add("clcp.b1", np.zeros(k))
            params.add("clcp.w2", np.zeros(k))
            params.add("clcp.b2", np.zeros(1))
        return cls(cfg, vocab, params, dims)

    # -- forward ----------------------------------------------------------

    def _sequence(self, instance) -> JointSequence:
        seq = self._pack_cache.get(instance)
        if seq is None:
            seq = pack(instance, self.vocab, self.cfg.max_len,
                       include_labels=not self.cfg.no_je)
            self._pack_cache[instance] = seq
        return seq

    def forward(self, instance) -> ForwardOut:
        cfg = self.cfg
        seq = self._sequence(instance)
        h_cls, h_doc, h_labels = encode(seq, self.params, self.dims)
        if cfg.no_je and "labels.emb" in self.params:
            h_labels = self.params["labels.emb"]
        attention = None
        degenerate = False
        if cfg.no_ca:
            rep = h_cls
        else:
            compat = compatibility(h_doc, h_labels)
            rep, attention = cross_attention(
                compat, h_doc, self.params["ca.conv.w"], self.params["ca.conv.b"],
                cfg.window,
            )
            degenerate = attention is None
        probs = classifier_probs(rep, self.params["cls.w1"], self.params["cls.b1"])
        return ForwardOut(seq, h_cls, h_doc, h_labels, rep, attention, probs,
                          degenerate)

    # -- training-side helpers ---------------------------------------------

    def gold_vector(self, instance) -> np.ndarray:
        vec = np.zeros(self.vocab.n_labels)
        for name in instance.labels:
            vec[self.vocab.label_index(name)] = 1.0
        return vec

    def losses(self, instance, sampler_rng: np.random.Generator) -> StepLosses:
        """One shared forward pass; every enabled head reads its outputs."""
        cfg = self.cfg
        out = self.forward(instance)
        l_mlc = mlc_loss(out.probs, self.gold_vector(instance))
        l_plcp = l_clcp = None
        if cfg.mode != "mlc":
            if out.h_labels is None:
                raise ConfigError("auxiliary tasks need label representations")
            h_y = stop_gradient(out.h_labels) if cfg.detach_aux else out.h_labels
            y_plus = sorted(self.vocab.label_index(name) for name in instance.labels)
            if cfg.mode in ("+plcp", "+both"):
                y_minus = [i for i in range(self.vocab.n_labels) if i not in set(y_plus)]
                samples = sample_plcp(y_plus, y_minus, cfg.gamma, sampler_rng,
                                      cfg.plcp_pairs)
                if samples:
                    l_plcp = plcp_loss(h_y, samples, self.params["plcp.w"],
                                       self.params["plcp.b"], cfg.symmetric_plcp)
            if cfg.mode in ("+clcp", "+both"):
                sample = sample_clcp(y_plus, self.vocab.n_labels, sampler_rng)
                if sample is not None:
                    l_clcp = clcp_loss(h_y, sample, self.params["clcp.w1"],
                                       self.params["clcp.b1"],
                                       self.params["clcp.w2"],
                                       self.params["clcp.b2"])
        total = combined_loss(l_mlc, l_plcp, l_clcp, cfg.alpha, cfg.mode)
        return StepLosses(out, l_mlc, l_plcp, l_clcp, total)

    # -- inference ----------------------------------------------------------

    def predict_instance(self, instance) -> Prediction:
        out = self.forward(instance)
        return predict(out.rep, self.params["cls.w1"], self.params["cls.b1"],
                       self.cfg.threshold)

    def predicted_labels(self, instance) -> frozenset[str]:
        pred = self.predict_instance(instance)
        names = self.vocab.label_names
        return frozenset(names[i] for i in pred.predicted)

    def n_parameters(self) -> int:
        return self.params.n_values()
