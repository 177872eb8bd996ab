"""Adam with bias correction over named parameter collections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GradientNaNError(RuntimeError):
    """A parameter gradient contains a non-finite value; names the parameter."""


@dataclass
class AdamState:
    """Optimizer state; moment buffers mirror parameter shapes exactly."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, lr: float = 1e-3, beta1: float = 0.9,
                   beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        state = cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state

    def copy(self) -> "AdamState":
        return AdamState(
            lr=self.lr,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            step=self.step,
            m={k: v.copy() for k, v in self.m.items()},
            v={k: v.copy() for k, v in self.v.items()},
        )


def adam_step(params, state: AdamState) -> None:
    """One Adam update with bias correction; increments the step counter.

    A parameter whose gradient is None simply did not participate in the
    step (e.g. an auxiliary head skipped for every instance of a batch);
    it is treated as having a zero gradient so the moment decay stays
    deterministic.  Non-finite gradients abort before touching anything.
    """
    for name, p in params.items():
        g = p.grad
        if g is not None and not np.all(np.isfinite(g)):
            raise GradientNaNError(f"non-finite gradient for parameter '{name}'")

    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
