"""Shared test utilities: central finite-difference gradient checking.

The FD oracle evaluates the function as plain forward passes (no tape
active), perturbing one scalar at a time, so it is independent of the
reverse-mode path it checks.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from laco.autograd import Tensor, tape

H_DEFAULT = 1e-5
REL_TOL = 1e-4


def fd_gradient(f: Callable[[], float], x: np.ndarray, h: float = H_DEFAULT) -> np.ndarray:
    """Central finite differences of a scalar function w.r.t. every entry
    of `x`, mutating `x` in place around each evaluation."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


ZERO_SCALE = 1e-6


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-ratio relative error.

    A gradient whose norm sits below ZERO_SCALE on both sides is treated
    as vanished: at that magnitude the central-difference signal is pure
    float64 rounding noise (eps * |f| / h), so no meaningful comparison
    exists and the pair counts as exact.
    """
    diff = np.linalg.norm((analytic - numeric).ravel())
    scale = max(np.linalg.norm(analytic.ravel()), np.linalg.norm(numeric.ravel()))
    if scale < ZERO_SCALE:
        return 0.0
    return diff / scale


def check_gradients(build: Callable[[Mapping[str, Tensor]], Tensor],
                    arrays: dict[str, np.ndarray],
                    rel_tol: float = REL_TOL,
                    h: float = H_DEFAULT) -> None:
    """Compare tape gradients of `build` against finite differences.

    `build` maps a dict of Tensors (same keys as `arrays`) to a scalar
    Tensor and must be pure.
    """
    tensors = {k: Tensor(v, requires_grad=True) for k, v in arrays.items()}
    with tape() as tp:
        loss = build(tensors)
    tp.backward(loss)

    def forward() -> float:
        return build({k: Tensor(v) for k, v in arrays.items()}).item()

    for name, arr in arrays.items():
        analytic = tensors[name].grad
        if analytic is None:
            analytic = np.zeros_like(arr)
        numeric = fd_gradient(forward, arr, h=h)
        err = relative_error(analytic, numeric)
        assert err < rel_tol, (
            f"gradient mismatch for '{name}': relative error {err:.3e}"
        )
