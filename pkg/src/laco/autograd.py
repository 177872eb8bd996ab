"""Dense float64 tensors with a reverse-mode gradient tape.

`Tensor` wraps a NumPy array.  While a `Tape` is active (see `tape()`),
every differentiable operation appends a record -- output, inputs and a
vector-Jacobian closure -- in execution order, which is by construction
a valid topological order.  `Tape.backward` replays the records in
reverse and accumulates gradients into `Tensor.grad`.

Conventions:
  * float64 everywhere; inputs are promoted on construction
  * tensors are treated as immutable once created; the optimizer's
    in-place parameter update is the single sanctioned exception
  * broadcasting follows NumPy rules, i.e. implicit expansion happens
    along size-1 axes only
  * `log` floors its argument at `LOG_FLOOR`; the flat region carries
    zero gradient, so downstream code never sees a NaN from a log
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "LOG_FLOOR",
    "DimensionError",
    "Tensor",
    "Tape",
    "tape",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "relu",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "sqrt",
    "clip",
    "tensor_sum",
    "tensor_mean",
    "tensor_max",
    "reshape",
    "transpose",
    "index",
    "gather_rows",
    "concat",
    "conv1d",
    "softmax",
    "stop_gradient",
    "binary_cross_entropy",
]

LOG_FLOOR = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible for the attempted operation."""


class Tensor:
    """A dense float64 array, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # operator sugar; all routes through the module-level ops below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)

    def sum(self, axis=None, keepdims: bool = False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis: int, keepdims: bool = False):
        return tensor_max(self, axis=axis, keepdims=keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes=None):
        return transpose(self, axes)

    @property
    def T(self):
        return transpose(self)


class Tape:
    """Ordered record of executed operations for reverse accumulation."""

    __slots__ = ("_records",)

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, root: Tensor) -> None:
        """Accumulate d(root)/d(leaf) into `.grad` of tracked tensors.

        `root` must be scalar.  Records are replayed in reverse insertion
        order -- a reverse topological order by construction -- so every
        output gradient is complete before its own record is processed.
        The replay is single-threaded and fully deterministic.
        """
        if root.data.size != 1:
            raise DimensionError(
                f"backward root must be scalar, got shape {root.data.shape}"
            )
        root.grad = np.ones_like(root.data)
        for out, inputs, vjp in reversed(self._records):
            gout = out.grad
            if gout is None:
                continue
            for tensor, grad in zip(inputs, vjp(gout)):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor.grad is None:
                    # own the buffer so later accumulation can be in place
                    tensor.grad = np.array(grad)
                else:
                    tensor.grad += grad


_TAPE_STACK: list[Tape] = []


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


@contextmanager
def tape() -> Iterator[Tape]:
    """Activate a fresh tape; ops executed inside the block are recorded."""
    t = Tape()
    _TAPE_STACK.append(t)
    try:
        yield t
    finally:
        _TAPE_STACK.pop()


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _make(data: np.ndarray, inputs: tuple[Tensor, ...], vjp: Callable) -> Tensor:
    t = _active_tape()
    track = t is not None and any(i.requires_grad for i in inputs)
    out = Tensor(data, requires_grad=track)
    if track:
        t._records.append((out, inputs, vjp))
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape == b.data.shape:
        return
    try:
        np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise DimensionError(
            f"{op}: shapes {a.data.shape} and {b.data.shape} do not broadcast"
        ) from None


# ---------------------------------------------------------------------------
# arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "sub")

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return _make(a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")
    ad, bd = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _make(ad * bd, (a, b), vjp)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "div")
    ad, bd = a.data, b.data

    def vjp(g):
        return (
            _unbroadcast(g / bd, ad.shape),
            _unbroadcast(-g * ad / (bd * bd), bd.shape),
        )

    return _make(ad / bd, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)

    def vjp(g):
        return (-g,)

    return _make(-a.data, (a,), vjp)


def matmul(a, b) -> Tensor:
    """Matrix product; stacked (batched) operands share leading dims exactly."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if ad.ndim < 2 or bd.ndim < 2:
        raise DimensionError(
            f"matmul needs >=2-d operands, got shapes {ad.shape} and {bd.shape}"
        )
    if ad.shape[-1] != bd.shape[-2] or ad.shape[:-2] != bd.shape[:-2]:
        raise DimensionError(
            f"matmul: shapes {ad.shape} and {bd.shape} are incompatible"
        )
    need_a, need_b = a.requires_grad, b.requires_grad

    def vjp(g):
        return (
            g @ np.swapaxes(bd, -1, -2) if need_a else None,
            np.swapaxes(ad, -1, -2) @ g if need_b else None,
        )

    return _make(ad @ bd, (a, b), vjp)


# ---------------------------------------------------------------------------
# elementwise nonlinearities


def relu(x) -> Tensor:
    x = as_tensor(x)
    xd = x.data

    def vjp(g):
        return (g * (xd > 0.0),)

    return _make(np.maximum(xd, 0.0), (x,), vjp)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)

    def vjp(g):
        return (g * (1.0 - y * y),)

    return _make(y, (x,), vjp)


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    z = np.exp(-np.abs(x.data))
    y = np.where(x.data >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))

    def vjp(g):
        return (g * y * (1.0 - y),)

    return _make(y, (x,), vjp)


def exp(x) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.data)

    def vjp(g):
        return (g * y,)

    return _make(y, (x,), vjp)


def log(x) -> Tensor:
    """Natural log with the argument floored at LOG_FLOOR (never NaN)."""
    x = as_tensor(x)
    safe = np.maximum(x.data, LOG_FLOOR)
    mask = x.data >= LOG_FLOOR

    def vjp(g):
        return (g * mask / safe,)

    return _make(np.log(safe), (x,), vjp)


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    y = np.sqrt(x.data)

    def vjp(g):
        return (g / (2.0 * y),)

    return _make(y, (x,), vjp)


def clip(x, lo: float, hi: float) -> Tensor:
    """Clamp to [lo, hi]; gradient is zero where the clamp binds."""
    x = as_tensor(x)
    xd = x.data
    mask = (xd >= lo) & (xd <= hi)

    def vjp(g):
        return (g * mask,)

    return _make(np.clip(xd, lo, hi), (x,), vjp)


# ---------------------------------------------------------------------------
# reductions


def _expand_reduced(g: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool):
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = axis if isinstance(axis, tuple) else (axis,)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        for a in sorted(axes):
            g = np.expand_dims(g, a)
    return np.broadcast_to(g, shape)


def tensor_sum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    xshape = x.data.shape

    def vjp(g):
        return (_expand_reduced(np.asarray(g), xshape, axis, keepdims),)

    return _make(x.data.sum(axis=axis, keepdims=keepdims), (x,), vjp)


def tensor_mean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    xshape = x.data.shape
    if axis is None:
        count = x.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = 1
        for a in axes:
            count *= xshape[a % len(xshape)]

    def vjp(g):
        return (_expand_reduced(np.asarray(g) / count, xshape, axis, keepdims),)

    return _make(x.data.mean(axis=axis, keepdims=keepdims), (x,), vjp)


def tensor_max(x, axis: int, keepdims: bool = False) -> Tensor:
    """Maximum along one axis; ties route the gradient to the first index."""
    x = as_tensor(x)
    ax = axis % x.data.ndim
    if x.data.shape[ax] == 0:
        raise DimensionError(f"max over empty axis {axis} of shape {x.data.shape}")
    idx = np.argmax(x.data, axis=ax)
    picked = np.expand_dims(idx, ax)
    y = np.take_along_axis(x.data, picked, ax)
    if not keepdims:
        y = np.squeeze(y, ax)

    def vjp(g):
        gx = np.zeros_like(x.data)
        gg = g if keepdims else np.expand_dims(g, ax)
        np.put_along_axis(gx, picked, gg, ax)
        return (gx,)

    return _make(y, (x,), vjp)


# ---------------------------------------------------------------------------
# shape manipulation


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    orig = x.data.shape

    def vjp(g):
        return (g.reshape(orig),)

    return _make(x.data.reshape(shape), (x,), vjp)


def transpose(x, axes=None) -> Tensor:
    x = as_tensor(x)
    inv = None if axes is None else tuple(np.argsort(axes))

    def vjp(g):
        return (np.transpose(g, inv),)

    return _make(np.transpose(x.data, axes), (x,), vjp)


def index(x, key) -> Tensor:
    """Basic or integer-array indexing; the backward pass scatter-adds."""
    x = as_tensor(x)

    def vjp(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, key, g)
        return (gx,)

    return _make(x.data[key], (x,), vjp)


def gather_rows(x, indices) -> Tensor:
    """Row lookup by integer index; duplicate rows accumulate gradient."""
    return index(x, np.asarray(indices, dtype=np.intp))


def concat(parts: Sequence, axis: int = 0) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), vjp)


# ---------------------------------------------------------------------------
# convolution


def conv1d(x, weights, bias=None, pad_left: int = 0, pad_right: int = 0) -> Tensor:
    """Sliding-window convolution along axis 0 of a (positions, channels) input.

    weights has shape (window, channels, filters); output has shape
    (positions + pad_left + pad_right - window + 1, filters).  Callers
    wanting same-length output pass pad_left + pad_right == window - 1.
    """
    x, weights = as_tensor(x), as_tensor(weights)
    if x.data.ndim != 2 or weights.data.ndim != 3:
        raise DimensionError(
            f"conv1d expects 2-d input and 3-d weights, got {x.data.shape} and "
            f"{weights.data.shape}"
        )
    m, channels = x.data.shape
    window, wc, filters = weights.data.shape
    if window < 1:
        raise DimensionError(f"conv1d window must be >= 1, got {window}")
    if wc != channels:
        raise DimensionError(
            f"conv1d: input channels {channels} != weight channels {wc}"
        )
    padded_len = m + pad_left + pad_right
    if window > padded_len:
        raise DimensionError(
            f"conv1d window {window} larger than padded input length {padded_len}"
        )
    xp = np.zeros((padded_len, channels))
    xp[pad_left : pad_left + m] = x.data
    out_len = padded_len - window + 1
    view = np.lib.stride_tricks.sliding_window_view(xp, window, axis=0)
    cols = np.ascontiguousarray(view.transpose(0, 2, 1)).reshape(out_len, -1)
    w2 = weights.data.reshape(window * channels, filters)
    y = cols @ w2
    inputs: tuple[Tensor, ...]
    if bias is None:
        inputs = (x, weights)
    else:
        bias = as_tensor(bias)
        y = y + bias.data
        inputs = (x, weights, bias)

    def vjp(g):
        gcols = (g @ w2.T).reshape(out_len, window, channels)
        gw = (cols.T @ g).reshape(window, channels, filters)
        gxp = np.zeros_like(xp)
        for o in range(window):
            gxp[o : o + out_len] += gcols[:, o, :]
        gx = gxp[pad_left : pad_left + m]
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=0)

    return _make(y, inputs, vjp)


# ---------------------------------------------------------------------------
# composites


def softmax(x, axis: int = -1) -> Tensor:
    """Numerically stable softmax built from primitive ops."""
    shifted = sub(x, tensor_max(x, axis=axis, keepdims=True))
    e = exp(shifted)
    return div(e, tensor_sum(e, axis=axis, keepdims=True))


def stop_gradient(x) -> Tensor:
    """Same values, detached from the tape."""
    return Tensor(as_tensor(x).data)


def binary_cross_entropy(probs, targets, reduction: str = "sum") -> Tensor:
    """-sum q ln p + (1-q) ln(1-p), with p clamped into [1e-12, 1-1e-12]."""
    p = clip(as_tensor(probs), LOG_FLOOR, 1.0 - LOG_FLOOR)
    q = as_tensor(targets)
    terms = add(mul(q, log(p)), mul(sub(1.0, q), log(sub(1.0, p))))
    total = neg(tensor_sum(terms))
    if reduction == "sum":
        return total
    if reduction == "mean":
        return div(total, float(p.size))
    raise ValueError(f"unknown reduction '{reduction}'")
