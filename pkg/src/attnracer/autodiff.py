"""Dense float64 tensors with a reverse-mode gradient tape.

Everything is numpy-backed and deliberately small: the op set is just what a
few conv layers, dense heads, softmax attention and a PPO loss need. Ops
record a backward rule on the active tape (if any); `Tape.backward` replays
the records in reverse. No broadcasting beyond the bias add in `dense` and
python-float scalars; operand shapes must conform exactly.
"""
from __future__ import annotations

import threading
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class ShapeMismatch(ValueError):
    """Operand shapes do not conform. Message names the offending axes."""


class Tensor:
    """n-d float64 array plus an optional gradient buffer of the same shape."""

    __slots__ = ("data", "grad")

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float64)
        self.data = arr
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape})"

    # arithmetic sugar; delegates to the recorded ops below
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)


_ACTIVE = threading.local()


def _active_tape() -> "Tape | None":
    return getattr(_ACTIVE, "tape", None)


class Tape:
    """Ordered record of operations; append order is the topological order."""

    def __init__(self):
        # each record: (input tensors, output tensor, backward rule)
        self._records: list[tuple[tuple[Tensor, ...], Tensor, Callable]] = []

    def __enter__(self) -> "Tape":
        if _active_tape() is not None:
            raise RuntimeError("a tape is already active on this thread")
        _ACTIVE.tape = self
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.tape = None

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor, params: Iterable[Tensor] = ()) -> None:
        """Fill `.grad` of every tensor on the tape with d(loss)/d(tensor).

        `loss` must be a scalar produced on this tape. Tensors in `params`
        that never reached the tape get zero gradients.
        """
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        on_tape = any(rec[1] is loss for rec in self._records)
        if not on_tape:
            raise ValueError("loss was not produced on this tape")
        seen: set[int] = set()
        for inputs, out, _ in self._records:
            for t in (*inputs, out):
                if id(t) not in seen:
                    seen.add(id(t))
                    t.grad = np.zeros_like(t.data)
        for p in params:
            if id(p) not in seen:
                p.grad = np.zeros_like(p.data)
        loss.grad = np.ones_like(loss.data)
        for inputs, out, back in reversed(self._records):
            grads = back(out.grad)
            for t, g in zip(inputs, grads):
                if g is not None:
                    t.grad += g


def _record(inputs: tuple[Tensor, ...], out: Tensor, back: Callable) -> Tensor:
    tape = _active_tape()
    if tape is not None:
        tape._records.append((inputs, out, back))
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeMismatch(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


# ---------------------------------------------------------------------------
# elementwise / reduction ops


def add(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        out = Tensor(a.data + float(b))
        return _record((a,), out, lambda g: (g,))
    b = _as_tensor(b)
    _check_same_shape("add", a, b)
    out = Tensor(a.data + b.data)
    return _record((a, b), out, lambda g: (g, g))


def sub(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        out = Tensor(a.data - float(b))
        return _record((a,), out, lambda g: (g,))
    b = _as_tensor(b)
    _check_same_shape("sub", a, b)
    out = Tensor(a.data - b.data)
    return _record((a, b), out, lambda g: (g, -g))


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        c = float(b)
        out = Tensor(a.data * c)
        return _record((a,), out, lambda g: (g * c,))
    b = _as_tensor(b)
    _check_same_shape("mul", a, b)
    out = Tensor(a.data * b.data)
    ad, bd = a.data, b.data
    return _record((a, b), out, lambda g: (g * bd, g * ad))


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data)
    return _record((a,), out, lambda g: (-g,))


def exp(a: Tensor) -> Tensor:
    out = Tensor(np.exp(a.data))
    od = out.data
    return _record((a,), out, lambda g: (g * od,))


def minimum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise min; ties route the gradient to `a`."""
    b = _as_tensor(b)
    _check_same_shape("minimum", a, b)
    take_a = a.data <= b.data
    out = Tensor(np.where(take_a, a.data, b.data))
    return _record((a, b), out, lambda g: (g * take_a, g * ~take_a))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    out = Tensor(np.clip(a.data, lo, hi))
    inside = (a.data >= lo) & (a.data <= hi)
    return _record((a,), out, lambda g: (g * inside,))


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0.0))
    pos = a.data > 0
    return _record((a,), out, lambda g: (g * pos,))


def tanh(a: Tensor) -> Tensor:
    out = Tensor(np.tanh(a.data))
    od = out.data
    return _record((a,), out, lambda g: (g * (1.0 - od * od),))


def tsum(a: Tensor) -> Tensor:
    out = Tensor(a.data.sum())
    shape = a.data.shape
    return _record((a,), out, lambda g: (np.full(shape, float(g)),))


def mean(a: Tensor) -> Tensor:
    out = Tensor(a.data.mean())
    shape, n = a.data.shape, a.data.size
    return _record((a,), out, lambda g: (np.full(shape, float(g) / n),))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    old = a.data.shape
    out = Tensor(a.data.reshape(shape))
    return _record((a,), out, lambda g: (g.reshape(old),))


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = Tensor(a.data.transpose(axes))
    return _record((a,), out, lambda g: (g.transpose(inv),))


# ---------------------------------------------------------------------------
# softmax family


def softmax(a: Tensor) -> Tensor:
    """Stable softmax over the last axis; rejects NaN input."""
    if np.isnan(a.data).any():
        raise FloatingPointError("softmax: NaN in input")
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = Tensor(e / e.sum(axis=-1, keepdims=True))
    od = out.data

    def back(g):
        dot = (g * od).sum(axis=-1, keepdims=True)
        return ((g - dot) * od,)

    return _record((a,), out, back)


def _log_softmax(x: np.ndarray) -> np.ndarray:
    m = x.max(axis=-1, keepdims=True)
    s = x - m
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def log_prob(logits: Tensor, actions) -> Tensor:
    """Log-probability of category `actions` under softmax(logits).

    1-D logits with an int action, or (B, A) logits with B int actions.
    """
    acts = np.asarray(actions)
    n_cat = logits.data.shape[-1]
    if acts.min() < 0 or acts.max() >= n_cat:
        raise IndexError(f"category out of range [0, {n_cat})")
    logp = _log_softmax(logits.data)
    if logits.data.ndim == 1:
        out = Tensor(logp[int(acts)])
        p = np.exp(logp)

        def back1(g):
            d = -p * float(g)
            d[int(acts)] += float(g)
            return (d,)

        return _record((logits,), out, back1)
    if logits.data.ndim != 2 or acts.shape != (logits.data.shape[0],):
        raise ShapeMismatch(
            f"log_prob: logits {logits.data.shape} with actions {acts.shape}"
        )
    rows = np.arange(logits.data.shape[0])
    out = Tensor(logp[rows, acts])
    p = np.exp(logp)

    def back(g):
        d = -p * g[:, None]
        d[rows, acts] += g
        return (d,)

    return _record((logits,), out, back)


def entropy(logits: Tensor) -> Tensor:
    """Entropy -sum(p log p) of softmax(logits) over the last axis."""
    logp = _log_softmax(logits.data)
    p = np.exp(logp)
    plogp = np.where(p > 0, p * logp, 0.0)
    out = Tensor(-plogp.sum(axis=-1))
    h = out.data

    def back(g):
        ge = np.expand_dims(g, -1)
        he = np.expand_dims(h, -1) if np.ndim(h) else h
        return (ge * (-p * (logp + he)),)

    return _record((logits,), out, back)


# ---------------------------------------------------------------------------
# conv / dense


def _conv_out_size(n: int, k: int, stride: int, padding: int) -> int:
    return (n + 2 * padding - k) // stride + 1


def _corr4(x: np.ndarray, w: np.ndarray, stride: int, padding: int):
    """Cross-correlate (N,C,H,W) with (Cout,C,kh,kw); returns output and the
    im2col matrix (kept for the weight gradient)."""
    n, c, h, wd = x.shape
    cout, _, kh, kw = w.shape
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = _conv_out_size(h, kh, stride, padding)
    ow = _conv_out_size(wd, kw, stride, padding)
    win = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    # (N,C,OH,OW,kh,kw) -> (N*OH*OW, C*kh*kw)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * oh * ow, c * kh * kw)
    y = cols @ w.reshape(cout, -1).T
    return y.reshape(n, oh, ow, cout).transpose(0, 3, 1, 2), cols


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of (C,H,W) or (N,C,H,W) input with a
    (Cout,Cin,kh,kw) kernel."""
    if stride < 1:
        raise ValueError(f"conv2d: stride must be >= 1, got {stride}")
    batched = x.data.ndim == 4
    xd = x.data if batched else x.data[None]
    if xd.ndim != 4 or kernel.data.ndim != 4:
        raise ShapeMismatch(
            f"conv2d: input rank {x.data.ndim} (want 3 or 4), kernel rank "
            f"{kernel.data.ndim} (want 4)"
        )
    n, c, h, w = xd.shape
    cout, cin, kh, kw = kernel.data.shape
    if cin != c:
        raise ShapeMismatch(f"conv2d: input channels {c} != kernel channels {cin}")
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ShapeMismatch(
            f"conv2d: kernel ({kh},{kw}) exceeds padded input "
            f"({h + 2 * padding},{w + 2 * padding}) on spatial axes"
        )
    y, cols = _corr4(xd, kernel.data, stride, padding)
    out = Tensor(y if batched else y[0])
    wd = kernel.data

    def back(g):
        g4 = g if batched else g[None]
        oh, ow = g4.shape[2], g4.shape[3]
        gm = g4.transpose(0, 2, 3, 1).reshape(-1, cout)
        dw = (gm.T @ cols).reshape(cout, cin, kh, kw)
        # input grad: transposed conv = zero-stuffed full correlation with
        # the spatially flipped, channel-swapped kernel
        hp, wp = h + 2 * padding, w + 2 * padding
        gu = np.zeros((n, cout, (oh - 1) * stride + 1, (ow - 1) * stride + 1))
        gu[:, :, ::stride, ::stride] = g4
        wrot = wd[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
        gu = np.pad(gu, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        dxp_core, _ = _corr4(gu, wrot, 1, 0)
        dxp = np.zeros((n, c, hp, wp))
        ch, cw = dxp_core.shape[2], dxp_core.shape[3]
        dxp[:, :, :ch, :cw] = dxp_core
        dx = dxp[:, :, padding:padding + h, padding:padding + w]
        return (dx if batched else dx[0], dw)

    return _record((x, kernel), out, back)


def dense(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map: out[m] = sum_n weight[m,n] * x[n] + bias[m].

    Accepts (N,) input or a (B,N) batch.
    """
    m, n = weight.data.shape
    batched = x.data.ndim == 2
    if x.data.shape[-1] != n or x.data.ndim > 2:
        raise ShapeMismatch(
            f"dense: input {x.data.shape} does not conform to weight ({m},{n})"
        )
    if bias.data.shape != (m,):
        raise ShapeMismatch(f"dense: bias {bias.data.shape} != ({m},)")
    out = Tensor(x.data @ weight.data.T + bias.data)
    xd, wd = x.data, weight.data

    def back(g):
        if batched:
            return (g @ wd, g.T @ xd, g.sum(axis=0))
        return (g @ wd, np.outer(g, xd), g)

    return _record((x, weight, bias), out, back)


# ---------------------------------------------------------------------------
# attention helpers


def scale_rows(ann: Tensor, w: Tensor) -> Tensor:
    """Scale each row: out[..., l, :] = w[..., l] * ann[..., l, :]."""
    if ann.data.shape[:-1] != w.data.shape:
        raise ShapeMismatch(
            f"scale_rows: rows {ann.data.shape[:-1]} != weights {w.data.shape}"
        )
    out = Tensor(ann.data * w.data[..., None])
    ad, wd = ann.data, w.data

    def back(g):
        return (g * wd[..., None], (g * ad).sum(axis=-1))

    return _record((ann, w), out, back)


def context(ann: Tensor, w: Tensor) -> Tensor:
    """Convex combination of rows: out[..., d] = sum_l w[..., l] ann[..., l, d]."""
    if ann.data.shape[:-1] != w.data.shape:
        raise ShapeMismatch(
            f"context: rows {ann.data.shape[:-1]} != weights {w.data.shape}"
        )
    out = Tensor(np.einsum("...l,...ld->...d", w.data, ann.data))
    ad, wd = ann.data, w.data

    def back(g):
        dann = wd[..., None] * np.expand_dims(g, -2)
        dw = np.einsum("...ld,...d->...l", ad, g)
        return (dann, dw)

    return _record((ann, w), out, back)
