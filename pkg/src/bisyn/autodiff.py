"""Dense tensors with reverse-mode gradients.

Storage is 32-bit by default; reductions accumulate in 64-bit before casting
back. Every op here carries a hand-derived backward closure; gradcheck.py is
the safety net that keeps them honest.
"""
from __future__ import annotations

import numpy as np


class NumericError(ArithmeticError):
    """A forward or backward pass produced a non-finite value."""


class EmptyNeighborhoodError(ValueError):
    """A softmax mask selected nothing; signals a graph-construction bug."""


class Tensor:
    """An immutable n-d value on the tape.

    Leaf tensors created with requires_grad=True accumulate gradients in
    .grad after backward(). Optimizer steps may rewrite leaf .data in place;
    everything else is write-once.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, dtype=np.float32,
                 _parents=(), _backward=None):
        if isinstance(data, np.ndarray) and (dtype is None or data.dtype == dtype):
            self.data = data
        else:
            self.data = np.asarray(data, dtype=dtype or np.float32)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def _accum(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Reverse sweep from this scalar; accumulates into leaf .grad."""
        if self.data.ndim != 0:
            raise ValueError("backward() requires a scalar tensor")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Arithmetic sugar; full op set lives at module level.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={tuple(self.shape)}, dtype={self.data.dtype})"


def _needs(*tensors) -> bool:
    return any(t.requires_grad or t._parents for t in tensors)


def _out(data, parents, backward):
    track = _needs(*parents)
    return Tensor(data, dtype=None,
                  _parents=tuple(parents) if track else (),
                  _backward=backward if track else None)


def constant(data, dtype=np.float32) -> Tensor:
    return Tensor(data, dtype=dtype)


def zeros(shape, dtype=np.float32) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype))


def _sum64(a, axis=None):
    # 64-bit accumulation, cast back to the working dtype
    return np.sum(a, axis=axis, dtype=np.float64).astype(a.dtype)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add. Also accepts a 1-d bias against a 2-d left operand."""
    if a.shape == b.shape:
        def bwd(g):
            a._accum(g)
            b._accum(g)
        return _out(a.data + b.data, (a, b), bwd)
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        def bwd(g):
            a._accum(g)
            b._accum(_sum64(g, axis=0))
        return _out(a.data + b.data, (a, b), bwd)
    raise ValueError(f"add: incompatible shapes {a.shape} and {b.shape}")


def mul(a: Tensor, b) -> Tensor:
    """Elementwise product with a tensor of equal shape or a python scalar."""
    if isinstance(b, (int, float)):
        s = float(b)

        def bwd(g):
            a._accum(g * s)
        return _out(a.data * a.data.dtype.type(s), (a,), bwd)
    if a.shape != b.shape:
        raise ValueError(f"mul: incompatible shapes {a.shape} and {b.shape}")

    def bwd(g):
        a._accum(g * b.data)
        b._accum(g * a.data)
    return _out(a.data * b.data, (a, b), bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-d operands")

    def bwd(g):
        a._accum(g @ b.data.T)
        b._accum(a.data.T @ g)
    return _out(a.data @ b.data, (a, b), bwd)


def matvec(x: Tensor, v: Tensor) -> Tensor:
    """(n,m) @ (m,) -> (n,)."""
    def bwd(g):
        x._accum(np.outer(g, v.data))
        v._accum(x.data.T @ g)
    return _out(x.data @ v.data, (x, v), bwd)


def vecmat(v: Tensor, x: Tensor) -> Tensor:
    """(m,) @ (m,k) -> (k,)."""
    def bwd(g):
        v._accum(x.data @ g)
        x._accum(np.outer(v.data, g))
    return _out(v.data @ x.data, (v, x), bwd)


def outer_add(u: Tensor, w: Tensor) -> Tensor:
    """S[i, j] = u[i] + w[j]."""
    def bwd(g):
        u._accum(_sum64(g, axis=1))
        w._accum(_sum64(g, axis=0))
    return _out(u.data[:, None] + w.data[None, :], (u, w), bwd)


def take_rows(x: Tensor, idx) -> Tensor:
    """Gather rows; backward scatter-adds (duplicate indices accumulate)."""
    idx = np.asarray(idx, dtype=np.int64)

    def bwd(g):
        acc = np.zeros_like(x.data)
        np.add.at(acc, idx, g)
        x._accum(acc)
    return _out(x.data[idx], (x,), bwd)


def row(x: Tensor, i: int) -> Tensor:
    def bwd(g):
        acc = np.zeros_like(x.data)
        acc[i] = g
        x._accum(acc)
    return _out(x.data[i].copy(), (x,), bwd)


def add_at_row(x: Tensor, i: int, v: Tensor) -> Tensor:
    """Copy of x with v added to row i."""
    out = x.data.copy()
    out[i] += v.data

    def bwd(g):
        x._accum(g)
        v._accum(g[i])
    return _out(out, (x, v), bwd)


def slice1d(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous slice of a 1-d tensor."""
    def bwd(g):
        acc = np.zeros_like(x.data)
        acc[start:stop] = g
        x._accum(acc)
    return _out(x.data[start:stop].copy(), (x,), bwd)


def concat(parts: list[Tensor]) -> Tensor:
    """1-d concatenation."""
    sizes = [p.data.shape[0] for p in parts]

    def bwd(g):
        off = 0
        for p, s in zip(parts, sizes):
            p._accum(g[off:off + s])
            off += s
    return _out(np.concatenate([p.data for p in parts]), parts, bwd)


def concat_cols(parts: list[Tensor]) -> Tensor:
    """Column-wise concatenation of 2-d blocks with equal row counts."""
    widths = [p.data.shape[1] for p in parts]

    def bwd(g):
        off = 0
        for p, w in zip(parts, widths):
            p._accum(g[:, off:off + w])
            off += w
    return _out(np.concatenate([p.data for p in parts], axis=1), parts, bwd)


def stack_rows(parts: list[Tensor]) -> Tensor:
    """Stack 1-d vectors into a matrix, one per row."""
    def bwd(g):
        for k, p in enumerate(parts):
            p._accum(g[k])
    return _out(np.stack([p.data for p in parts]), parts, bwd)


def mean_rows(x: Tensor) -> Tensor:
    """Column means of a 2-d tensor."""
    n = x.data.shape[0]

    def bwd(g):
        x._accum(np.repeat(g[None, :] / n, n, axis=0).astype(x.data.dtype))
    return _out((_sum64(x.data, axis=0) / n).astype(x.data.dtype), (x,), bwd)


def sum_all(x: Tensor) -> Tensor:
    def bwd(g):
        x._accum(np.full_like(x.data, g))
    return _out(np.asarray(_sum64(x.data)), (x,), bwd)


def relu(x: Tensor) -> Tensor:
    keep = x.data > 0

    def bwd(g):
        x._accum(g * keep)
    return _out(np.where(keep, x.data, 0), (x,), bwd)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    keep = x.data > 0

    def bwd(g):
        x._accum(g * np.where(keep, 1.0, slope).astype(x.data.dtype))
    return _out(np.where(keep, x.data, x.data * x.data.dtype.type(slope)), (x,), bwd)


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    pos = x.data > 0
    expm = alpha * np.expm1(np.minimum(x.data, 0.0))

    def bwd(g):
        x._accum(g * np.where(pos, 1.0, expm + alpha).astype(x.data.dtype))
    return _out(np.where(pos, x.data, expm.astype(x.data.dtype)), (x,), bwd)


def _softmax_masked(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Stable masked softmax of one row; masked-out entries get exactly 0."""
    shifted = scores - np.max(scores[mask])
    e = np.zeros_like(scores)
    e[mask] = np.exp(shifted[mask])
    z = np.sum(e, dtype=np.float64)
    return (e / z).astype(scores.dtype)


def masked_softmax(scores: Tensor, mask) -> Tensor:
    """Softmax over the positions where mask is true; zeros elsewhere.

    Invariant under adding a constant to all unmasked scores. Raises
    EmptyNeighborhoodError on an all-false mask.
    """
    m = np.asarray(mask, dtype=bool)
    if scores.data.ndim != 1 or m.shape != scores.shape:
        raise ValueError("masked_softmax expects matching 1-d score/mask")
    if not m.any():
        raise EmptyNeighborhoodError("empty neighborhood")
    p = _softmax_masked(scores.data, m)

    def bwd(g):
        dot = np.sum(g * p, dtype=np.float64)
        ds = p * (g - dot)
        ds[~m] = 0.0
        scores._accum(ds.astype(scores.data.dtype))
    return _out(p, (scores,), bwd)


def masked_softmax_rows(scores: Tensor, mask) -> Tensor:
    """Row-wise masked softmax of a square score matrix.

    mask[i, j] true means column j participates in row i's softmax. A row
    with an empty mask raises EmptyNeighborhoodError naming the row.
    """
    m = np.asarray(mask, dtype=bool)
    if scores.data.ndim != 2 or m.shape != scores.shape:
        raise ValueError("masked_softmax_rows expects matching 2-d score/mask")
    rows_ok = m.any(axis=1)
    if not rows_ok.all():
        bad = int(np.flatnonzero(~rows_ok)[0])
        raise EmptyNeighborhoodError(f"empty neighborhood for node {bad}")
    neg = np.where(m, scores.data, -np.inf)
    shifted = neg - np.max(neg, axis=1, keepdims=True)
    e = np.where(m, np.exp(np.where(m, shifted, 0.0)), 0.0)
    z = np.sum(e, axis=1, keepdims=True, dtype=np.float64)
    p = (e / z).astype(scores.data.dtype)

    def bwd(g):
        dot = np.sum(g * p, axis=1, keepdims=True, dtype=np.float64)
        ds = p * (g - dot)
        ds[~m] = 0.0
        scores._accum(ds.astype(scores.data.dtype))
    return _out(p, (scores,), bwd)


CROSS_ENTROPY_FLOOR = 1e-12


def cross_entropy(probs: Tensor, gold: int) -> Tensor:
    """-log(probs[gold]) for a probability vector (sums to 1 within 1e-6).

    A zero gold probability is clamped to CROSS_ENTROPY_FLOOR instead of
    emitting Inf; the clamped branch carries no gradient.
    """
    if probs.data.ndim != 1:
        raise ValueError("cross_entropy expects a 1-d probability vector")
    if not 0 <= int(gold) < probs.data.shape[0]:
        raise ValueError(f"gold class {gold} out of range")
    total = np.sum(probs.data, dtype=np.float64)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"probabilities sum to {total:.8f}, not 1")
    pg = float(probs.data[gold])
    clamped = pg < CROSS_ENTROPY_FLOOR
    val = -np.log(max(pg, CROSS_ENTROPY_FLOOR))

    def bwd(g):
        dp = np.zeros_like(probs.data)
        if not clamped:
            dp[gold] = -g / pg
        probs._accum(dp)
    return _out(np.asarray(val, dtype=probs.data.dtype), (probs,), bwd)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None,
            training: bool) -> Tensor:
    """Inverted dropout; identity at rate 0 and always at eval time."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    keep = keep.astype(x.data.dtype)

    def bwd(g):
        x._accum(g * keep)
    return _out(x.data * keep, (x,), bwd)
