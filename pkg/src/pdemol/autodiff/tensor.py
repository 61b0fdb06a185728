"""Reverse-mode automatic differentiation over dense numpy arrays.

Nodes are created in evaluation order onto an active Tape; since the graph
is built by executing the forward pass, creation order is already a
topological order and backward() just walks it in reverse, calling each
node's pull-back closure.  With no active tape the ops run plain numpy
(inference mode).  Broadcasting is limited to bias-style adds; everything
else is shape-strict.
"""

from __future__ import annotations

import numpy as np

_TAPE_STACK: list["Tape"] = []


class ContractViolation(ValueError):
    """Shape or argument contract broken by the caller."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "_backward")

    def __init__(self, data, requires_grad: bool = False, op: str = "leaf"):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.op = op
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r}, grad={self.grad is not None})"


class Tape:
    """Op records in creation (= topological) order."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, *exc):
        _TAPE_STACK.pop()
        return False


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _record(out: Tensor, backward) -> Tensor:
    tape = _active_tape()
    if tape is not None and out.requires_grad:
        out._backward = backward
        tape.nodes.append(out)
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a gradient back to the shape of a broadcast operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def backward(tape: Tape, loss: Tensor) -> None:
    """Seed d(loss)=1 and pull gradients back through the tape."""
    if loss.data.size != 1:
        raise ContractViolation("backward expects a scalar loss")
    loss.grad = np.ones_like(loss.data)
    for node in reversed(tape.nodes):
        if node.grad is not None and node._backward is not None:
            node._backward(node.grad)


# --------------------------------------------------------------------------
# ops


def constant(data, dtype=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=False, op="const")


def parameter(data) -> Tensor:
    return Tensor(np.asarray(data), requires_grad=True, op="param")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product; 2-D weights broadcast over batch dims."""
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ContractViolation(f"matmul inner dims {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data, a.requires_grad or b.requires_grad, op="matmul")

    def bwd(g):
        if a.requires_grad:
            ga = g @ np.swapaxes(b.data, -1, -2)
            _accum(a, _unbroadcast(ga, a.data.shape))
        if b.requires_grad:
            if b.data.ndim == 2 and a.data.ndim > 2:
                # weight shared over batch dims: one flattened GEMM
                k, n = b.data.shape
                gb = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            else:
                gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)
            _accum(b, gb)

    return _record(out, bwd)


def add(a: Tensor, b: Tensor) -> Tensor:
    out = Tensor(a.data + b.data, a.requires_grad or b.requires_grad, op="add")

    def bwd(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _record(out, bwd)


def scale(a: Tensor, s: float) -> Tensor:
    s = float(s)
    out = Tensor(a.data * s, a.requires_grad, op="scale")

    def bwd(g):
        _accum(a, g * s)

    return _record(out, bwd)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, a.requires_grad, op="softmax")

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        _accum(a, y * (g - dot))

    return _record(out, bwd)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gain.data + bias.data,
                 x.requires_grad or gain.requires_grad or bias.requires_grad,
                 op="layer_norm")

    def bwd(g):
        if gain.requires_grad:
            _accum(gain, _unbroadcast(g * xhat, gain.data.shape))
        if bias.requires_grad:
            _accum(bias, _unbroadcast(g, bias.data.shape))
        if x.requires_grad:
            gh = g * gain.data
            m1 = gh.mean(axis=-1, keepdims=True)
            m2 = (gh * xhat).mean(axis=-1, keepdims=True)
            _accum(x, inv * (gh - m1 - xhat * m2))

    return _record(out, bwd)


_GELU_C = np.sqrt(2.0 / np.pi)


def gelu(x: Tensor) -> Tensor:
    """tanh-approximation GELU."""
    dt = x.data.dtype.type
    x2 = x.data * x.data
    u = dt(_GELU_C) * (x.data + dt(0.044715) * x2 * x.data)
    th = np.tanh(u)
    y = dt(0.5) * x.data * (dt(1.0) + th)
    out = Tensor(y, x.requires_grad, op="gelu")

    def bwd(g):
        du = dt(_GELU_C) * (dt(1.0) + dt(3 * 0.044715) * x2)
        dy = dt(0.5) * (dt(1.0) + th) + dt(0.5) * x.data * (dt(1.0) - th * th) * du
        _accum(x, g * dy)

    return _record(out, bwd)


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    ids = np.asarray(ids)
    if ids.max(initial=0) >= table.data.shape[0] or ids.min(initial=0) < 0:
        raise ContractViolation("token id outside embedding table")
    out = Tensor(table.data[ids], table.requires_grad, op="embedding")

    def bwd(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.data.shape[1]))
        _accum(table, gt)

    return _record(out, bwd)


def concat(parts: list[Tensor], axis: int) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis),
                 any(p.requires_grad for p in parts), op="concat")
    sizes = [p.data.shape[axis] for p in parts]

    def bwd(g):
        splits = np.split(g, np.cumsum(sizes)[:-1], axis=axis)
        for p, gp in zip(parts, splits):
            if p.requires_grad:
                _accum(p, gp)

    return _record(out, bwd)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    key = [slice(None)] * x.data.ndim
    key[axis] = slice(start, stop)
    key = tuple(key)
    out = Tensor(x.data[key], x.requires_grad, op="slice")

    def bwd(g):
        gx = np.zeros_like(x.data)
        gx[key] = g
        _accum(x, gx)

    return _record(out, bwd)


def transpose(x: Tensor, axes: tuple) -> Tensor:
    out = Tensor(np.transpose(x.data, axes), x.requires_grad, op="transpose")
    inv = tuple(np.argsort(axes))

    def bwd(g):
        _accum(x, np.transpose(g, inv))

    return _record(out, bwd)


def reshape(x: Tensor, shape: tuple) -> Tensor:
    out = Tensor(x.data.reshape(shape), x.requires_grad, op="reshape")

    def bwd(g):
        _accum(x, g.reshape(x.data.shape))

    return _record(out, bwd)


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    target = np.asarray(target, dtype=pred.data.dtype)
    if target.shape != pred.data.shape:
        raise ContractViolation("mse_loss shape mismatch")
    diff = pred.data - target
    out = Tensor(np.asarray((diff * diff).mean()), pred.requires_grad, op="mse")

    def bwd(g):
        _accum(pred, g * 2.0 * diff / diff.size)

    return _record(out, bwd)


def cross_entropy_loss(logits: Tensor, targets: np.ndarray, pad_id: int) -> Tensor:
    """Mean token-level cross entropy; positions with target == pad_id are
    ignored."""
    t = np.asarray(targets)
    if t.shape != logits.data.shape[:-1]:
        raise ContractViolation("cross_entropy target shape mismatch")
    mask = t != pad_id
    n = int(mask.sum())
    if n == 0:
        raise ContractViolation("all targets are padding")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    sez = ez.sum(axis=-1, keepdims=True)
    lse = np.log(sez[..., 0])
    tz = np.take_along_axis(z, np.where(mask, t, 0)[..., None], axis=-1)[..., 0]
    nll = np.where(mask, lse - tz, 0.0)
    out = Tensor(np.asarray(nll.sum() / n, dtype=logits.data.dtype),
                 logits.requires_grad, op="cross_entropy")

    def bwd(g):
        p = ez / sez
        np.subtract.at(p, (*np.nonzero(mask), t[mask]), 1.0)
        p *= mask[..., None] / n
        _accum(logits, g * p)

    return _record(out, bwd)
