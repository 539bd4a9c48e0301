"""Differentiable operations on :class:`Tensor`.

Sequence ops (``conv1d``, ``transposed_conv1d``, ``pad1d``) use channel-first
layout ``(..., C, T)``. Dense ops (``linear``, ``layer_norm``, ``attention``)
act on the last axis.
"""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .core import DomainError, ShapeError, Tensor, TensorError, as_tensor


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(out, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(out, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(out, (a, b), backward, "mul")


def square(x: Tensor) -> Tensor:
    out = x.data * x.data
    return Tensor.from_op(out, (x,), lambda g: (2.0 * x.data * g,), "square")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise DomainError("log: input contains non-positive values")
    out = np.log(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g / x.data,), "log")


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)
    return Tensor.from_op(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out = x.data * mask
    return Tensor.from_op(out, (x,), lambda g: (g * mask,), "relu")


def leaky_relu(x: Tensor, slope: float = 0.1) -> Tensor:
    pos = x.data > 0
    out = np.maximum(x.data, x.data * x.dtype.type(slope))
    return Tensor.from_op(out, (x,), lambda g: (np.where(pos, g, g * g.dtype.type(slope)),), "leaky_relu")


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    xd = x.data
    x2 = xd * xd
    inner = _GELU_C * xd * (1.0 + 0.044715 * x2)
    t = np.tanh(inner)
    out = 0.5 * xd * (1.0 + t)

    def backward(g):
        dinner = _GELU_C * (1.0 + 3 * 0.044715 * x2)
        return (g * (0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * dinner),)

    return Tensor.from_op(out, (x,), backward, "gelu")


def clamp(x: Tensor, low: float, high: float) -> Tensor:
    """Clip to [low, high]; zero gradient where clipped."""
    out = np.clip(x.data, low, high)
    inside = (x.data >= low) & (x.data <= high)
    return Tensor.from_op(out, (x,), lambda g: (g * inside,), "clamp")


def maximum(x: Tensor, floor: float) -> Tensor:
    """Elementwise ``max(x, floor)`` against a constant."""
    keep = x.data > floor
    out = np.where(keep, x.data, floor).astype(x.dtype)
    return Tensor.from_op(out, (x,), lambda g: (g * keep,), "maximum")


# ---------------------------------------------------------------------------
# reductions and shape manipulation
# ---------------------------------------------------------------------------

def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    out = np.sum(x.data, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = np.mean(x.data, axis=axis, keepdims=keepdims)
    count = x.data.size // max(np.asarray(out).size, 1)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g / count, x.shape).astype(x.dtype),)

    return Tensor.from_op(np.asarray(out, dtype=x.dtype), (x,), backward, "mean")


def reshape(x: Tensor, shape) -> Tensor:
    out = x.data.reshape(shape)
    return Tensor.from_op(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def swapaxes(x: Tensor, a: int = -1, b: int = -2) -> Tensor:
    out = np.swapaxes(x.data, a, b)
    return Tensor.from_op(out, (x,), lambda g: (np.swapaxes(g, a, b),), "swapaxes")


def slice_last(x: Tensor, start: int, stop: int) -> Tensor:
    """``x[..., start:stop]``."""
    out = x.data[..., start:stop]

    def backward(g):
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return Tensor.from_op(out, (x,), backward, "slice")


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = x.data[index]

    def backward(g):
        full = np.zeros_like(x.data)
        full[index] = g
        return (full,)

    return Tensor.from_op(out, (x,), backward, "slice")


def pad1d(x: Tensor, left: int, right: int) -> Tensor:
    """Zero-pad the last axis explicitly."""
    widths = [(0, 0)] * (x.ndim - 1) + [(left, right)]
    out = np.pad(x.data, widths)
    n = x.shape[-1]
    return Tensor.from_op(out, (x,), lambda g: (g[..., left:left + n],), "pad1d")


# ---------------------------------------------------------------------------
# dense layers
# ---------------------------------------------------------------------------

def matmul(x: Tensor, w: Tensor) -> Tensor:
    """``x @ w`` with ``w`` 2-d and any number of leading axes on ``x``."""
    x, w = as_tensor(x), as_tensor(w)
    if w.ndim != 2:
        raise ShapeError(f"matmul: weight must be 2-d, got shape {w.shape}")
    if x.shape[-1] != w.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ ({x.shape} @ {w.shape})")
    x2 = np.ascontiguousarray(x.data).reshape(-1, w.shape[0])
    out = (x2 @ w.data).reshape(x.shape[:-1] + (w.shape[1],))

    def backward(g):
        g2 = np.ascontiguousarray(g).reshape(-1, w.shape[1])
        gx = (g2 @ w.data.T).reshape(x.shape) if x.requires_grad else None
        gw = x2.T @ g2 if w.requires_grad else None
        return gx, gw

    return Tensor.from_op(out, (x, w), backward, "matmul")


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x W + b``; ``W`` is (in, out)."""
    y = matmul(x, w)
    if b is None:
        return y
    if b.shape != (w.shape[1],):
        raise ShapeError(f"linear: bias shape {b.shape} does not match output width {w.shape[1]}")
    return add(y, b)


def bmm(a: Tensor, b: Tensor) -> Tensor:
    """Batched matrix product with matching leading axes."""
    if a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"bmm: incompatible shapes {a.shape} and {b.shape}")
    out = np.matmul(a.data, b.data)

    def backward(g):
        return np.matmul(g, np.swapaxes(b.data, -1, -2)), np.matmul(np.swapaxes(a.data, -1, -2), g)

    return Tensor.from_op(out, (a, b), backward, "bmm")


def softmax(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return Tensor.from_op(out, (x,), backward, "softmax")


def log_softmax(x: Tensor) -> Tensor:
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=-1, keepdims=True),)

    return Tensor.from_op(out, (x,), backward, "log_softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalise over the last axis, then scale and shift."""
    xd = x.data
    mu = xd.mean(axis=-1, keepdims=True)
    centered = xd - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    out = xhat * gamma.data + beta.data
    n = xd.shape[-1]

    def backward(g):
        gxhat = g * gamma.data
        gx = inv * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                    - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        ggamma = (g * xhat).reshape(-1, n).sum(axis=0)
        gbeta = g.reshape(-1, n).sum(axis=0)
        return gx, ggamma, gbeta

    return Tensor.from_op(out, (x, gamma, beta), backward, "layer_norm")


def attention(q: Tensor, k: Tensor, v: Tensor) -> Tensor:
    """Single-head scaled dot-product attention, ``softmax(q k^T / sqrt(d)) v``."""
    if not (q.shape == k.shape and q.shape[:-1] == v.shape[:-1]):
        raise ShapeError(f"attention: q{q.shape}, k{k.shape}, v{v.shape} do not align")
    d = q.shape[-1]
    scores = mul(bmm(q, swapaxes(k, -1, -2)), 1.0 / math.sqrt(d))
    return bmm(softmax(scores), v)


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------

def _frames(x: np.ndarray, k: int, stride: int, n_out: int) -> np.ndarray:
    """View ``(..., C, T)`` as ``(..., C, n_out, k)`` windows without copying."""
    st = x.strides
    shape = x.shape[:-1] + (n_out, k)
    strides = st[:-1] + (st[-1] * stride, st[-1])
    return as_strided(x, shape=shape, strides=strides, writeable=False)


def conv1d(x: Tensor, kernels: Tensor, stride: int = 1) -> Tensor:
    """Valid (unpadded) 1-d cross-correlation.

    ``x`` is (..., C_in, T), ``kernels`` is (C_out, C_in, k); the output is
    (..., C_out, floor((T - k) / stride) + 1).
    """
    if stride < 1:
        raise TensorError(f"conv1d: stride must be >= 1, got {stride}")
    c_out, c_in, k = kernels.shape
    if x.shape[-2] != c_in:
        raise ShapeError(f"conv1d: input has {x.shape[-2]} channels, kernels expect {c_in}")
    t = x.shape[-1]
    if t < k:
        raise ShapeError(f"conv1d: input too short ({t} samples) for kernel width {k}")
    n_out = (t - k) // stride + 1
    xd = np.ascontiguousarray(x.data)
    lead = xd.shape[:-2]
    win = _frames(xd, k, stride, n_out)                       # (..., C_in, n_out, k)
    cols = np.moveaxis(win, -3, -2).reshape(-1, c_in * k)    # rows: (..., n_out)
    wmat = kernels.data.reshape(c_out, c_in * k)
    out = np.swapaxes((cols @ wmat.T).reshape(lead + (n_out, c_out)), -1, -2)

    def backward(g):
        gt = np.ascontiguousarray(np.swapaxes(g, -1, -2)).reshape(-1, c_out)
        gw = None
        if kernels.requires_grad:
            gw = (gt.T @ cols).reshape(kernels.shape)
        gx = None
        if x.requires_grad:
            gcols = (gt @ wmat).reshape(lead + (n_out, c_in, k))
            gcols = np.moveaxis(gcols, -2, -3)                # (..., C_in, n_out, k)
            gx = np.zeros(xd.shape, dtype=xd.dtype)
            span = stride * (n_out - 1) + 1
            for j in range(k):
                gx[..., j:j + span:stride] += gcols[..., j]
        return gx, gw

    return Tensor.from_op(np.ascontiguousarray(out), (x, kernels), backward, "conv1d")


def transposed_conv1d(x: Tensor, kernels: Tensor, stride: int) -> Tensor:
    """Upsample by ``stride`` with a transposed convolution of width ``2 * stride``.

    ``x`` is (..., C_in, T) and ``kernels`` is (C_in, C_out, 2 * stride). The
    full transposed-convolution output has (T + 1) * stride samples; it is
    cropped by ``stride // 2`` on the left to exactly T * stride. This is the
    adjoint of a stride-``stride`` convolution over the same kernels.
    """
    return swapaxes(transposed_conv1d_tc(swapaxes(x, -1, -2), kernels, stride), -1, -2)


def transposed_conv1d_tc(x: Tensor, kernels: Tensor, stride: int) -> Tensor:
    """:func:`transposed_conv1d` in time-major layout: (..., T, C_in) -> (..., T * stride, C_out)."""
    c_in, c_out, k = kernels.shape
    s = stride
    if k != 2 * s:
        raise TensorError(f"transposed_conv1d: kernel width {k} must equal 2 * stride ({2 * s})")
    if x.shape[-1] != c_in:
        raise ShapeError(f"transposed_conv1d: input has {x.shape[-1]} channels, kernels expect {c_in}")
    t = x.shape[-2]
    lead = x.shape[:-2]
    off = s // 2
    row = s * c_out
    x2 = np.ascontiguousarray(x.data).reshape(-1, c_in)
    wmat = np.ascontiguousarray(np.transpose(kernels.data, (0, 2, 1))).reshape(c_in, k * c_out)
    p = (x2 @ wmat).reshape(lead + (t, 2, row))     # first/second half of each kernel
    full = np.empty(lead + (t + 1, row), dtype=p.dtype)
    full[..., :t, :] = p[..., 0, :]
    full[..., t, :] = 0
    full[..., 1:, :] += p[..., 1, :]
    out = full.reshape(lead + ((t + 1) * s, c_out))[..., off:off + t * s, :]

    def backward(g):
        gfull = np.zeros(lead + ((t + 1) * s, c_out), dtype=g.dtype)
        gfull[..., off:off + t * s, :] = g
        gfull = gfull.reshape(lead + (t + 1, row))
        gp = np.stack([gfull[..., :t, :], gfull[..., 1:, :]], axis=-2).reshape(-1, k * c_out)
        gw = None
        if kernels.requires_grad:
            gw = np.transpose((x2.T @ gp).reshape(c_in, k, c_out), (0, 2, 1))
        gx = (gp @ wmat.T).reshape(x.shape) if x.requires_grad else None
        return gx, gw

    return Tensor.from_op(np.ascontiguousarray(out), (x, kernels), backward, "transposed_conv1d")
