"""Finite-difference verification of analytic gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .core import Tensor, precision
from . import functional as F


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(1e-6, np.abs(analytic) + np.abs(numeric))


def grad_check(
    op: Callable[..., Tensor],
    inputs: Sequence[np.ndarray],
    h: float = 1e-3,
    wrt: Sequence[int] | None = None,
    seed: int = 0,
    max_coords: int | None = None,
) -> float:
    """Largest relative error between backprop and central differences.

    ``op`` maps Tensors to a Tensor of any shape; it is contracted with a fixed
    random projection so every output element contributes. Everything runs in
    float64. ``wrt`` restricts which inputs are perturbed (default: all).
    ``max_coords`` samples that many coordinates per input instead of all.
    """
    wrt = range(len(inputs)) if wrt is None else wrt
    wrt = set(wrt)
    base = [np.array(x, dtype=np.float64) for x in inputs]
    picker = np.random.default_rng(seed)

    with precision(np.float64):
        probe = op(*[Tensor(x) for x in base])
        proj = picker.standard_normal(probe.shape)

        def scalar(arrays) -> float:
            out = op(*[Tensor(a) for a in arrays])
            return float(np.sum(out.data * proj))

        tensors = [Tensor(x, requires_grad=i in wrt) for i, x in enumerate(base)]
        loss = F.sum(F.mul(op(*tensors), Tensor(proj)))
        loss.backward()

        worst = 0.0
        for i in sorted(wrt):
            analytic = tensors[i].grad
            if analytic is None:
                analytic = np.zeros_like(base[i])
            flat = base[i].reshape(-1)
            coords = np.arange(flat.size)
            if max_coords is not None and flat.size > max_coords:
                coords = picker.choice(flat.size, size=max_coords, replace=False)
            for c in coords:
                orig = flat[c]
                flat[c] = orig + h
                up = scalar(base)
                flat[c] = orig - h
                down = scalar(base)
                flat[c] = orig
                numeric = (up - down) / (2 * h)
                err = float(relative_error(analytic.reshape(-1)[c], numeric))
                worst = max(worst, err)
    return worst
