"""Reconstruction, KL and weighted cross-entropy terms and their weighted sum.

Every term is returned per example (shape (B,)); batch losses are means over
examples.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..model.network import LatentGaussian
from ..tensor import Tensor, TensorError
from ..tensor import functional as F


class LossError(TensorError):
    pass


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.95
    beta: float = 0.05
    gamma: float = 1.0
    ce_weight_bonafide: float = 0.9

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"loss weight {name} must be nonnegative, got {value}")
        if self.ce_weight_bonafide > 1:
            raise ValueError("ce_weight_bonafide must lie in [0, 1]")

    @property
    def class_weights(self) -> np.ndarray:
        return np.array([self.ce_weight_bonafide, 1.0 - self.ce_weight_bonafide])


def _batched(t: Tensor, dims: int) -> tuple[Tensor, bool]:
    if t.ndim == dims:
        return F.reshape(t, (1,) + t.shape), True
    return t, False


def loss_recon(mel_pred: Tensor, mel_gt, per_example: bool = False) -> Tensor:
    """Mean squared error over the frames both spectrograms share.

    Inputs are (frames, mels) or (B, frames, mels); the longer one is cropped.
    """
    gt = mel_gt if isinstance(mel_gt, Tensor) else Tensor(mel_gt, dtype=mel_pred.dtype)
    pred, single = _batched(mel_pred, 2)
    gt, _ = _batched(gt, 2)
    t = min(pred.shape[-2], gt.shape[-2])
    if t == 0:
        raise LossError("loss_recon: spectrograms share no frames")
    if pred.shape[-2] != t:
        pred = F.slice_axis(pred, -2, 0, t)
    if gt.shape[-2] != t:
        gt = F.slice_axis(gt, -2, 0, t)
    per = F.mean(F.square(F.sub(pred, gt)), axis=(-2, -1))
    if per_example:
        return per
    return F.mean(per) if not single else F.reshape(per, ())


def loss_kl(g: LatentGaussian, per_example: bool = False) -> Tensor:
    """KL to N(0, I), ``-1/2 (2 log sigma + 1 - mu^2 - sigma^2)`` averaged over frames and dims."""
    cells = F.mul(-0.5, F.sub(F.sub(F.add(F.mul(2.0, g.log_sigma), 1.0), F.square(g.mu)),
                              F.exp(F.mul(2.0, g.log_sigma))))
    if g.mu.ndim == 2:
        return F.mean(cells)
    per = F.mean(cells, axis=(-2, -1))
    return per if per_example else F.mean(per)


def loss_cls(logits: Tensor, labels, cfg: LossConfig = LossConfig(), per_example: bool = False) -> Tensor:
    """Class-weighted cross-entropy ``-w[y] log softmax(logits)[y]``.

    ``labels`` holds class indices (0 bonafide, 1 spoof) or label strings.
    """
    from ..model.network import LABEL_INDEX

    logits, single = _batched(logits, 1)
    labels = np.atleast_1d(np.asarray(
        [LABEL_INDEX[l] if isinstance(l, str) else int(l) for l in np.atleast_1d(labels)]
    ))
    onehot = np.zeros(logits.shape, dtype=logits.dtype)
    onehot[np.arange(len(labels)), labels] = cfg.class_weights[labels]
    per = F.mul(-1.0, F.sum(F.mul(F.log_softmax(logits), Tensor(onehot, dtype=logits.dtype)), axis=-1))
    if per_example:
        return per
    return F.reshape(per, ()) if single else F.mean(per)


def total_loss(l_recon, l_kl, l_cls, cfg: LossConfig = LossConfig()):
    """``alpha * recon + beta * kl + gamma * cls`` for Tensors or floats."""
    parts = {"l_recon": l_recon, "l_kl": l_kl, "l_cls": l_cls}
    for name, v in parts.items():
        data = v.data if isinstance(v, Tensor) else np.asarray(v)
        if not np.all(np.isfinite(data)):
            raise LossError(f"total_loss: component {name} is not finite ({data})")
    if not any(isinstance(v, Tensor) for v in parts.values()):
        return cfg.alpha * float(l_recon) + cfg.beta * float(l_kl) + cfg.gamma * float(l_cls)
    return F.add(F.add(F.mul(l_recon, cfg.alpha), F.mul(l_kl, cfg.beta)), F.mul(l_cls, cfg.gamma))

