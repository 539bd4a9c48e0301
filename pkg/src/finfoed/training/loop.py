"""Mini-batch training with a reconstruction-only warm-up followed by a frozen-backbone phase."""
from __future__ import annotations

import json
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..audio import RawBoostConfig, mel_spectrogram, rawboost_augment, read_wav, standardize_clip
from ..data import DatasetManifest
from ..model import ENTROPY_SHIFT, LABEL_INDEX, Model, ModelConfig, frame_entropy, reparameterize, sample_noise
from ..tensor import AdamState, Rng, Tensor, adam_step, no_grad
from ..tensor import functional as F
from .checkpoint import Checkpoint, save_checkpoint
from .losses import LossConfig, LossError, loss_cls, loss_kl, loss_recon, total_loss

WARMUP_GROUPS = ("backbone", "encoder", "decoder")
MAIN_GROUPS = ("adapter", "encoder", "decoder", "classifier")

# stream keys for Rng.split; distinct so shuffling, noise and augmentation never share draws
_SHUFFLE, _NOISE, _AUGMENT = 1, 2, 3


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 3e-5
    batch_size: int = 8
    epochs: int = 50
    seed: int = 0
    warmup_epochs: int = 5
    augment: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.lr > 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.warmup_epochs < 0:
            raise ValueError(f"warmup_epochs must be >= 0, got {self.warmup_epochs}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ClipSet:
    """Standardised waveforms of one subset, held in memory."""

    paths: list[str]
    waves: np.ndarray    # (n, clip_samples) float32
    labels: np.ndarray   # (n,) int

    @classmethod
    def load(cls, manifest: DatasetManifest, subset: str, clip_samples: int) -> "ClipSet":
        entries = manifest.subset(subset)
        if not entries:
            raise TrainingError(f"subset {subset!r} is empty")
        waves = np.stack([standardize_clip(read_wav(manifest.resolve(e)), clip_samples) for e in entries])
        labels = np.array([LABEL_INDEX[e.label] for e in entries], dtype=np.int64)
        return cls([e.path for e in entries], waves.astype(np.float32), labels)

    def __len__(self) -> int:
        return len(self.paths)


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[dict] = field(default_factory=list)


def score_waves(model: Model, waves: np.ndarray, batch_size: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic bonafide log-odds and frame entropies for a stack of clips."""
    margins, entropies = [], []
    for start in range(0, len(waves), batch_size):
        m, h = model.log_odds(waves[start:start + batch_size])
        margins.append(m)
        entropies.append(h)
    return np.concatenate(margins), np.concatenate(entropies)


def reference_entropy(model: Model, waves: np.ndarray, batch_size: int = 16) -> float:
    """Mean frame entropy over ``waves``; the classifier's corpus-level shift."""
    total = 0.0
    for start in range(0, len(waves), batch_size):
        total += float(model.frame_entropies(waves[start:start + batch_size]).astype(np.float64).sum())
    return total / (len(waves) * model.cfg.frames)


class _Step:
    """One forward/backward pass over a batch; returns per-term batch means."""

    def __init__(self, model: Model, loss_cfg: LossConfig):
        self.model = model
        self.loss_cfg = loss_cfg

    def __call__(self, waves: np.ndarray, mel_gt: np.ndarray, labels: np.ndarray,
                 eps: np.ndarray, warmup: bool) -> dict[str, float]:
        model, cfg = self.model, self.loss_cfg
        feats = model.backbone_forward(waves, frozen=not warmup, adapters=not warmup)
        g = model.encode(feats)
        need_recon = cfg.alpha > 0
        # during warm-up these terms are logged but not optimised
        with no_grad() if warmup else nullcontext():
            l_cls = loss_cls(model.classify(frame_entropy(g)), labels, cfg)
            l_kl = loss_kl(g)
        if need_recon:
            recon = model.decode(reparameterize(g, eps))
            l_recon = loss_recon(model.mel(recon), mel_gt)
        else:
            l_recon = Tensor(0.0)
        if warmup:
            objective = F.mul(l_recon, cfg.alpha)
            total_loss(l_recon, l_kl, l_cls, cfg)  # finiteness check on every logged term
        else:
            objective = total_loss(l_recon, l_kl, l_cls, cfg)
        if objective.requires_grad:
            objective.backward()
        return {"l_recon": l_recon.item(), "l_kl": l_kl.item(), "l_cls": l_cls.item(),
                "total": objective.item()}


def _snapshot(model: Model) -> dict[str, np.ndarray]:
    return {**{k: v.data.copy() for k, v in model.params.items()},
            **{k: v.copy() for k, v in model.buffers.items()}}


def train(manifest: DatasetManifest, model_cfg: ModelConfig = ModelConfig(),
          train_cfg: TrainConfig = TrainConfig(), loss_cfg: LossConfig = LossConfig(),
          log_path: str | Path | None = None, checkpoint_path: str | Path | None = None,
          on_epoch: Callable[[dict], None] | None = None,
          augment_cfg: RawBoostConfig = RawBoostConfig()) -> TrainResult:
    """Train a fresh model on the ``train`` subset, selecting by ``dev`` EER.

    The first ``warmup_epochs`` epochs fit backbone, encoder and decoder to
    ``alpha * recon``. Afterwards the backbone is frozen, the classifier's
    reference entropy is fixed to the mean over the training clips, and
    adapters, encoders, decoder and classifier minimise the full weighted
    loss. The
    returned checkpoint holds the main-phase epoch with the lowest dev EER
    (the later one on ties), or the last epoch if there was no main phase.
    """
    from ..evaluation.metrics import compute_eer

    manifest.require_subsets("train", "dev")
    train_set = ClipSet.load(manifest, "train", model_cfg.clip_samples)
    dev_set = ClipSet.load(manifest, "dev", model_cfg.clip_samples)
    if len(set(dev_set.labels.tolist())) < 2:
        raise TrainingError("dev subset needs both bonafide and spoof clips")

    root = Rng(train_cfg.seed)
    model = Model.init(model_cfg, seed=train_cfg.seed)
    fbank = model.fbank
    mel_cache = None if train_cfg.augment else np.stack(
        [mel_spectrogram(w, fbank, model_cfg.n_fft, model_cfg.hop) for w in train_set.waves]
    )
    step = _Step(model, loss_cfg)
    log_file = open(log_path, "w", encoding="utf-8", newline="\n") if log_path else None
    history: list[dict] = []
    best: tuple[float, int, dict[str, np.ndarray]] | None = None
    state = AdamState(lr=train_cfg.lr)
    phase = None
    try:
        for epoch in range(train_cfg.epochs):
            warmup = epoch < train_cfg.warmup_epochs
            if phase != warmup:
                model.set_trainable(WARMUP_GROUPS if warmup else MAIN_GROUPS)
                if not warmup:
                    model.buffers[ENTROPY_SHIFT] = np.array(reference_entropy(model, train_set.waves), dtype=np.float32)
                state = AdamState(lr=train_cfg.lr)
                phase = warmup
            epoch_rng = root.split(1000 + epoch)
            order = epoch_rng.split(_SHUFFLE).permutation(len(train_set))
            noise_rng = epoch_rng.split(_NOISE)
            aug_rng = epoch_rng.split(_AUGMENT)
            sums = dict.fromkeys(("l_recon", "l_kl", "l_cls", "total"), 0.0)
            n_batches = 0
            skip = warmup and loss_cfg.alpha == 0  # the warm-up objective is identically zero
            for b, start in enumerate(range(0, len(train_set), train_cfg.batch_size)):
                if skip:
                    break
                idx = order[start:start + train_cfg.batch_size]
                waves = train_set.waves[idx]
                if train_cfg.augment:
                    waves = np.stack([rawboost_augment(w, aug_rng.split(int(i)), augment_cfg)
                                      for i, w in zip(idx, waves)])
                    mel_gt = np.stack([mel_spectrogram(w, fbank, model_cfg.n_fft, model_cfg.hop) for w in waves])
                else:
                    mel_gt = mel_cache[idx]
                eps = sample_noise(noise_rng.split(b), (len(idx), model_cfg.frames, model_cfg.latent_dim))
                model.zero_grad()
                try:
                    terms = step(waves, mel_gt, train_set.labels[idx], eps, warmup)
                except LossError as exc:
                    clips = ", ".join(train_set.paths[i] for i in idx)
                    raise TrainingError(
                        f"non-finite loss at epoch {epoch + 1}, batch {b + 1} "
                        f"({'warm-up' if warmup else 'main'} phase); clips: {clips}; {exc}"
                    ) from exc
                adam_step(model.params, state)
                for k, v in terms.items():
                    sums[k] += v
                n_batches += 1

            dev_scores, _ = score_waves(model, dev_set.waves)
            dev_eer, _ = compute_eer(dev_scores, dev_set.labels)
            denom = max(n_batches, 1)
            record = {"epoch": epoch + 1, **{k: v / denom for k, v in sums.items()}, "dev_eer": dev_eer}
            history.append(record)
            if log_file:
                log_file.write(json.dumps(record, sort_keys=False) + "\n")
                log_file.flush()
            if on_epoch:
                on_epoch(record)
            if not warmup and (best is None or dev_eer <= best[0]):
                best = (dev_eer, epoch + 1, _snapshot(model))
    finally:
        if log_file:
            log_file.close()

    if best is None:
        best = (history[-1]["dev_eer"], train_cfg.epochs, _snapshot(model))
    dev_eer, best_epoch, snapshot = best
    for name, data in snapshot.items():
        if name in model.buffers:
            model.buffers[name] = data
        else:
            model.params[name].data = data
    model.zero_grad()
    if checkpoint_path:
        save_checkpoint(model, checkpoint_path, best_epoch, dev_eer)
    return TrainResult(Checkpoint(model, best_epoch, dev_eer), history)
