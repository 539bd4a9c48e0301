"""Synthetic bonafide/spoof corpus.

Bonafide clips are sums of many independently drawn components (jittered
harmonic stacks plus broadband noise), so their 320-sample frames span a
high-dimensional space. Spoof clips are produced by a frozen random decoder
from a k-dimensional latent per frame, so their frames lie close to a
k-dimensional family.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import firwin2

from ..audio.features import CLIP_SAMPLES
from ..audio.wavio import SAMPLE_RATE, write_wav
from ..tensor import Rng
from .manifest import DatasetManifest, ManifestEntry, save_manifest

FRAME = 320
PEAK = 0.9
CONTROL_RATE = 100  # Hz, for jitter envelopes


@dataclass(frozen=True)
class BonafideConfig:
    n_harmonic_stacks: int = 48
    n_noise_sources: int = 16
    f0_range: tuple[float, float] = (60.0, 400.0)
    max_harmonics: int = 8
    freq_jitter: float = 0.02      # relative std of instantaneous frequency
    amp_jitter: float = 0.3        # relative std of amplitude envelope
    noise_share: float = 0.3       # fraction of clip energy carried by noise

    @property
    def n_components(self) -> int:
        return self.n_harmonic_stacks + self.n_noise_sources


@dataclass(frozen=True)
class SpoofGeneratorConfig:
    latent_dim: int = 8
    decoder_seed: int = 1234
    rates: tuple[int, ...] = (5, 4, 4, 2, 2)
    channels: tuple[int, ...] = (32, 32, 16, 16, 8)
    smoothing: float = 0.8         # one-pole smoothing of latents across frames
    gain: float = 0.5              # pre-activation scale; small keeps tanh near linear

    def __post_init__(self):
        if not 1 <= self.latent_dim <= 64:
            raise ValueError(f"latent_dim must lie in [1, 64], got {self.latent_dim}")
        if self.latent_dim >= BonafideConfig().n_components:
            raise ValueError("latent_dim must be smaller than the bonafide component count")
        if int(np.prod(self.rates)) != FRAME:
            raise ValueError(f"decoder rates must multiply to {FRAME}, got {self.rates}")


def _peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    return (x * (PEAK / peak)).astype(np.float32) if peak > 0 else x.astype(np.float32)


def _smooth_envelope(rng: Rng, n: int, std: float) -> np.ndarray:
    """Slowly varying zero-mean process sampled at CONTROL_RATE, linearly interpolated to n samples."""
    n_ctrl = n * CONTROL_RATE // SAMPLE_RATE + 2
    ctrl = rng.standard_normal(n_ctrl)
    ctrl = np.convolve(ctrl, np.ones(5) / np.sqrt(5), mode="same") * std
    return np.interp(np.arange(n) * CONTROL_RATE / SAMPLE_RATE, np.arange(n_ctrl), ctrl)


def bonafide_parts(rng: Rng, cfg: BonafideConfig = BonafideConfig(),
                   n: int = CLIP_SAMPLES) -> tuple[np.ndarray, np.ndarray]:
    """(harmonic part, noise part) of one clip, before mixing and normalisation."""
    harmonic = np.zeros(n)
    nyquist = SAMPLE_RATE / 2
    for _ in range(cfg.n_harmonic_stacks):
        f0 = np.exp(rng.uniform(None, *np.log(cfg.f0_range)))
        n_h = rng.integers(1, cfg.max_harmonics + 1)
        inst_f = f0 * (1.0 + _smooth_envelope(rng, n, cfg.freq_jitter))
        amp = np.maximum(0.0, 1.0 + _smooth_envelope(rng, n, cfg.amp_jitter))
        phase = 2 * np.pi * np.cumsum(inst_f) / SAMPLE_RATE
        level = np.exp(rng.uniform(None, -2.0, 0.0))
        offsets = rng.uniform(n_h, 0.0, 2 * np.pi)
        for h in range(1, n_h + 1):
            if h * f0 * 1.05 >= nyquist:
                break
            harmonic += (level / h) * amp * np.sin(h * phase + offsets[h - 1])
    noise = np.zeros(n)
    grid = np.linspace(0.0, 1.0, 9)
    for _ in range(cfg.n_noise_sources):
        gains_db = rng.uniform(grid.size, -6.0, 0.0)
        h = firwin2(33, grid, 10.0 ** (gains_db / 20.0))
        noise += np.convolve(rng.standard_normal(n), h, mode="same") * np.exp(rng.uniform(None, -1.0, 0.0))
    return harmonic, noise


def gen_bonafide(rng: Rng, n: int, cfg: BonafideConfig = BonafideConfig()) -> list[np.ndarray]:
    """``n`` bonafide clips of CLIP_SAMPLES samples, peak-normalised to 0.9."""
    if n < 1:
        raise ValueError("gen_bonafide: n must be >= 1")
    clips = []
    for i in range(n):
        harmonic, noise = bonafide_parts(rng.split(i), cfg)
        e_h, e_n = np.mean(harmonic ** 2), np.mean(noise ** 2)
        noise_scale = np.sqrt(cfg.noise_share / (1 - cfg.noise_share) * e_h / e_n)
        clips.append(_peak_normalize(harmonic + noise_scale * noise))
    return clips


class FrozenDecoder:
    """Random transposed-convolution stack (kernel width == rate, no overlap), never trained.

    Each 320-sample output frame depends only on its own latent vector.
    """

    def __init__(self, cfg: SpoofGeneratorConfig):
        self.cfg = cfg
        rng = Rng(cfg.decoder_seed)
        widths = (cfg.latent_dim,) + cfg.channels[:-1]
        self.kernels = []
        for c_in, c_out, rate in zip(widths, cfg.channels, cfg.rates):
            self.kernels.append(rng.standard_normal((c_in, c_out, rate)) / np.sqrt(c_in))
        self.out = rng.standard_normal(cfg.channels[-1]) / np.sqrt(cfg.channels[-1])

    def __call__(self, z: np.ndarray) -> np.ndarray:
        """z: (frames, latent_dim) -> waveform of frames * 320 samples."""
        h = z[:, None, :]                                   # (frames, positions, channels)
        for i, w in enumerate(self.kernels):
            h = np.einsum("fpc,cdr->fprd", h, w).reshape(h.shape[0], -1, w.shape[1])
            h = np.tanh(self.cfg.gain * h) / self.cfg.gain if i < len(self.kernels) - 1 else h
        return (h @ self.out).reshape(-1)


def sample_spoof_latents(rng: Rng, cfg: SpoofGeneratorConfig, frames: int) -> np.ndarray:
    z = rng.standard_normal((frames, cfg.latent_dim))
    a = cfg.smoothing
    for t in range(1, frames):
        z[t] = a * z[t - 1] + np.sqrt(1 - a * a) * z[t]
    return z


def gen_spoof(rng: Rng, cfg: SpoofGeneratorConfig, n: int,
              decoder: FrozenDecoder | None = None) -> list[np.ndarray]:
    """``n`` spoof clips decoded from k-dimensional latents by one shared frozen decoder."""
    if n < 1:
        raise ValueError("gen_spoof: n must be >= 1")
    decoder = decoder or FrozenDecoder(cfg)
    frames = -(-CLIP_SAMPLES // FRAME)
    clips = []
    for i in range(n):
        z = sample_spoof_latents(rng.split(i), cfg, frames)
        clips.append(_peak_normalize(decoder(z)[:CLIP_SAMPLES]))
    return clips


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

SUBSETS = ("train", "dev", "eval")
_SUBSET_KEY = {"train": 1, "dev": 2, "eval": 3}
_LABEL_KEY = {"bonafide": 1, "spoof": 2}


def build_corpus(out_dir: str | Path, sizes: dict[str, int], rng: Rng,
                 bonafide_fraction: float = 0.1,
                 spoof_cfg: SpoofGeneratorConfig = SpoofGeneratorConfig(),
                 bonafide_cfg: BonafideConfig = BonafideConfig()) -> DatasetManifest:
    """Write WAVs under ``out_dir/<subset>/`` and ``out_dir/manifest.csv``."""
    out_dir = Path(out_dir)
    decoder = FrozenDecoder(spoof_cfg)
    entries: list[ManifestEntry] = []
    for subset in SUBSETS:
        total = sizes.get(subset, 0)
        if total == 0:
            continue
        n_bona = int(round(total * bonafide_fraction))
        counts = {"bonafide": n_bona, "spoof": total - n_bona}
        sub_dir = out_dir / subset
        try:
            sub_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create {sub_dir}: {exc}") from exc
        for label, count in counts.items():
            if count == 0:
                continue
            stream = rng.split(_SUBSET_KEY[subset] * 10 + _LABEL_KEY[label])
            if label == "bonafide":
                clips = gen_bonafide(stream, count, bonafide_cfg)
            else:
                clips = gen_spoof(stream, spoof_cfg, count, decoder)
            for i, clip in enumerate(clips):
                rel = f"{subset}/{label}_{i:05d}.wav"
                try:
                    write_wav(out_dir / rel, clip)
                except OSError as exc:
                    raise OSError(f"cannot write {out_dir / rel}: {exc}") from exc
                entries.append(ManifestEntry(rel, label, subset))
    manifest = DatasetManifest(entries, root=out_dir)
    save_manifest(manifest, out_dir / "manifest.csv")
    return manifest
