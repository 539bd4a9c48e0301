"""RawBoost-style waveform augmentation.

Three noise families, applied in order:

1. convolutive: an FIR whose magnitude response has random notches;
2. impulsive, signal dependent: a random subset of samples is perturbed by a
   multiplicative uniform factor of the sample itself;
3. stationary colored additive noise at a random SNR.

Parameter ranges are simplified from the published recipe and kept in
:class:`RawBoostConfig`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import firwin2

from ..tensor import Rng


@dataclass(frozen=True)
class RawBoostConfig:
    convolutive: bool = True
    impulsive: bool = True
    colored_noise: bool = True
    fir_taps: int = 65
    n_bands: int = 16                 # frequency grid for the random responses
    max_notches: int = 5
    notch_gain_db: tuple[float, float] = (-20.0, -3.0)
    impulse_fraction: tuple[float, float] = (0.0, 0.1)
    impulse_gain: float = 2.0
    snr_db: tuple[float, float] = (10.0, 40.0)
    color_gain_db: tuple[float, float] = (-10.0, 0.0)

    @classmethod
    def disabled(cls) -> "RawBoostConfig":
        return cls(convolutive=False, impulsive=False, colored_noise=False)


def _random_fir(rng: Rng, cfg: RawBoostConfig, gains_db: np.ndarray) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, cfg.n_bands)
    return firwin2(cfg.fir_taps, grid, 10.0 ** (gains_db / 20.0))


def convolutive_noise(x: np.ndarray, rng: Rng, cfg: RawBoostConfig) -> np.ndarray:
    gains = np.zeros(cfg.n_bands)
    n_notch = rng.integers(1, cfg.max_notches + 1)
    bands = rng.permutation(cfg.n_bands)[:n_notch]
    gains[bands] = rng.uniform(n_notch, *cfg.notch_gain_db)
    h = _random_fir(rng, cfg, gains)
    y = np.convolve(x, h, mode="same")
    rms_in, rms_out = np.sqrt(np.mean(x * x)), np.sqrt(np.mean(y * y))
    return y * (rms_in / rms_out) if rms_out > 0 else y


def impulsive_noise(x: np.ndarray, rng: Rng, cfg: RawBoostConfig) -> np.ndarray:
    n = x.size
    fraction = rng.uniform(None, *cfg.impulse_fraction)
    count = int(fraction * n)
    y = x.copy()
    if count == 0:
        return y
    pos = rng.integers(0, n, count)
    factor = rng.uniform(count, -1.0, 1.0) * cfg.impulse_gain
    y[pos] = y[pos] + y[pos] * factor
    return y


def colored_noise(x: np.ndarray, rng: Rng, cfg: RawBoostConfig, snr_db: float | None = None) -> np.ndarray:
    if snr_db is None:
        snr_db = rng.uniform(None, *cfg.snr_db)
    white = rng.standard_normal(x.size)
    h = _random_fir(rng, cfg, rng.uniform(cfg.n_bands, *cfg.color_gain_db))
    noise = np.convolve(white, h, mode="same")
    p_signal = np.mean(x * x)
    p_noise = np.mean(noise * noise)
    if p_signal == 0 or p_noise == 0:
        return x.copy()
    return x + noise * np.sqrt(p_signal / (p_noise * 10.0 ** (snr_db / 10.0)))


def rawboost_augment(samples: np.ndarray, rng: Rng, cfg: RawBoostConfig = RawBoostConfig()) -> np.ndarray:
    """Apply the enabled noise families and clip to [-1, 1]; length is preserved."""
    x = np.asarray(samples, dtype=np.float64)
    if not (cfg.convolutive or cfg.impulsive or cfg.colored_noise):
        return np.asarray(samples).copy()
    if cfg.convolutive:
        x = convolutive_noise(x, rng, cfg)
    if cfg.impulsive:
        x = impulsive_noise(x, rng, cfg)
    if cfg.colored_noise:
        x = colored_noise(x, rng, cfg)
    return np.clip(x, -1.0, 1.0).astype(np.float32)
