"""Clip standardisation, STFT and log-mel front-end.

STFT framing has no centre padding: a signal of N samples yields
``floor((N - n_fft) / hop) + 1`` frames. The mel filterbank uses the HTK mel
scale between 0 and 8 kHz and feeds on power spectra; log energies are floored
at 1e-10.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..tensor import Tensor
from ..tensor import functional as F
from .wavio import SAMPLE_RATE

CLIP_SAMPLES = 64600
N_FFT = 1024
HOP = 256
N_MELS = 80
LOG_FLOOR = 1e-10


def standardize_clip(samples: np.ndarray, length: int = CLIP_SAMPLES) -> np.ndarray:
    """Truncate to ``length`` samples, or tile end-to-end and truncate the last tile."""
    samples = np.asarray(samples)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError(f"standardize_clip: need a non-empty 1-d signal, got shape {samples.shape}")
    if samples.size >= length:
        return samples[:length].copy()
    reps = -(-length // samples.size)
    return np.tile(samples, reps)[:length]


def num_frames(n_samples: int, n_fft: int = N_FFT, hop: int = HOP) -> int:
    return (n_samples - n_fft) // hop + 1


def hann(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frame(x: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    if x.shape[-1] < n_fft:
        raise ValueError(f"signal of {x.shape[-1]} samples is shorter than one {n_fft}-sample window")
    return sliding_window_view(x, n_fft, axis=-1)[..., ::hop, :]


def stft_magnitude(samples: np.ndarray, n_fft: int = N_FFT, hop: int = HOP) -> np.ndarray:
    """|STFT| with a Hann window; shape (..., frames, n_fft // 2 + 1)."""
    x = np.asarray(samples, dtype=np.float64)
    frames = _frame(x, n_fft, hop) * hann(n_fft)
    return np.abs(np.fft.rfft(frames, axis=-1))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT, sample_rate: int = SAMPLE_RATE,
                   fmin: float = 0.0, fmax: float = 8000.0) -> np.ndarray:
    """Triangular HTK-mel filters, shape (n_mels, n_fft // 2 + 1), peak height 1."""
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def filter_centers_hz(n_mels: int = N_MELS, fmin: float = 0.0, fmax: float = 8000.0) -> np.ndarray:
    return mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))[1:-1]


def mel_spectrogram(samples: np.ndarray, fbank: np.ndarray | None = None,
                    n_fft: int = N_FFT, hop: int = HOP) -> np.ndarray:
    """Log-mel energies, shape (..., frames, n_mels). Not differentiable; see ``log_mel``."""
    fbank = mel_filterbank(n_fft=n_fft) if fbank is None else fbank
    power = stft_magnitude(samples, n_fft, hop) ** 2
    return np.log(np.maximum(power @ fbank.T, LOG_FLOOR)).astype(np.float32)


# ---------------------------------------------------------------------------
# differentiable path (reconstruction loss)
# ---------------------------------------------------------------------------

def power_spectrogram(x: Tensor, n_fft: int = N_FFT, hop: int = HOP) -> Tensor:
    """|STFT|^2 of ``x`` (..., N) as a graph op, shape (..., frames, n_fft // 2 + 1).

    The backward pass is the exact adjoint: with ``X = rfft(w * frame)`` and
    output gradient ``G``, d/d(frame) = w * n_fft * irfft(Z) where Z = G * X with
    the DC and Nyquist bins doubled; frames are then overlap-added.
    """
    if n_fft % hop:
        raise ValueError("power_spectrogram: hop must divide n_fft")
    n = x.shape[-1]
    window = hann(n_fft).astype(x.dtype)
    frames = _frame(x.data, n_fft, hop) * window
    spec = np.fft.rfft(frames, axis=-1)
    out = (spec.real ** 2 + spec.imag ** 2).astype(x.dtype)
    t = frames.shape[-2]
    lead = x.shape[:-1]
    ratio = n_fft // hop

    def backward(g):
        z = g * spec
        z[..., 0] *= 2.0
        z[..., -1] *= 2.0
        gframes = np.fft.irfft(z, n=n_fft, axis=-1) * (n_fft * window)
        blocks = gframes.reshape(lead + (t, ratio, hop))
        acc = np.zeros(lead + (t + ratio - 1, hop), dtype=np.float64)
        for j in range(ratio):
            acc[..., j:j + t, :] += blocks[..., j, :]
        gx = np.zeros(x.shape, dtype=x.dtype)
        covered = min(n, (t + ratio - 1) * hop)
        gx[..., :covered] = acc.reshape(lead + (-1,))[..., :covered]
        return (gx,)

    return Tensor.from_op(out, (x,), backward, "power_spectrogram")


def log_mel(x: Tensor, fbank: np.ndarray, n_fft: int = N_FFT, hop: int = HOP) -> Tensor:
    """Differentiable ``log(max(fbank . |STFT|^2, 1e-10))``; shape (..., frames, n_mels)."""
    power = power_spectrogram(x, n_fft, hop)
    energies = F.matmul(power, Tensor(fbank.T.astype(x.dtype), dtype=x.dtype))
    return F.log(F.maximum(energies, LOG_FLOOR))
