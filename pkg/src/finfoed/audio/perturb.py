"""Perturbations for robustness sweeps: shortened duration and a lossy-codec proxy.

The bitrate perturbation is NOT an MP3 codec. It approximates graded codec
damage with an ideal low-pass at a rate-dependent cutoff, uniform quantisation
to a rate-dependent bit depth, and a second low-pass to remove the
out-of-band quantisation noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tensor import Rng
from .features import CLIP_SAMPLES, standardize_clip
from .wavio import SAMPLE_RATE

DURATIONS_S = (2, 3, 4)
BITRATES_KBPS = (115, 165, 190)
CODEC_PROXY = {115: (5500.0, 9), 165: (7000.0, 11), 190: (7500.0, 12)}  # kbps -> (cutoff Hz, bits)


@dataclass(frozen=True)
class PerturbSpec:
    kind: str
    value: int

    def __post_init__(self):
        if self.kind == "duration":
            if self.value not in DURATIONS_S:
                raise ValueError(f"duration must be one of {DURATIONS_S} seconds, got {self.value}")
        elif self.kind == "bitrate":
            if self.value not in BITRATES_KBPS:
                raise ValueError(f"bitrate must be one of {BITRATES_KBPS} kbps, got {self.value}")
        else:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")

    def __str__(self) -> str:
        return f"{self.kind}={self.value}"

    @classmethod
    def parse(cls, text: str) -> "PerturbSpec":
        kind, _, value = text.partition("=")
        try:
            return cls(kind.strip(), int(value))
        except ValueError as exc:
            raise ValueError(f"bad perturbation spec {text!r}: {exc}") from exc


def full_sweep() -> list[PerturbSpec]:
    return [PerturbSpec("duration", d) for d in DURATIONS_S] + [PerturbSpec("bitrate", b) for b in BITRATES_KBPS]


def segment_length(duration_s: int, clip_length: int = CLIP_SAMPLES) -> int:
    # the 4 s setting is the standardised clip itself
    if duration_s == 4:
        return clip_length
    return duration_s * SAMPLE_RATE


def duration_perturb(samples: np.ndarray, duration_s: int, rng: Rng) -> np.ndarray:
    """Cut a random contiguous segment of ``duration_s`` seconds and tile it back to clip length."""
    PerturbSpec("duration", duration_s)
    samples = np.asarray(samples)
    seg = min(segment_length(duration_s), samples.size)
    offset = rng.integers(0, samples.size - seg + 1)
    return standardize_clip(samples[offset:offset + seg])


def lowpass(samples: np.ndarray, cutoff_hz: float) -> np.ndarray:
    """Zero-phase ideal low-pass (FFT brick wall)."""
    spec = np.fft.rfft(samples)
    freqs = np.fft.rfftfreq(samples.size, d=1.0 / SAMPLE_RATE)
    spec[freqs > cutoff_hz] = 0.0
    return np.fft.irfft(spec, n=samples.size)


def quantize(samples: np.ndarray, bits: int) -> np.ndarray:
    step = 2.0 / (1 << bits)
    return np.clip(np.round(samples / step) * step, -1.0, 1.0 - step)


def bitrate_perturb(samples: np.ndarray, kbps: int) -> np.ndarray:
    PerturbSpec("bitrate", kbps)
    cutoff, bits = CODEC_PROXY[kbps]
    x = np.asarray(samples, dtype=np.float64)
    y = lowpass(quantize(lowpass(x, cutoff), bits), cutoff)
    return np.clip(y, -1.0, 1.0).astype(np.float32)


def apply_perturbation(samples: np.ndarray, spec: PerturbSpec, rng: Rng) -> np.ndarray:
    if spec.kind == "duration":
        return duration_perturb(samples, spec.value, rng)
    return bitrate_perturb(samples, spec.value)
