"""RIFF/WAVE I/O restricted to 16-bit PCM, mono, 16 kHz."""
from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16000


class WavFormatError(ValueError):
    pass


def read_wav(path: str | Path) -> np.ndarray:
    """Read a mono 16 kHz PCM16 file as float32 samples in [-1, 1)."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as f:
            channels, width, rate, n = f.getnchannels(), f.getsampwidth(), f.getframerate(), f.getnframes()
            if f.getcomptype() != "NONE":
                raise WavFormatError(f"{path}: compressed WAV ({f.getcomptype()}) is not supported")
            if width != 2:
                raise WavFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit samples")
            if channels != 1:
                raise WavFormatError(f"{path}: expected mono audio, got {channels} channels")
            if rate != SAMPLE_RATE:
                raise WavFormatError(f"{path}: expected {SAMPLE_RATE} Hz, got {rate} Hz (resampling is not supported)")
            raw = f.readframes(n)
    except wave.Error as exc:
        raise WavFormatError(f"{path}: not a PCM RIFF/WAVE file ({exc})") from exc
    pcm = np.frombuffer(raw, dtype="<i2")
    return (pcm.astype(np.float32) / 32768.0)


def write_wav(path: str | Path, samples: np.ndarray) -> None:
    """Write float samples (clipped to [-1, 1]) as mono 16 kHz PCM16."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise WavFormatError(f"write_wav: expected a 1-d signal, got shape {samples.shape}")
    pcm = np.round(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(SAMPLE_RATE)
        f.writeframes(pcm.tobytes())
