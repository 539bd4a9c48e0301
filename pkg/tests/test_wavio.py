import wave

import numpy as np
import pytest

from finfoed.audio import SAMPLE_RATE, WavFormatError, read_wav, write_wav


def _raw_wav(path, channels=1, width=2, rate=SAMPLE_RATE, frames=b"\x00\x00" * 10):
    with wave.open(str(path), "wb") as f:
        f.setnchannels(channels)
        f.setsampwidth(width)
        f.setframerate(rate)
        f.writeframes(frames)


def test_round_trip_within_one_quantisation_step(tmp_path):
    x = np.random.default_rng(0).uniform(-1, 1, 5000)
    write_wav(tmp_path / "a.wav", x)
    y = read_wav(tmp_path / "a.wav")
    assert y.dtype == np.float32 and y.shape == x.shape
    assert np.max(np.abs(y - x)) < 2 / 32767


def test_write_clips_out_of_range(tmp_path):
    write_wav(tmp_path / "a.wav", np.array([2.0, -3.0, 0.0]))
    y = read_wav(tmp_path / "a.wav")
    assert y[0] == pytest.approx(1.0, abs=1e-4) and y[1] == pytest.approx(-1.0, abs=1e-4)


def test_write_rejects_multichannel_array(tmp_path):
    with pytest.raises(WavFormatError):
        write_wav(tmp_path / "a.wav", np.zeros((2, 10)))


@pytest.mark.parametrize("kwargs, needle", [
    ({"channels": 2, "frames": b"\x00\x00" * 20}, "mono"),
    ({"width": 1, "frames": b"\x00" * 10}, "16-bit"),
    ({"rate": 44100}, "16000"),
])
def test_rejects_other_encodings(tmp_path, kwargs, needle):
    _raw_wav(tmp_path / "bad.wav", **kwargs)
    with pytest.raises(WavFormatError, match=needle):
        read_wav(tmp_path / "bad.wav")


def test_rejects_non_riff(tmp_path):
    (tmp_path / "junk.wav").write_bytes(b"not a wave file at all")
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "junk.wav")
