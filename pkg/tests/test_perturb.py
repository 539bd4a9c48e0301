import numpy as np
import pytest

from finfoed.audio import CLIP_SAMPLES, PerturbSpec, bitrate_perturb, duration_perturb, full_sweep
from finfoed.audio.perturb import CODEC_PROXY, apply_perturbation
from finfoed.tensor import Rng


def _ramp():
    return np.arange(CLIP_SAMPLES, dtype=np.float64)


def test_duration_four_is_identity_on_standard_clip():
    x = _ramp()
    assert np.array_equal(duration_perturb(x, 4, Rng(0)), x)


def test_duration_two_tiles_a_contiguous_segment():
    x = _ramp()
    y = duration_perturb(x, 2, Rng(3))
    offset = int(y[0])
    seg = x[offset:offset + 32000]
    assert -(-CLIP_SAMPLES // 32000) == 3
    assert np.array_equal(y, np.concatenate([seg, seg, seg[:600]]))


def test_duration_three_segment_length():
    y = duration_perturb(_ramp(), 3, Rng(1))
    assert np.all(np.diff(y[:48000]) == 1)
    assert y[48000] == y[0]


def test_duration_is_reproducible():
    x = np.random.default_rng(0).standard_normal(CLIP_SAMPLES)
    assert np.array_equal(duration_perturb(x, 2, Rng(9)), duration_perturb(x, 2, Rng(9)))


@pytest.mark.parametrize("bad", [("duration", 5), ("bitrate", 128), ("speed", 2)])
def test_invalid_specs_rejected(bad):
    with pytest.raises(ValueError):
        PerturbSpec(*bad)
    with pytest.raises(ValueError):
        PerturbSpec.parse(f"{bad[0]}={bad[1]}")


def test_invalid_arguments_rejected_by_operations():
    with pytest.raises(ValueError):
        duration_perturb(_ramp(), 1, Rng(0))
    with pytest.raises(ValueError):
        bitrate_perturb(np.zeros(100), 64)


def test_spec_text_round_trip():
    for spec in full_sweep():
        assert PerturbSpec.parse(str(spec)) == spec
    assert [str(s) for s in full_sweep()] == [
        "duration=2", "duration=3", "duration=4", "bitrate=115", "bitrate=165", "bitrate=190"]


def _band_limited(limit_hz=7000.0, seed=0):
    r = np.random.default_rng(seed)
    t = np.arange(CLIP_SAMPLES) / 16000
    freqs = r.uniform(50, limit_hz, 12)
    return sum(0.05 * np.sin(2 * np.pi * f * t + r.uniform(0, 6.28)) for f in freqs)


def test_190_kbps_proxy_snr_above_40_db():
    x = _band_limited(7000.0)
    y = bitrate_perturb(x, 190).astype(np.float64)
    snr = 10 * np.log10(np.sum(x ** 2) / np.sum((y - x) ** 2))
    assert snr > 40


@pytest.mark.parametrize("kbps", [115, 165, 190])
def test_energy_above_cutoff_is_attenuated(kbps):
    x = 0.3 * np.random.default_rng(kbps).standard_normal(CLIP_SAMPLES)
    y = bitrate_perturb(x, kbps).astype(np.float64)
    freqs = np.fft.rfftfreq(CLIP_SAMPLES, 1 / 16000)
    above = freqs > CODEC_PROXY[kbps][0] * 1.02
    e_in = np.sum(np.abs(np.fft.rfft(x))[above] ** 2)
    e_out = np.sum(np.abs(np.fft.rfft(y))[above] ** 2)
    assert 10 * np.log10(e_in / max(e_out, 1e-300)) > 30


@pytest.mark.parametrize("kbps", [115, 165, 190])
def test_proxy_nearly_idempotent(kbps):
    x = 0.3 * np.random.default_rng(kbps).standard_normal(CLIP_SAMPLES)
    once = bitrate_perturb(x, kbps)
    twice = bitrate_perturb(once, kbps)
    assert np.sqrt(np.mean((twice.astype(np.float64) - once) ** 2)) < 1e-3


def test_lower_rate_degrades_more():
    x = 0.3 * np.random.default_rng(0).standard_normal(CLIP_SAMPLES)
    err = [np.mean((bitrate_perturb(x, k) - x) ** 2) for k in (115, 165, 190)]
    assert err[0] > err[1] > err[2]


def test_apply_dispatches_on_kind():
    x = _ramp() / CLIP_SAMPLES
    assert np.array_equal(apply_perturbation(x, PerturbSpec("duration", 4), Rng(0)), x)
    assert np.array_equal(apply_perturbation(x, PerturbSpec("bitrate", 115), Rng(0)), bitrate_perturb(x, 115))
