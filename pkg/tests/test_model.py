import math

import numpy as np
import pytest

from finfoed.model import (
    ENTROPY_CONSTANT_PER_DIM,
    ENTROPY_SHIFT,
    LatentGaussian,
    Model,
    ModelConfig,
    adapter_forward,
    bonafide_probability,
    frame_entropy,
    reparameterize,
    tiny_config,
)
from finfoed.tensor import Rng, ShapeError, Tensor, precision
from finfoed.tensor import functional as F


@pytest.fixture(scope="module")
def model():
    return Model.init(ModelConfig(), seed=0)


@pytest.fixture(scope="module")
def wave():
    return (0.3 * np.random.default_rng(0).standard_normal((1, 64600))).astype(np.float32)


def _latent(log_sigma, mu=None):
    log_sigma = np.asarray(log_sigma, dtype=np.float64)
    mu = np.zeros_like(log_sigma) if mu is None else mu
    return LatentGaussian(Tensor(mu, dtype=np.float64), Tensor(log_sigma, dtype=np.float64))


def test_default_geometry():
    cfg = ModelConfig()
    assert (64600 - 400) // 320 + 1 == cfg.frames == 201
    assert cfg.decoded_samples == 201 * 320 == 64320
    assert cfg.adapter_width == 256


def test_config_rejects_inconsistent_rates():
    with pytest.raises(ValueError):
        ModelConfig(decoder_rates=(5, 4, 4, 2))
    with pytest.raises(ValueError):
        ModelConfig(classifier_shift="global")


def test_config_dict_round_trip():
    cfg = ModelConfig(classifier_shift="utterance")
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match="unknown"):
        ModelConfig.from_dict({"depth": 3})


def test_pipeline_shapes(model, wave):
    feats = model.backbone_forward(wave, frozen=True)
    assert feats.shape == (1, 201, 128)
    g = model.encode(feats)
    assert g.mu.shape == g.log_sigma.shape == (1, 201, 192)
    assert frame_entropy(g).shape == (1, 201)
    recon = model.decode(g.mu)
    assert recon.shape == (1, 64320)
    assert model.mel(Tensor(wave)).shape == (1, 249, 80)
    assert model.mel(recon).shape == (1, 248, 80)
    assert model.classify(frame_entropy(g)).shape == (1, 2)


def test_log_sigma_is_clamped(model, wave):
    big = Model(model.cfg, {**model.params, "encoder.log_sigma.conv2.b": Tensor(np.full(192, 50.0))})
    g = big.encode(big.backbone_forward(wave, frozen=True))
    assert np.max(g.log_sigma.data) == pytest.approx(7.0)


def test_backbone_rejects_wrong_length(model):
    with pytest.raises(ShapeError):
        model.backbone_forward(np.zeros((1, 64000), dtype=np.float32))


def test_zero_waveform_gives_constant_frames(model):
    out = model.backbone_forward(np.zeros((1, 64600), dtype=np.float32), frozen=True).data
    assert np.all(out == out[:, :1, :])
    again = model.backbone_forward(np.zeros((1, 64600), dtype=np.float32), frozen=True).data
    assert np.array_equal(out, again)


def test_adapter_identity_at_zero_up_projection():
    r = np.random.default_rng(0)
    h = Tensor(r.standard_normal((2, 5, 8)))
    out = adapter_forward(h, Tensor(r.standard_normal((8, 16))), Tensor(r.standard_normal(16)),
                          Tensor(np.zeros((16, 8))), Tensor(np.zeros(8)))
    assert np.array_equal(out.data, h.data)


def test_adapters_transparent_at_init(model, wave):
    with_adapters = model.backbone_forward(wave, frozen=True, adapters=True).data
    without = model.backbone_forward(wave, frozen=True, adapters=False).data
    assert np.array_equal(with_adapters, without)


def test_frozen_backbone_receives_no_gradient(model, wave):
    model.zero_grad()
    F.sum(model.backbone_forward(wave, frozen=True)).backward()
    for name, p in model.group("backbone").items():
        assert p.grad is None or not np.any(p.grad), name
    assert np.any(model.params["adapter.block1.w_up"].grad)
    model.zero_grad()


def test_unfrozen_backbone_receives_gradient(model, wave):
    model.zero_grad()
    F.sum(F.square(model.backbone_forward(wave))).backward()
    assert np.any(model.params["backbone.frontend.w"].grad)
    model.zero_grad()


@pytest.mark.parametrize("value, k, expected", [(0.0, 192, 0.0), (1.0, 192, 192.0)])
def test_entropy_of_constant_log_sigma(value, k, expected):
    h = frame_entropy(_latent(np.full((4, k), value))).data
    assert np.all(h == expected)


def test_entropy_cancellation():
    h = frame_entropy(_latent([[math.log(2.0), math.log(0.5)]])).data
    assert h[0] == pytest.approx(0.0, abs=1e-15)


def test_entropy_with_constant_matches_gaussian_formula():
    ls = np.random.default_rng(1).standard_normal((3, 5))
    h = frame_entropy(_latent(ls), with_constant=True).data
    cov_logdet = 2 * ls.sum(axis=1)
    expected = 0.5 * (5 * math.log(2 * math.pi * math.e) + cov_logdet)
    assert np.allclose(h, expected)
    assert ENTROPY_CONSTANT_PER_DIM == pytest.approx(0.5 * math.log(2 * math.pi * math.e))


def test_entropy_is_exactly_permutation_invariant():
    r = np.random.default_rng(2)
    ls = r.integers(-56, 56, size=(6, 192)) / 8.0   # dyadic values sum exactly in any order
    perm = r.permutation(192)
    assert np.array_equal(frame_entropy(_latent(ls)).data, frame_entropy(_latent(ls[:, perm])).data)


def test_sigma_scaling_shifts_entropy():
    ls = np.random.default_rng(3).standard_normal((4, 192))
    c = 3.0
    h0 = frame_entropy(_latent(ls)).data
    h1 = frame_entropy(_latent(ls + math.log(c))).data
    assert np.allclose(h1 - h0, 192 * math.log(c), atol=1e-9)


def test_reparameterize_fixed_noise():
    mu = np.arange(6.0).reshape(2, 3)
    ls = np.full((2, 3), 0.5)
    g = _latent(ls, mu)
    assert np.array_equal(reparameterize(g, np.zeros((2, 3))).data, mu)
    assert np.allclose(reparameterize(g, np.ones((2, 3))).data, mu + math.exp(0.5))


def test_reparameterize_gradient_skips_noise():
    mu = Tensor(np.zeros(3), requires_grad=True, dtype=np.float64)
    ls = Tensor(np.zeros(3), requires_grad=True, dtype=np.float64)
    eps = np.array([1.0, -2.0, 0.5])
    F.sum(reparameterize(LatentGaussian(mu, ls), eps)).backward()
    assert np.array_equal(mu.grad, np.ones(3))
    assert np.allclose(ls.grad, eps)


def test_reparameterize_monte_carlo_mean():
    r = np.random.default_rng(4)
    mu, ls = r.standard_normal((3, 4)), 0.5 * r.standard_normal((3, 4))
    g = _latent(ls, mu)
    rng = Rng(0)
    draws = np.stack([reparameterize(g, rng.standard_normal((3, 4))).data for _ in range(10000)])
    stderr = np.exp(ls) / math.sqrt(10000)
    assert np.all(np.abs(draws.mean(axis=0) - mu) < 3 * stderr)


def test_decode_zero_latent(model):
    z = Tensor(np.zeros((1, 201, 192), dtype=np.float32))
    a, b = model.decode(z).data, model.decode(z).data
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) < 1)


def test_classify_with_zero_weights_returns_biases():
    cfg = tiny_config()
    m = Model.init(cfg, 0)
    params = dict(m.params)
    for name in ("classifier.fc1.w", "classifier.fc1.b", "classifier.fc2.w"):
        params[name] = Tensor(np.zeros(m.params[name].shape))
    params["classifier.fc2.b"] = Tensor(np.array([0.3, -1.2]))
    zeroed = Model(cfg, params)
    h = Tensor(np.random.default_rng(0).standard_normal((2, cfg.frames)))
    logits = zeroed.classify(h).data
    assert np.allclose(logits, [[0.3, -1.2]] * 2)
    p = bonafide_probability(logits[:, 0] - logits[:, 1])
    assert np.allclose(p, np.exp(0.3) / (np.exp(0.3) + np.exp(-1.2)))


def test_classify_rejects_wrong_frame_count(model):
    with pytest.raises(ShapeError):
        model.classify(Tensor(np.zeros((1, 200))))


def test_utterance_shift_makes_logits_invariant_to_sigma_scale():
    cfg = tiny_config(classifier_shift="utterance")
    with precision(np.float64):
        m = Model.init(cfg, 1)
        ls = np.random.default_rng(5).standard_normal((2, cfg.frames, cfg.latent_dim))
        a = m.classify(frame_entropy(_latent(ls))).data
        b = m.classify(frame_entropy(_latent(ls + math.log(2.5)))).data
    assert np.allclose(a, b, atol=1e-12)


def test_corpus_shift_subtracts_stored_level():
    cfg = tiny_config()
    m = Model.init(cfg, 1)
    h = np.random.default_rng(6).standard_normal((2, cfg.frames))
    shifted = Model(cfg, m.params, {ENTROPY_SHIFT: 4.0})
    assert np.allclose(shifted.classify(Tensor(h + 4.0)).data, m.classify(Tensor(h)).data, atol=1e-5)


def test_model_logits_invariant_to_latent_permutation(model, wave):
    perm = np.random.default_rng(7).permutation(192)
    params = dict(model.params)
    for name in ("encoder.log_sigma.conv2.w", "encoder.log_sigma.conv2.b"):
        params[name] = Tensor(model.params[name].data[perm])
    permuted = Model(model.cfg, params, model.buffers)
    a, ha = model.log_odds(wave)
    b, hb = permuted.log_odds(wave)
    assert np.allclose(ha, hb, atol=1e-4)
    assert np.allclose(a, b, atol=1e-4)


def test_score_is_sigmoid_of_log_odds(model, wave):
    p, h = model.score(wave)
    margin, h2 = model.log_odds(wave)
    assert np.array_equal(h, h2)
    assert np.allclose(p, 1 / (1 + np.exp(-margin)))


def test_bonafide_probability_is_stable():
    p = bonafide_probability(np.array([-1000.0, 0.0, 1000.0]))
    assert np.all(np.isfinite(p))
    assert p.tolist() == [0.0, 0.5, 1.0]


def test_init_is_seed_deterministic():
    a, b = Model.init(tiny_config(), 3), Model.init(tiny_config(), 3)
    assert all(np.array_equal(a.params[k].data, b.params[k].data) for k in a.params)
