"""Adapter-augmented toy backbone, Gaussian latent encoders, decoder and entropy classifier."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..audio.features import log_mel, mel_filterbank
from ..tensor import Rng, ShapeError, Tensor, no_grad
from ..tensor import functional as F
from .config import ModelConfig

BONAFIDE, SPOOF = 0, 1
LABEL_INDEX = {"bonafide": BONAFIDE, "spoof": SPOOF}
GROUPS = ("backbone", "adapter", "encoder", "decoder", "classifier")
ENTROPY_CONSTANT_PER_DIM = 0.5 * (math.log(2 * math.pi) + 1.0)


@dataclass
class LatentGaussian:
    mu: Tensor          # (..., C, K)
    log_sigma: Tensor   # (..., C, K), clamped


def adapter_forward(h: Tensor, w_down: Tensor, b_down: Tensor, w_up: Tensor, b_up: Tensor) -> Tensor:
    """Residual bottleneck: ``h + up(gelu(down(h)))``; identity when ``w_up`` and ``b_up`` are zero."""
    return F.add(h, F.linear(F.gelu(F.linear(h, w_down, b_down)), w_up, b_up))


def frame_entropy(g: LatentGaussian, with_constant: bool = False) -> Tensor:
    """Per-frame entropy ``sum_i log sigma_i`` of the diagonal Gaussian, shape (..., C).

    With ``with_constant`` the dropped ``K/2 (ln 2 pi + 1)`` term is added back,
    giving the full differential entropy.
    """
    h = F.sum(g.log_sigma, axis=-1)
    if with_constant:
        h = F.add(h, g.log_sigma.shape[-1] * ENTROPY_CONSTANT_PER_DIM)
    return h


def reparameterize(g: LatentGaussian, eps: np.ndarray) -> Tensor:
    """``z = mu + sigma * eps``; ``eps`` is a constant, so gradients reach only mu and log_sigma."""
    return F.add(g.mu, F.mul(F.exp(g.log_sigma), Tensor(eps, dtype=g.mu.dtype)))


def sample_noise(rng: Rng, shape, dtype=np.float32) -> np.ndarray:
    return rng.standard_normal(shape).astype(dtype)


ENTROPY_SHIFT = "classifier.entropy_shift"


class Model:
    """All learnable tensors plus the forward computations that use them.

    Parameter names are prefixed with their group: backbone, adapter,
    encoder, decoder, classifier. ``buffers`` hold non-trainable state; the
    only one is the reference entropy level the classifier subtracts.
    """

    def __init__(self, cfg: ModelConfig, params: dict[str, Tensor],
                 buffers: dict[str, np.ndarray] | None = None):
        self.cfg = cfg
        self.params = params
        self.buffers = {ENTROPY_SHIFT: np.zeros((), dtype=np.float32)}
        if buffers:
            self.buffers.update({k: np.asarray(v, dtype=np.float32) for k, v in buffers.items()})
        self.fbank = mel_filterbank(cfg.n_mels, cfg.n_fft)

    # -- construction ------------------------------------------------------
    @classmethod
    def init(cls, cfg: ModelConfig, seed: int = 0) -> "Model":
        rng = Rng(seed)
        p: dict[str, np.ndarray] = {}

        def dense(name, fan_in, shape):
            p[name] = rng.standard_normal(shape) / math.sqrt(fan_in)

        d, c = cfg.width, cfg.frames
        dense("backbone.frontend.w", cfg.frontend_kernel, (d, 1, cfg.frontend_kernel))
        p["backbone.frontend.b"] = np.zeros(d)
        p["backbone.frontend_norm.g"] = np.ones(d)
        p["backbone.frontend_norm.b"] = np.zeros(d)
        for i in range(cfg.layers):
            pre = f"backbone.block{i}"
            for proj in ("q", "k", "v", "o"):
                dense(f"{pre}.attn.w{proj}", d, (d, d))
                p[f"{pre}.attn.b{proj}"] = np.zeros(d)
            dense(f"{pre}.ffn.w1", d, (d, cfg.ffn))
            p[f"{pre}.ffn.b1"] = np.zeros(cfg.ffn)
            dense(f"{pre}.ffn.w2", cfg.ffn, (cfg.ffn, d))
            p[f"{pre}.ffn.b2"] = np.zeros(d)
            for norm in ("norm1", "norm2"):
                p[f"{pre}.{norm}.g"] = np.ones(d)
                p[f"{pre}.{norm}.b"] = np.zeros(d)
            a = cfg.adapter_width
            dense(f"adapter.block{i}.w_down", d, (d, a))
            p[f"adapter.block{i}.b_down"] = np.zeros(a)
            p[f"adapter.block{i}.w_up"] = np.zeros((a, d))
            p[f"adapter.block{i}.b_up"] = np.zeros(d)
        k, hid, kw = cfg.latent_dim, cfg.encoder_hidden, cfg.encoder_kernel
        for branch in ("mu", "log_sigma"):
            pre = f"encoder.{branch}"
            dense(f"{pre}.conv1.w", d * kw, (hid, d, kw))
            p[f"{pre}.conv1.b"] = np.zeros(hid)
            dense(f"{pre}.conv2.w", hid * kw, (k, hid, kw))
            p[f"{pre}.conv2.b"] = np.zeros(k)
        chans = cfg.decoder_channels
        dense("decoder.pre.w", k, (k, chans[0]))
        p["decoder.pre.b"] = np.zeros(chans[0])
        outs = chans[1:] + (1,)
        for i, (c_in, c_out, rate) in enumerate(zip(chans, outs, cfg.decoder_rates)):
            # each output sample sees two input frames of c_in channels
            dense(f"decoder.up{i}.w", 2 * c_in, (c_in, c_out, 2 * rate))
            p[f"decoder.up{i}.b"] = np.zeros(c_out)
        dense("classifier.fc1.w", c, (c, cfg.classifier_hidden))
        p["classifier.fc1.b"] = np.zeros(cfg.classifier_hidden)
        dense("classifier.fc2.w", cfg.classifier_hidden, (cfg.classifier_hidden, 2))
        p["classifier.fc2.b"] = np.zeros(2)
        return cls(cfg, {name: Tensor(v, requires_grad=True) for name, v in p.items()})

    def group(self, name: str) -> dict[str, Tensor]:
        return {k: v for k, v in self.params.items() if k.split(".", 1)[0] == name}

    def set_trainable(self, groups) -> None:
        groups = set(groups)
        for name, t in self.params.items():
            t.requires_grad = name.split(".", 1)[0] in groups
            t.grad = None

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    # -- forward pieces ----------------------------------------------------
    def _p(self, name: str, frozen: bool = False) -> Tensor:
        t = self.params[name]
        return t.detach() if frozen else t

    def backbone_forward(self, wave, frozen: bool = False, adapters: bool = True) -> Tensor:
        """(B, N) standardised waveforms -> (B, C, D) features."""
        cfg = self.cfg
        x = wave if isinstance(wave, Tensor) else Tensor(wave, dtype=self.params["backbone.frontend.w"].dtype)
        if x.ndim == 1:
            x = F.reshape(x, (1,) + x.shape)
        if x.shape[-1] != cfg.clip_samples:
            raise ShapeError(f"backbone expects {cfg.clip_samples}-sample clips, got {x.shape[-1]}")
        p = lambda n: self._p(n, frozen)  # noqa: E731
        h = F.conv1d(F.reshape(x, (x.shape[0], 1, x.shape[1])), p("backbone.frontend.w"), cfg.frontend_stride)
        h = F.add(F.swapaxes(h, -1, -2), p("backbone.frontend.b"))
        h = F.layer_norm(F.gelu(h), p("backbone.frontend_norm.g"), p("backbone.frontend_norm.b"))
        for i in range(cfg.layers):
            pre = f"backbone.block{i}"
            if adapters and cfg.adapter_placement == "pre_attn_norm":
                h = self._adapter(i, h)
            q = F.linear(h, p(f"{pre}.attn.wq"), p(f"{pre}.attn.bq"))
            k = F.linear(h, p(f"{pre}.attn.wk"), p(f"{pre}.attn.bk"))
            v = F.linear(h, p(f"{pre}.attn.wv"), p(f"{pre}.attn.bv"))
            a = F.linear(F.attention(q, k, v), p(f"{pre}.attn.wo"), p(f"{pre}.attn.bo"))
            h = F.layer_norm(F.add(h, a), p(f"{pre}.norm1.g"), p(f"{pre}.norm1.b"))
            f = F.linear(F.gelu(F.linear(h, p(f"{pre}.ffn.w1"), p(f"{pre}.ffn.b1"))),
                         p(f"{pre}.ffn.w2"), p(f"{pre}.ffn.b2"))
            h = F.add(h, f)
            if adapters and cfg.adapter_placement == "pre_final_norm":
                h = self._adapter(i, h)
            h = F.layer_norm(h, p(f"{pre}.norm2.g"), p(f"{pre}.norm2.b"))
        return h

    def _adapter(self, i: int, h: Tensor) -> Tensor:
        pre = f"adapter.block{i}"
        return adapter_forward(h, self.params[f"{pre}.w_down"], self.params[f"{pre}.b_down"],
                               self.params[f"{pre}.w_up"], self.params[f"{pre}.b_up"])

    def _encoder_branch(self, x: Tensor, branch: str) -> Tensor:
        pad = self.cfg.encoder_kernel // 2
        pre = f"encoder.{branch}"
        h = F.conv1d(F.pad1d(x, pad, pad), self.params[f"{pre}.conv1.w"])
        h = F.gelu(F.add(h, F.reshape(self.params[f"{pre}.conv1.b"], (-1, 1))))
        h = F.conv1d(F.pad1d(h, pad, pad), self.params[f"{pre}.conv2.w"])
        h = F.add(h, F.reshape(self.params[f"{pre}.conv2.b"], (-1, 1)))
        return F.swapaxes(h, -1, -2)

    def encode(self, features: Tensor) -> LatentGaussian:
        """(B, C, D) -> mean and clamped log-sigma, each (B, C, K)."""
        x = F.swapaxes(features, -1, -2)
        mu = self._encoder_branch(x, "mu")
        lim = self.cfg.log_sigma_clamp
        log_sigma = F.clamp(self._encoder_branch(x, "log_sigma"), -lim, lim)
        return LatentGaussian(mu, log_sigma)

    def decode(self, z: Tensor) -> Tensor:
        """(B, C, K) latents -> (B, C * stride) waveforms in (-1, 1)."""
        cfg = self.cfg
        h = F.linear(z, self.params["decoder.pre.w"], self.params["decoder.pre.b"])
        # time-major throughout; the final stage has a single channel
        for i, rate in enumerate(cfg.decoder_rates):
            h = F.leaky_relu(h, cfg.decoder_slope)
            h = F.transposed_conv1d_tc(h, self.params[f"decoder.up{i}.w"], rate)
            h = F.add(h, self.params[f"decoder.up{i}.b"])
        h = F.tanh(h)
        return F.reshape(h, h.shape[:-1])

    def classify(self, entropy: Tensor) -> Tensor:
        """(B, C) frame entropies -> (B, 2) logits; index 0 is bonafide.

        The sequence is shifted before the first layer, never rescaled: by
        its own mean (``classifier_shift="utterance"``) or by the stored
        reference level (``"corpus"``), which keeps each utterance's overall
        entropy visible to the classifier.
        """
        if entropy.shape[-1] != self.cfg.frames:
            raise ShapeError(f"classifier expects {self.cfg.frames} frames, got {entropy.shape[-1]}")
        if self.cfg.classifier_shift == "utterance":
            h = F.sub(entropy, F.mean(entropy, axis=-1, keepdims=True))
        else:
            h = F.sub(entropy, float(self.buffers[ENTROPY_SHIFT]))
        h = F.gelu(F.linear(h, self.params["classifier.fc1.w"], self.params["classifier.fc1.b"]))
        return F.linear(h, self.params["classifier.fc2.w"], self.params["classifier.fc2.b"])

    def mel(self, wave: Tensor) -> Tensor:
        return log_mel(wave, self.fbank, self.cfg.n_fft, self.cfg.hop)

    # -- inference -------------------------------------------------------
    def frame_entropies(self, wave) -> np.ndarray:
        """(B, C) frame entropies of the posterior, without building a graph."""
        with no_grad():
            return frame_entropy(self.encode(self.backbone_forward(wave, frozen=True))).data

    def log_odds(self, wave) -> tuple[np.ndarray, np.ndarray]:
        """Bonafide-minus-spoof logit and frame entropies with noise off (z = mu).

        Returns (log_odds (B,), entropies (B, C)). The bonafide softmax
        probability is ``sigmoid(log_odds)``, a strictly increasing map, so
        both rank clips identically; the log-odds do not saturate.
        """
        with no_grad():
            h = frame_entropy(self.encode(self.backbone_forward(wave, frozen=True)))
            logits = self.classify(h).data.astype(np.float64)
        return logits[:, BONAFIDE] - logits[:, SPOOF], h.data

    def score(self, wave) -> tuple[np.ndarray, np.ndarray]:
        """Bonafide softmax probability and frame entropies; see ``log_odds``."""
        margin, h = self.log_odds(wave)
        return bonafide_probability(margin), h


def bonafide_probability(log_odds: np.ndarray) -> np.ndarray:
    """Two-class softmax in float64, written to avoid overflow."""
    x = np.asarray(log_odds, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
