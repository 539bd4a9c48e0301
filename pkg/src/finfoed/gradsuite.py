"""Finite-difference checks for every differentiable op and the composed training loss.

Inputs are drawn per seed. Ops with kinks (relu, leaky relu, clamp, maximum)
get inputs pushed away from the kink so the central difference never
straddles it.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .audio.features import log_mel, mel_filterbank, power_spectrogram
from .model import LatentGaussian, Model, adapter_forward, frame_entropy, reparameterize, tiny_config
from .tensor import Tensor, grad_check
from .tensor import functional as F
from .training.losses import LossConfig, loss_cls, loss_kl, loss_recon, total_loss

OP_TOLERANCE = 1e-4
COMPOSED_TOLERANCE = 1e-3
STEP = 1e-4
# a key bias shifts every score in a softmax row equally, so its gradient is
# identically zero and a relative error against round-off means nothing
ZERO_GRADIENT_SUFFIX = ".attn.bk"
# decoder pre-activations pass through leaky ReLU; a small step keeps the difference off the kink
KINK_STEP = 1e-6


@dataclass(frozen=True)
class GradCase:
    name: str
    op: Callable[..., Tensor]
    inputs: Callable[[np.random.Generator], list[np.ndarray]]
    tolerance: float = OP_TOLERANCE
    max_coords: int | None = None
    param_sample: int | None = None   # check this many randomly chosen tiny-model tensors per seed
    groups: tuple[str, ...] = ()      # parameter groups eligible for that sample
    step: float = STEP


@dataclass(frozen=True)
class GradResult:
    name: str
    seed: int
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance


def _away(x: np.ndarray, margin: float = 0.05) -> np.ndarray:
    return np.where(x >= 0, x + margin, x - margin)


def _normal(*shape):
    return lambda r: r.standard_normal(shape)


def _clamp_input(r: np.random.Generator) -> np.ndarray:
    # values land in (-0.8, 0.8) or beyond +-1.1, never near the bounds
    x = 2 * r.standard_normal((5, 3))
    return np.where(np.abs(x) > 0.9, x + np.sign(x) * 0.2, x * 0.8)


def _inputs(*makers):
    return lambda r: [m(r) for m in makers]


_TINY = tiny_config()
_TINY_FBANK = mel_filterbank(_TINY.n_mels, _TINY.n_fft)
_TINY_NAMES = sorted(Model.init(_TINY, 0).params)


def _tiny_params(r: np.random.Generator) -> list[np.ndarray]:
    model = Model.init(_TINY, int(r.integers(0, 2**31)))
    arrays = []
    for name in _TINY_NAMES:
        a = model.params[name].data.astype(np.float64)
        # exercise the adapters and biases rather than leaving them at zero
        arrays.append(a + 0.1 * r.standard_normal(a.shape))
    return arrays


def _composed_loss(*tensors: Tensor) -> Tensor:
    wave, eps, mel_gt = tensors[:3]
    model = Model(_TINY, dict(zip(_TINY_NAMES, tensors[3:])))
    g = model.encode(model.backbone_forward(wave))
    logits = model.classify(frame_entropy(g))
    mel_pred = model.mel(model.decode(reparameterize(g, eps.data)))
    cfg = LossConfig()
    return total_loss(loss_recon(mel_pred, mel_gt), loss_kl(g), loss_cls(logits, [0, 1], cfg), cfg)


def _composed_inputs(r: np.random.Generator) -> list[np.ndarray]:
    wave = 0.5 * r.standard_normal((2, _TINY.clip_samples))
    eps = r.standard_normal((2, _TINY.frames, _TINY.latent_dim))
    frames = (_TINY.decoded_samples - _TINY.n_fft) // _TINY.hop + 1
    mel_gt = r.standard_normal((2, frames, _TINY.n_mels))
    return [wave, eps, mel_gt] + _tiny_params(r)


def _model_case(method: str):
    def op(x, *params):
        model = Model(_TINY, dict(zip(_TINY_NAMES, params)))
        if method == "backbone":
            return model.backbone_forward(x)
        if method == "encode":
            g = model.encode(x)
            return F.add(g.mu, g.log_sigma)
        if method == "decode":
            return model.decode(x)
        return model.classify(x)
    return op


def _model_inputs(shape):
    return lambda r: [r.standard_normal(shape)] + _tiny_params(r)


def cases() -> list[GradCase]:
    c = _TINY
    return [
        GradCase("add", F.add, _inputs(_normal(3, 4), _normal(4))),
        GradCase("sub", F.sub, _inputs(_normal(3, 4), _normal(3, 1))),
        GradCase("mul", F.mul, _inputs(_normal(2, 3, 4), _normal(3, 4))),
        GradCase("square", F.square, _inputs(_normal(5, 3))),
        GradCase("exp", F.exp, _inputs(_normal(5, 3))),
        GradCase("log", F.log, _inputs(lambda r: np.exp(r.standard_normal((5, 3))))),
        GradCase("tanh", F.tanh, _inputs(_normal(5, 3))),
        GradCase("relu", F.relu, _inputs(lambda r: _away(r.standard_normal((5, 3))))),
        GradCase("leaky_relu", lambda x: F.leaky_relu(x, 0.1), _inputs(lambda r: _away(r.standard_normal((5, 3))))),
        GradCase("gelu", F.gelu, _inputs(_normal(5, 3))),
        GradCase("clamp", lambda x: F.clamp(x, -1.0, 1.0), _inputs(_clamp_input)),
        GradCase("maximum", lambda x: F.maximum(x, 0.3),
                 _inputs(lambda r: 0.3 + _away(r.standard_normal((5, 3))))),
        GradCase("sum", lambda x: F.sum(x, axis=1), _inputs(_normal(3, 4, 2))),
        GradCase("mean", lambda x: F.mean(x, axis=(0, 2), keepdims=True), _inputs(_normal(3, 4, 2))),
        GradCase("reshape", lambda x: F.reshape(x, (4, 6)), _inputs(_normal(2, 3, 4))),
        GradCase("swapaxes", lambda x: F.swapaxes(x, 0, 2), _inputs(_normal(2, 3, 4))),
        GradCase("slice_last", lambda x: F.slice_last(x, 1, 4), _inputs(_normal(2, 5))),
        GradCase("slice_axis", lambda x: F.slice_axis(x, 1, 1, 3), _inputs(_normal(2, 4, 3))),
        GradCase("pad1d", lambda x: F.pad1d(x, 2, 1), _inputs(_normal(2, 3, 4))),
        GradCase("matmul", F.matmul, _inputs(_normal(2, 3, 4), _normal(4, 5))),
        GradCase("linear", F.linear, _inputs(_normal(3, 4), _normal(4, 2), _normal(2))),
        GradCase("bmm", F.bmm, _inputs(_normal(2, 3, 4), _normal(2, 4, 5))),
        GradCase("softmax", F.softmax, _inputs(_normal(3, 5))),
        GradCase("log_softmax", F.log_softmax, _inputs(_normal(3, 5))),
        GradCase("layer_norm", F.layer_norm, _inputs(_normal(3, 6), _normal(6), _normal(6))),
        GradCase("attention", F.attention, _inputs(_normal(2, 5, 4), _normal(2, 5, 4), _normal(2, 5, 3))),
        GradCase("conv1d", lambda x, w: F.conv1d(x, w, 2), _inputs(_normal(2, 3, 11), _normal(4, 3, 3))),
        GradCase("transposed_conv1d", lambda x, w: F.transposed_conv1d(x, w, 3),
                 _inputs(_normal(2, 3, 5), _normal(3, 2, 6))),
        GradCase("transposed_conv1d_tc", lambda x, w: F.transposed_conv1d_tc(x, w, 2),
                 _inputs(_normal(2, 5, 3), _normal(3, 2, 4))),
        GradCase("power_spectrogram", lambda x: power_spectrogram(x, 16, 4), _inputs(_normal(2, 40))),
        GradCase("log_mel", lambda x: log_mel(x, _TINY_FBANK, 16, 4), _inputs(_normal(2, 40))),
        GradCase("adapter", adapter_forward,
                 _inputs(_normal(2, 3, 4), _normal(4, 3), _normal(3), _normal(3, 4), _normal(4))),
        GradCase("frame_entropy", lambda m, s: frame_entropy(LatentGaussian(m, s)),
                 _inputs(_normal(2, 5, 3), _normal(2, 5, 3))),
        GradCase("reparameterize", lambda m, s, e: reparameterize(LatentGaussian(m, s), e.data),
                 _inputs(_normal(2, 5, 3), _normal(2, 5, 3), _normal(2, 5, 3))),
        GradCase("backbone", _model_case("backbone"), _model_inputs((2, c.clip_samples)),
                 max_coords=8, param_sample=8, groups=("backbone", "adapter")),
        GradCase("encode", _model_case("encode"), _model_inputs((2, c.frames, c.width)),
                 max_coords=8, param_sample=4, groups=("encoder",)),
        GradCase("decode", _model_case("decode"), _model_inputs((2, c.frames, c.latent_dim)),
                 max_coords=8, param_sample=4, groups=("decoder",), step=KINK_STEP),
        GradCase("classify", _model_case("classify"), _model_inputs((2, c.frames)),
                 max_coords=8, param_sample=4, groups=("classifier",)),
        GradCase("loss_recon", loss_recon, _inputs(_normal(2, 5, 3), _normal(2, 6, 3))),
        GradCase("loss_kl", lambda m, s: loss_kl(LatentGaussian(m, s)), _inputs(_normal(2, 5, 3), _normal(2, 5, 3))),
        GradCase("loss_cls", lambda z: loss_cls(z, [0, 1, 1]), _inputs(_normal(3, 2))),
        GradCase("total_loss", lambda a, b, d: total_loss(a, b, d), _inputs(_normal(), _normal(), _normal())),
        GradCase("composed_loss", _composed_loss, _composed_inputs,
                 tolerance=COMPOSED_TOLERANCE, max_coords=8, param_sample=8,
                 groups=("backbone", "adapter", "encoder", "decoder", "classifier"), step=KINK_STEP),
    ]


def run_case(case: GradCase, seed: int) -> GradResult:
    r = np.random.default_rng([seed, sum(map(ord, case.name))])
    inputs = case.inputs(r)
    wrt = None
    if case.name == "reparameterize":
        wrt = [0, 1]
    if case.param_sample is not None:
        first = 3 if case.name == "composed_loss" else 1  # eps and the mel target are constants
        eligible = [first + j for j, n in enumerate(_TINY_NAMES)
                    if n.split(".", 1)[0] in case.groups and not n.endswith(ZERO_GRADIENT_SUFFIX)]
        picked = r.choice(eligible, size=min(case.param_sample, len(eligible)), replace=False)
        wrt = [0] + sorted(int(i) for i in picked)
    err = grad_check(case.op, inputs, h=case.step, wrt=wrt, seed=seed, max_coords=case.max_coords)
    return GradResult(case.name, seed, err, case.tolerance)


def run_suite(seeds=range(50), names: set[str] | None = None,
              progress: Callable[[GradResult], None] | None = None) -> tuple[list[GradResult], float]:
    """Run every case at every seed; returns results and wall time in seconds."""
    start = time.perf_counter()
    results = []
    for case in cases():
        if names is not None and case.name not in names:
            continue
        for seed in seeds:
            res = run_case(case, seed)
            results.append(res)
            if progress:
                progress(res)
    return results, time.perf_counter() - start
