from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

ADAPTER_PLACEMENTS = ("pre_final_norm", "pre_attn_norm")
CLASSIFIER_SHIFTS = ("corpus", "utterance")


@dataclass(frozen=True)
class ModelConfig:
    clip_samples: int = 64600
    frontend_kernel: int = 400
    frontend_stride: int = 320
    width: int = 128
    layers: int = 2
    heads: int = 1
    ffn: int = 256
    adapter_dim: int = 256
    adapter_placement: str = "pre_final_norm"
    latent_dim: int = 192
    encoder_hidden: int = 192
    encoder_kernel: int = 3
    log_sigma_clamp: float = 7.0
    decoder_rates: tuple[int, ...] = (5, 4, 4, 2, 2)
    decoder_channels: tuple[int, ...] = (64, 48, 32, 16, 8)
    decoder_slope: float = 0.1
    classifier_hidden: int = 64
    classifier_shift: str = "corpus"
    n_fft: int = 1024
    hop: int = 256
    n_mels: int = 80

    def __post_init__(self):
        object.__setattr__(self, "decoder_rates", tuple(int(r) for r in self.decoder_rates))
        object.__setattr__(self, "decoder_channels", tuple(int(c) for c in self.decoder_channels))
        if self.heads != 1:
            raise ValueError("only single-head attention is supported")
        if int(np.prod(self.decoder_rates)) != self.frontend_stride:
            raise ValueError(
                f"decoder rates {self.decoder_rates} multiply to {int(np.prod(self.decoder_rates))}, "
                f"but the frontend stride is {self.frontend_stride}"
            )
        if len(self.decoder_channels) != len(self.decoder_rates):
            raise ValueError("need one decoder channel width per upsampling stage")
        if self.adapter_placement not in ADAPTER_PLACEMENTS:
            raise ValueError(f"adapter_placement must be one of {ADAPTER_PLACEMENTS}")
        if self.classifier_shift not in CLASSIFIER_SHIFTS:
            raise ValueError(f"classifier_shift must be one of {CLASSIFIER_SHIFTS}")
        if self.encoder_kernel % 2 != 1:
            raise ValueError("encoder_kernel must be odd so symmetric padding preserves frame count")
        if self.clip_samples < self.frontend_kernel:
            raise ValueError("clip shorter than the frontend kernel")

    @property
    def frames(self) -> int:
        """Feature frames C for a standardised clip."""
        return (self.clip_samples - self.frontend_kernel) // self.frontend_stride + 1

    @property
    def adapter_width(self) -> int:
        return min(self.adapter_dim, 2 * self.width)

    @property
    def decoded_samples(self) -> int:
        return self.frames * self.frontend_stride

    def to_dict(self) -> dict:
        d = asdict(self)
        d["decoder_rates"] = list(self.decoder_rates)
        d["decoder_channels"] = list(self.decoder_channels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def tiny_config(**overrides) -> ModelConfig:
    """A few-hundred-parameter configuration for finite-difference checks."""
    base = dict(
        clip_samples=42, frontend_kernel=10, frontend_stride=8, width=4, ffn=6,
        adapter_dim=3, latent_dim=3, encoder_hidden=4, decoder_rates=(2, 2, 2),
        decoder_channels=(4, 3, 2), classifier_hidden=3, n_fft=16, hop=4, n_mels=6,
    )
    base.update(overrides)
    return ModelConfig(**base)
