from .config import ModelConfig, tiny_config
from .network import (
    BONAFIDE,
    ENTROPY_CONSTANT_PER_DIM,
    ENTROPY_SHIFT,
    GROUPS,
    LABEL_INDEX,
    SPOOF,
    LatentGaussian,
    Model,
    adapter_forward,
    bonafide_probability,
    frame_entropy,
    reparameterize,
    sample_noise,
)
