from .augment import RawBoostConfig, rawboost_augment
from .features import (
    CLIP_SAMPLES,
    HOP,
    N_FFT,
    N_MELS,
    log_mel,
    mel_filterbank,
    mel_spectrogram,
    num_frames,
    power_spectrogram,
    standardize_clip,
    stft_magnitude,
)
from .perturb import PerturbSpec, bitrate_perturb, duration_perturb, full_sweep
from .wavio import SAMPLE_RATE, WavFormatError, read_wav, write_wav
