from .checkpoint import (
    MAGIC,
    VERSION,
    Checkpoint,
    CheckpointError,
    checkpoint_bytes,
    load_checkpoint,
    parse_checkpoint,
    save_checkpoint,
)
from .losses import LossConfig, LossError, loss_cls, loss_kl, loss_recon, total_loss
from .loop import ClipSet, TrainConfig, TrainingError, TrainResult, reference_entropy, score_waves, train
