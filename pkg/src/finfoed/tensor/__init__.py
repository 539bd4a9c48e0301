"""Minimal dense tensors, reverse-mode autodiff, Adam, and a seeded RNG."""
from .core import (
    DomainError,
    NonFiniteError,
    ShapeError,
    Tensor,
    TensorError,
    as_tensor,
    no_grad,
    precision,
)
from . import functional
from .gradcheck import grad_check, relative_error
from .optim import AdamState, NonFiniteGradientError, adam_step
from .rng import Rng

__all__ = [
    "AdamState",
    "DomainError",
    "NonFiniteError",
    "NonFiniteGradientError",
    "Rng",
    "ShapeError",
    "Tensor",
    "TensorError",
    "adam_step",
    "as_tensor",
    "functional",
    "grad_check",
    "no_grad",
    "precision",
    "relative_error",
]
