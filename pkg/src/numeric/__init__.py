"""Numeric substrate: tensors, reverse-mode differentiation and primitives."""

from src.numeric import ops
from src.numeric.gradcheck import grad_check, relative_error, sample_indices
from src.numeric.rng import SplitMix64
from src.numeric.tensor import (
    Graph,
    Tensor,
    backward,
    enable_grad,
    grad,
    is_grad_enabled,
    no_grad,
)

__all__ = [
    "Graph",
    "SplitMix64",
    "Tensor",
    "backward",
    "enable_grad",
    "grad",
    "grad_check",
    "is_grad_enabled",
    "no_grad",
    "ops",
    "relative_error",
    "sample_indices",
]
