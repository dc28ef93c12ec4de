"""Minimal dense tensors with reverse-mode automatic differentiation
"""

from . import kernels, ops
from .gradcheck import grad_check, relative_error
from .tensor import Tape, Tensor, active_tape, backward, default_dtype, precision

__all__ = [
    "Tape",
    "Tensor",
    "active_tape",
    "backward",
    "default_dtype",
    "grad_check",
    "kernels",
    "ops",
    "precision",
    "relative_error",
]
