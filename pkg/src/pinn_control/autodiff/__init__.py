"""Automatic differentiation: forward Taylor jets for input derivatives,
reverse-mode tape for parameter gradients."""

from .engine import (
    ChannelDerivatives,
    DerivativeBundle,
    GradientSet,
    Recording,
    eval_with_input_jets,
    grad_scalar,
)
from .jets import Jet, jet_tanh
from .tape import NonFiniteError, RecordingError, Tape, Variable

__all__ = [
    "ChannelDerivatives",
    "DerivativeBundle",
    "GradientSet",
    "Jet",
    "NonFiniteError",
    "Recording",
    "RecordingError",
    "Tape",
    "Variable",
    "eval_with_input_jets",
    "grad_scalar",
    "jet_tanh",
]
