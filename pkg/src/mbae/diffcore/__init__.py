"""Minimal reverse-mode differentiation engine.

Define-by-run tapes over float64 tensors, dense/concat-skip/dropout networks, and SGD/Adam. Gradients
are available with respect to network inputs as well as parameters, which is what lets exploration
differentiate value-through-dynamics into the action.
"""  # noqa: D212, D415, W505

from __future__ import annotations

from .network import LayerSpec, Network, densenet_specs, mlp_specs
from .optim import OptimizerState, optimize_step
from .tensor import Tape, Tensor, backward
