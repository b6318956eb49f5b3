from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mbae.tools import ConfigurationError, check_finite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.diffcore.tensor import Tensor

OPTIMIZER_KINDS = ("sgd", "adam")


@dataclass
class OptimizerState:
    """SGD or bias-corrected Adam state for one parameter list."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    first_moments: list[np.ndarray] = field(default_factory=list)
    second_moments: list[np.ndarray] = field(default_factory=list)
    step_count: int = 0

    def __post_init__(self) -> None:
        if self.kind not in OPTIMIZER_KINDS:
            msg = f"unknown optimizer {self.kind!r}"
            raise ConfigurationError(msg)
        if self.learning_rate <= 0.0:
            msg = f"learning rate must be positive, got {self.learning_rate}"
            raise ConfigurationError(msg)

    def bind(self, params: Sequence[Tensor]) -> None:
        """Allocate zeroed moments matching `params` (no-op if they already match).

        Raises:
            ConfigurationError: If existing moments do not line up with the parameters.
        """
        if not self.first_moments:
            self.first_moments = [np.zeros_like(p.data) for p in params]
            self.second_moments = [np.zeros_like(p.data) for p in params]
            return
        shapes = [p.shape for p in params]
        if [m.shape for m in self.first_moments] != shapes or [v.shape for v in self.second_moments] != shapes:
            msg = "optimizer moments do not match the parameters they track"
            raise ConfigurationError(msg)

    def state_dict(self, prefix: str) -> dict[str, np.ndarray]:
        state = {}
        for i, (m, v) in enumerate(zip(self.first_moments, self.second_moments, strict=True)):
            state[f"{prefix}.m{i}"] = m.copy()
            state[f"{prefix}.v{i}"] = v.copy()
        return state

    def load_state_dict(self, prefix: str, state: dict[str, np.ndarray], step_count: int) -> None:
        for i, (m, v) in enumerate(zip(self.first_moments, self.second_moments, strict=True)):
            m[...] = np.reshape(state[f"{prefix}.m{i}"], m.shape)
            v[...] = np.reshape(state[f"{prefix}.v{i}"], v.shape)
        self.step_count = step_count


def optimize_step(params: Sequence[Tensor], opt: OptimizerState) -> None:
    """Apply one SGD/Adam update from the accumulated gradients, then zero them."""
    opt.bind(params)
    opt.step_count += 1
    t = opt.step_count
    for p, m, v in zip(params, opt.first_moments, opt.second_moments, strict=True):
        g = p.grad
        if opt.kind == "sgd":
            p.data -= opt.learning_rate * g
        else:
            m *= opt.beta1
            m += (1.0 - opt.beta1) * g
            v *= opt.beta2
            v += (1.0 - opt.beta2) * g * g
            m_hat = m / (1.0 - opt.beta1**t)
            v_hat = v / (1.0 - opt.beta2**t)
            p.data -= opt.learning_rate * m_hat / (np.sqrt(v_hat) + opt.eps)
        check_finite(p.data, f"parameter {p.name}")
        p.zero_grad()
