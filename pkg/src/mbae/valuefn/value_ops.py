from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from mbae.diffcore import Network, OptimizerState, mlp_specs, optimize_step
from mbae.tools import Experience, ExperienceBatch, check_finite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.config import ValueConfig


def _as_batch(batch: Sequence[Experience] | ExperienceBatch) -> ExperienceBatch:
    return batch if isinstance(batch, ExperienceBatch) else ExperienceBatch.stack(batch)


class ValueFunction:
    """V(s) regressed on one-step TD targets; the bootstrap V(s') is held constant."""

    def __init__(self, state_width: int, config: ValueConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.gamma = config.gamma
        self.net = Network(state_width, mlp_specs(config.hidden_sizes, 1, config.activation), rng, name="value")
        self.optimizer = OptimizerState(kind=config.optimizer, learning_rate=config.learning_rate)

    def values(self, states: np.ndarray) -> np.ndarray:
        return self.net(np.atleast_2d(states))[:, 0]

    def value(self, state: np.ndarray) -> float:
        return float(self.values(state)[0])

    def td_targets(self, batch: ExperienceBatch) -> np.ndarray:
        bootstrap = np.where(batch.terminals, 0.0, self.values(batch.next_states))
        return batch.rewards + self.gamma * bootstrap

    def td_loss(self, batch: Sequence[Experience] | ExperienceBatch) -> float:
        batch = _as_batch(batch)
        residual = self.td_targets(batch) - self.values(batch.states)
        return float(np.mean(residual**2))

    def td_update(self, batch: Sequence[Experience] | ExperienceBatch) -> float:
        """One optimizer step on mean (r + gamma V(s') - V(s))^2; returns the pre-step loss."""
        batch = _as_batch(batch)
        targets = self.td_targets(batch)
        output = self.net.forward(batch.states, train_mode=True)
        predictions = output.data[:, 0]
        loss = float(check_finite(np.mean((targets - predictions) ** 2), "value loss"))

        seed = (2.0 / len(batch)) * (predictions - targets)
        output.tape.backward(output, seed[:, None])
        optimize_step(self.net.parameters(), self.optimizer)
        return loss

    def advantages(self, batch: Sequence[Experience] | ExperienceBatch) -> np.ndarray:
        """One-step TD residuals r + gamma V(s') - V(s)."""
        batch = _as_batch(batch)
        return self.td_targets(batch) - self.values(batch.states)

    def advantage(self, e: Experience) -> float:
        return float(self.advantages([e])[0])

    def grad_wrt_state(self, states: np.ndarray, seed: np.ndarray | None = None) -> np.ndarray:
        """d(seed . V(states))/d(states); seed defaults to ones."""
        states = np.atleast_2d(states)
        if seed is None:
            seed = np.ones(len(states))
        return self.net.grad_wrt_input(states, np.reshape(seed, (-1, 1)))
