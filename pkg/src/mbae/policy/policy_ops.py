from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from mbae.diffcore import Network, OptimizerState, mlp_specs, optimize_step
from mbae.diffcore.tensor import tanh
from mbae.tools import Experience, ExperienceBatch, LinearSchedule, check_finite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.config import PolicyConfig


class GaussianPolicy:
    """tanh-squashed MLP mean with a state-independent, annealed exploration std (CACLA actor)."""

    def __init__(
        self,
        state_width: int,
        action_width: int,
        config: PolicyConfig,
        rng: np.random.Generator,
        sigma_horizon: int,
    ) -> None:
        self.config = config
        self.action_width = action_width
        specs = mlp_specs(config.hidden_sizes, action_width, config.activation)
        self.net = Network(state_width, specs, rng, name="policy")
        self.optimizer = OptimizerState(kind=config.optimizer, learning_rate=config.learning_rate)
        self.sigma_schedule = LinearSchedule(config.sigma_initial, config.sigma_final, sigma_horizon)
        self.episode = 0

    def set_episode(self, episode: int) -> None:
        self.episode = episode

    @property
    def sigma(self) -> np.ndarray:
        return np.full(self.action_width, self.sigma_schedule.value(self.episode))

    def mean_actions(self, states: np.ndarray) -> np.ndarray:
        return np.tanh(self.net(np.atleast_2d(states)))

    def mean_action(self, state: np.ndarray) -> np.ndarray:
        return self.mean_actions(state)[0]

    def sample_action(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """mean + sigma * N(0, 1), clipped to [-1, 1]."""
        noise = rng.standard_normal(self.action_width)
        return np.clip(self.mean_action(state) + self.sigma * noise, -1.0, 1.0)

    def masked_loss(self, states: np.ndarray, actions: np.ndarray, mask: np.ndarray) -> float:
        """Mean over masked rows of ||mu(s) - u||^2; zero when nothing is masked in."""
        count = int(mask.sum())
        if count == 0:
            return 0.0
        sq = np.sum((self.mean_actions(states) - actions) ** 2, axis=1)
        return float(np.sum(sq[mask]) / count)

    def cacla_update(self, batch: Sequence[Experience] | ExperienceBatch, advantages: np.ndarray) -> float:
        """Regress the mean towards actions whose advantage is positive; returns the masked loss.

        Samples with advantage <= 0 contribute nothing; with no positive sample the parameters and the
        optimizer state are left untouched.
        """
        if not isinstance(batch, ExperienceBatch):
            batch = ExperienceBatch.stack(batch)
        mask = np.asarray(advantages) > 0.0
        if not mask.any():
            return 0.0
        loss = self.cacla_backward(batch.states, batch.actions, mask)
        optimize_step(self.net.parameters(), self.optimizer)
        return loss

    def cacla_backward(self, states: np.ndarray, actions: np.ndarray, mask: np.ndarray) -> float:
        """Accumulate the masked-MSE gradient into the mean network's parameters; returns the loss."""
        count = int(mask.sum())
        pre = self.net.forward(states[mask], train_mode=True)
        mean = tanh(pre.tape, pre)
        diff = mean.data - actions[mask]
        loss = float(check_finite(np.sum(diff**2) / count, "policy loss"))
        pre.tape.backward(mean, (2.0 / count) * diff)
        return loss
