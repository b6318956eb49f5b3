from __future__ import annotations

from typing import TYPE_CHECKING, Protocol

import numpy as np

from mbae.tools import Experience, ExperienceBatch

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.config import DynaConfig
    from mbae.valuefn import ValueFunction


class SyntheticModel(Protocol):
    def sample_noise(self, rng: np.random.Generator, rows: int = 1) -> np.ndarray: ...

    def predict_successors(self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray) -> np.ndarray: ...

    def predict_rewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray: ...


def synthetic_batch(
    dynamics: SyntheticModel, batch: ExperienceBatch, rng: np.random.Generator, reward_source: str = "learned"
) -> ExperienceBatch:
    """Copy of `batch` with every s' replaced by G(s, u, eta), one fresh eta per row.

    Rewards come from the reward model, or stay as replayed when `reward_source` is "replayed".
    Terminal flags are kept.
    """
    noise = dynamics.sample_noise(rng, len(batch))
    changes = {"next_states": dynamics.predict_successors(batch.states, batch.actions, noise)}
    if reward_source == "learned":
        changes["rewards"] = dynamics.predict_rewards(batch.states, batch.actions)
    return batch.replace(**changes)


def dyna_update(
    value: ValueFunction,
    dynamics: SyntheticModel,
    batch: Sequence[Experience] | ExperienceBatch,
    rng: np.random.Generator,
    config: DynaConfig,
) -> float:
    """Run the configured number of TD updates on model-synthesized successors.

    Returns the mean synthetic TD loss, or 0.0 when the phase is disabled. Only the value function
    is trained; the real batch and the dynamics model are left alone.
    """
    if config.updates == 0:
        return 0.0
    if not isinstance(batch, ExperienceBatch):
        batch = ExperienceBatch.stack(batch)
    losses = [
        value.td_update(synthetic_batch(dynamics, batch, rng, config.reward_source)) for _ in range(config.updates)
    ]
    return float(np.mean(losses))
