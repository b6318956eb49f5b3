"""Field diagnostics over the first two state dimensions of a trained run.

For a grid of agent positions with the target at the arena center: the current value estimate, the
policy mean direction, the one-step dynamics model error under the mean action, and the MBAE direction.
"""  # noqa: D212, D415, W505

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
from pandas import DataFrame

from mbae.exploration import action_value_gradient
from mbae.tools import ConfigurationError

if TYPE_CHECKING:
    from pathlib import Path

    from mbae.trainer import Trainer

FIELD_COLUMNS = ["x", "y", "value", "policy_dx", "policy_dy", "model_error", "mbae_dx", "mbae_dy"]


def _unit_xy(vector: np.ndarray) -> tuple[float, float]:
    xy = vector[:2]
    norm = float(np.linalg.norm(xy))
    if norm == 0.0:
        return 0.0, 0.0
    return float(xy[0] / norm), float(xy[1] / norm)


def field_diagnostics(
    trainer: Trainer, rng: np.random.Generator, resolution: int = 11, noise_samples: int = 16
) -> DataFrame:
    """One row per grid point, columns FIELD_COLUMNS.

    The model error is the distance between the true successor and the generator's successor averaged
    over `noise_samples` noise draws.

    Raises:
        ConfigurationError: If the environment has fewer than two dimensions or the grid is degenerate.
    """
    env = trainer.env
    if env.dim < 2:
        msg = "field diagnostics need at least two dimensions"
        raise ConfigurationError(msg)
    if resolution < 2 or noise_samples < 1:
        msg = "field diagnostics need a grid of at least 2x2 and one noise sample"
        raise ConfigurationError(msg)

    target = (env.low + env.high) / 2.0
    axis = np.linspace(env.config.low, env.config.high, resolution)
    rows = []
    for y in axis:
        for x in axis:
            agent = target.copy()
            agent[:2] = (x, y)
            state = np.concatenate([agent - target, agent])
            mean_action = trainer.policy.mean_action(state)

            noise = trainer.dynamics.sample_noise(rng, noise_samples)
            states = np.repeat(state[None, :], noise_samples, axis=0)
            actions = np.repeat(mean_action[None, :], noise_samples, axis=0)
            predicted = trainer.dynamics.predict_successors(states, actions, noise).mean(axis=0)
            model_error = float(np.linalg.norm(env.true_dynamics(state, mean_action) - predicted))

            gradient = action_value_gradient(state, mean_action, trainer.value, trainer.dynamics, noise[:1])
            rows.append(
                (
                    float(x),
                    float(y),
                    trainer.value.value(state),
                    *_unit_xy(mean_action),
                    model_error,
                    *_unit_xy(gradient),
                )
            )
    return DataFrame(rows, columns=FIELD_COLUMNS)


def write_field_csv(frame: DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n")
