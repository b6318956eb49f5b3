from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import pytest
import yaml

from mbae.config import DynamicsConfig, EnvConfig, PolicyConfig, TrainConfig, ValueConfig


def tiny_train_config(**changes: object) -> TrainConfig:
    """Small networks and short episodes, for tests that run whole training loops."""
    config = TrainConfig(
        episodes=10,
        batch_size=8,
        updates_per_episode=2,
        learning_starts=8,
        buffer_capacity=1024,
        eval_every=5,
        eval_episodes=2,
        policy=PolicyConfig(hidden_sizes=[8]),
        value=ValueConfig(hidden_sizes=[8]),
        dynamics=DynamicsConfig(blocks=1, block_width=8, disc_hidden_sizes=[8], reward_hidden_sizes=[8]),
    )
    return dataclasses.replace(config, **changes)


def tiny_env_config(**changes: object) -> EnvConfig:
    return dataclasses.replace(EnvConfig(dim=2, max_steps=12), **changes)


def write_experiment(path: Path, **changes: object) -> Path:
    """Write a small experiment YAML and return its path."""
    document = {
        "name": "tiny",
        "seeds": [0, 1],
        "variants": ["cacla", "cacla+mbae"],
        "output_dir": str(path.parent / "results"),
        "env": {"dim": 2, "max_steps": 12},
        "train": {
            "episodes": 10,
            "batch_size": 8,
            "updates_per_episode": 2,
            "learning_starts": 8,
            "buffer_capacity": 1024,
            "eval_every": 5,
            "eval_episodes": 2,
            "policy": {"hidden_sizes": [8]},
            "value": {"hidden_sizes": [8]},
            "dynamics": {"blocks": 1, "block_width": 8, "disc_hidden_sizes": [8], "reward_hidden_sizes": [8]},
        },
    }
    document.update(changes)
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return path


class QuadraticValue:
    """V(x) = -||x - goal||^2."""

    def __init__(self, goal: np.ndarray) -> None:
        self.goal = np.asarray(goal, dtype=np.float64)

    def values(self, states: np.ndarray) -> np.ndarray:
        return -np.sum((np.atleast_2d(states) - self.goal) ** 2, axis=1)

    def grad_wrt_state(self, states: np.ndarray, seed: np.ndarray | None = None) -> np.ndarray:
        states = np.atleast_2d(states)
        seed = np.ones(len(states)) if seed is None else np.reshape(seed, -1)
        return -2.0 * (states - self.goal) * seed[:, None]


class FlatValue:
    def grad_wrt_state(self, states: np.ndarray, seed: np.ndarray | None = None) -> np.ndarray:
        return np.zeros_like(np.atleast_2d(states))


class AdditiveModel:
    """G(s, u, eta) = s + u, ignoring the noise it still draws."""

    def sample_noise(self, rng: np.random.Generator, rows: int = 1) -> np.ndarray:
        return rng.standard_normal((rows, 1))

    def predict_successors(self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return np.atleast_2d(states) + np.atleast_2d(actions)

    def predict_rewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(states)))

    def successor_action_vjp(
        self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray, seed: np.ndarray
    ) -> np.ndarray:
        return np.atleast_2d(seed).copy()


class FixedPolicy:
    """Constant mean with a fixed exploration std."""

    def __init__(self, mean: np.ndarray, sigma: float) -> None:
        self.mean = np.asarray(mean, dtype=np.float64)
        self._sigma = np.full(len(self.mean), sigma)

    @property
    def sigma(self) -> np.ndarray:
        return self._sigma

    def mean_action(self, state: np.ndarray) -> np.ndarray:
        return self.mean.copy()

    def sample_action(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.clip(self.mean + self._sigma * rng.standard_normal(len(self.mean)), -1.0, 1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def env_config() -> EnvConfig:
    return tiny_env_config()


@pytest.fixture
def train_config() -> TrainConfig:
    return tiny_train_config()
