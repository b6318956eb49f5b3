from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np

from mbae.tools import LinearSchedule, check_finite

if TYPE_CHECKING:
    from mbae.config import MbaeConfig


class ActionPolicy(Protocol):
    @property
    def sigma(self) -> np.ndarray: ...

    def mean_action(self, state: np.ndarray) -> np.ndarray: ...

    def sample_action(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


class ValueModel(Protocol):
    def grad_wrt_state(self, states: np.ndarray, seed: np.ndarray | None = None) -> np.ndarray: ...


class SuccessorModel(Protocol):
    def sample_noise(self, rng: np.random.Generator, rows: int = 1) -> np.ndarray: ...

    def predict_successors(self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray) -> np.ndarray: ...

    def successor_action_vjp(
        self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray, seed: np.ndarray
    ) -> np.ndarray: ...


def action_value_gradient(
    state: np.ndarray, action: np.ndarray, value: ValueModel, dynamics: SuccessorModel, noise: np.ndarray
) -> np.ndarray:
    """d V(G(s, u, eta)) / du: one backward pass through V, chained through G."""
    states, actions = np.atleast_2d(state), np.atleast_2d(action)
    successor = dynamics.predict_successors(states, actions, noise)
    value_grad = value.grad_wrt_state(successor)
    grad = dynamics.successor_action_vjp(states, actions, noise, value_grad)[0]
    return check_finite(grad, "action gradient")


@dataclass
class ModelBasedExplorer:
    """Perturbs exploratory actions along the value-through-dynamics gradient.

    Owns its own random stream, so runs that share a seed draw identical policy noise and p-coins
    whether or not deltas end up being applied.
    """

    config: MbaeConfig
    rng: np.random.Generator
    alpha_horizon: int
    episode: int = 0
    mbae_steps: int = 0
    delta_norms: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.alpha_schedule = LinearSchedule(self.config.alpha_initial, self.config.alpha_final, self.alpha_horizon)

    @property
    def alpha_u(self) -> float:
        return self.alpha_schedule.value(self.episode)

    def set_episode(self, episode: int) -> None:
        self.episode = episode

    def pop_stats(self) -> tuple[int, list[float]]:
        """Return and clear the MBAE step count and delta norms gathered since the last call."""
        stats = (self.mbae_steps, self.delta_norms)
        self.mbae_steps, self.delta_norms = 0, []
        return stats

    def get_action_delta(
        self,
        state: np.ndarray,
        policy: ActionPolicy,
        value: ValueModel,
        dynamics: SuccessorModel,
        *,
        action: np.ndarray | None = None,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """alpha_u * normalize(g) * (1 + |length noise|) for g = dV(G(s, u_hat, eta))/du_hat.

        u_hat is a fresh policy sample unless `action` is given. A flat value gives a zero delta.
        """
        rng = rng if rng is not None else self.rng
        base = policy.sample_action(state, rng) if action is None else np.asarray(action, dtype=np.float64)
        noise = dynamics.sample_noise(rng)
        jitter = 1.0 + abs(self.config.length_noise * rng.standard_normal())

        grad = action_value_gradient(state, base, value, dynamics, noise)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            return np.zeros_like(grad)
        length = 1.0 if self.config.normalization == "unit" else float(np.linalg.norm(policy.sigma))
        return (self.alpha_u * length * jitter / norm) * grad

    def exploratory_action(
        self,
        state: np.ndarray,
        policy: ActionPolicy,
        value: ValueModel,
        dynamics: SuccessorModel,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """Gaussian exploration; with probability p, shifted by an MBAE delta. The p-coin is always drawn."""
        action = policy.sample_action(state, rng)
        if rng.random() < self.config.p:
            delta = self.get_action_delta(state, policy, value, dynamics)
            self.mbae_steps += 1
            self.delta_norms.append(float(np.linalg.norm(delta)))
            action = np.clip(action + delta, -1.0, 1.0)
        return action

    def optimize_action(
        self,
        state: np.ndarray,
        policy: ActionPolicy,
        value: ValueModel,
        dynamics: SuccessorModel,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        """Gradient ascent on predicted value over actions, starting from the policy mean."""
        action = policy.mean_action(state)
        for _ in range(self.config.optimize_iters):
            delta = self.get_action_delta(state, policy, value, dynamics, action=action, rng=rng)
            action = np.clip(action + delta, -1.0, 1.0)
        return action
