from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from mbae.tools import ConfigurationError, NumericError

if TYPE_CHECKING:
    from mbae.config import EnvConfig


@dataclass(frozen=True)
class Box:
    """Axis-aligned box; a point on its boundary counts as inside."""

    center: np.ndarray
    half_extent: np.ndarray

    def contains(self, point: np.ndarray) -> bool:
        return bool(np.all(np.abs(point - self.center) <= self.half_extent))


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    terminal: bool


@dataclass
class ParticleEnv:
    """Continuous N-dimensional grid world: move a particle to a target around box obstacles.

    Observations are concat(agent - target, agent), 2N features. Actions are N-vectors clipped to
    [-1, 1] and scaled by the step size. Reward is the per-step progress towards the target plus a
    bonus on arrival.
    """

    config: EnvConfig
    agent_pos: np.ndarray = field(init=False)
    offset: np.ndarray = field(init=False)  # agent - target
    steps: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self.dim = self.config.dim
        self.low = np.full(self.dim, self.config.low)
        self.high = np.full(self.dim, self.config.high)
        self.obstacles = [
            Box(np.asarray(box.center, dtype=np.float64), np.asarray(box.half_extent, dtype=np.float64))
            for box in self.config.obstacles
        ]
        self.agent_pos = np.zeros(self.dim)
        self.offset = np.zeros(self.dim)

    @property
    def observation_width(self) -> int:
        return 2 * self.dim

    @property
    def action_width(self) -> int:
        return self.dim

    def inside(self, point: np.ndarray) -> bool:
        return bool(np.all(point >= self.low) and np.all(point <= self.high))

    def blocked(self, point: np.ndarray) -> bool:
        return any(box.contains(point) for box in self.obstacles)

    @property
    def target_pos(self) -> np.ndarray:
        return self.agent_pos - self.offset

    def observe(self) -> np.ndarray:
        return np.concatenate([self.offset, self.agent_pos])

    def split_observation(self, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Recover (agent, target) positions from an observation."""
        agent = np.asarray(state[self.dim :], dtype=np.float64)
        return agent, agent - np.asarray(state[: self.dim], dtype=np.float64)

    def place(self, agent: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Put agent and target at given free positions and start a new episode.

        Raises:
            ConfigurationError: If either position is outside the arena or inside an obstacle.
        """
        agent = np.asarray(agent, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        for point in (agent, target):
            if point.shape != (self.dim,) or not self.inside(point) or self.blocked(point):
                msg = f"position {point} is not free space"
                raise ConfigurationError(msg)
        self.agent_pos, self.offset, self.steps = agent.copy(), agent - target, 0
        return self.observe()

    def _sample_free(self, rng: np.random.Generator, avoid: np.ndarray | None = None) -> np.ndarray:
        for _ in range(self.config.max_placement_attempts):
            point = rng.uniform(self.low, self.high)
            if self.blocked(point):
                continue
            if avoid is not None and np.linalg.norm(point - avoid) < self.config.goal_radius:
                continue
            return point
        msg = f"no free position found in {self.config.max_placement_attempts} attempts; the arena is over-full"
        raise ConfigurationError(msg)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        """Place agent and target uniformly in free space by rejection sampling."""
        agent = self._sample_free(rng)
        target = self._sample_free(rng, avoid=agent)
        self.agent_pos, self.offset, self.steps = agent, agent - target, 0
        return self.observe()

    def _move(self, agent: np.ndarray, action: np.ndarray) -> np.ndarray:
        action = np.asarray(action, dtype=np.float64)
        if not np.all(np.isfinite(action)):
            msg = "non-finite action"
            raise NumericError(msg)
        candidate = np.clip(agent + self.config.step_scale * np.clip(action, -1.0, 1.0), self.low, self.high)
        return agent.copy() if self.blocked(candidate) else candidate

    def step(self, action: np.ndarray) -> StepResult:
        """Advance one step; the successor is exactly `true_dynamics(observe(), action)`."""
        state = self.observe()
        next_state = self.true_dynamics(state, action)
        self.offset, self.agent_pos = next_state[: self.dim].copy(), next_state[self.dim :].copy()
        self.steps += 1
        d_before = float(np.linalg.norm(state[: self.dim]))
        d_after = float(np.linalg.norm(next_state[: self.dim]))

        reached = d_after < self.config.goal_radius
        reward = d_before - d_after + (self.config.goal_bonus if reached else 0.0)
        terminal = reached or self.steps >= self.config.max_steps
        return StepResult(next_state, reward, terminal)

    def true_dynamics(self, state: np.ndarray, action: np.ndarray) -> np.ndarray:
        """Successor observation under the real kinematics, without reward or termination."""
        offset = np.asarray(state[: self.dim], dtype=np.float64)
        agent = np.asarray(state[self.dim :], dtype=np.float64)
        moved = self._move(agent, action)
        return np.concatenate([offset + (moved - agent), moved])
