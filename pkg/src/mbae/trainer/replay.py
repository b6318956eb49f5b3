from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING

import numpy as np

from mbae.tools import ConfigurationError, Experience, ExperienceBatch

if TYPE_CHECKING:
    from collections.abc import Iterator


class ReplayBuffer:
    """Bounded FIFO of transitions; the oldest experience is evicted first."""

    def __init__(self, capacity: int) -> None:
        if capacity < 1:
            msg = f"replay capacity must be positive, got {capacity}"
            raise ConfigurationError(msg)
        self.capacity = capacity
        self._items: deque[Experience] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[Experience]:
        return iter(self._items)

    def add(self, experience: Experience) -> None:
        self._items.append(experience)

    def extend(self, experiences: list[Experience]) -> None:
        self._items.extend(experiences)

    def sample(self, batch_size: int, rng: np.random.Generator) -> ExperienceBatch:
        """Draw `batch_size` transitions uniformly with replacement.

        Raises:
            ConfigurationError: If the buffer is empty or the batch size is not positive.
        """
        if not self._items or batch_size < 1:
            msg = f"cannot sample {batch_size} transitions from a buffer of {len(self._items)}"
            raise ConfigurationError(msg)
        indices = rng.integers(0, len(self._items), size=batch_size)
        return ExperienceBatch.stack([self._items[i] for i in indices])

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Column arrays of the buffer contents, oldest first; rewards and terminals as float64."""
        if not self._items:
            return {}
        batch = ExperienceBatch.stack(list(self._items))
        return {
            "states": batch.states,
            "actions": batch.actions,
            "rewards": batch.rewards,
            "next_states": batch.next_states,
            "terminals": batch.terminals.astype(np.float64),
        }

    def load_arrays(self, arrays: dict[str, np.ndarray], state_width: int, action_width: int) -> None:
        """Replace the contents with rows rebuilt from `to_arrays` output."""
        self._items.clear()
        if not arrays:
            return
        rewards = np.asarray(arrays["rewards"], dtype=np.float64).reshape(-1)
        rows = len(rewards)
        states = np.asarray(arrays["states"], dtype=np.float64).reshape(rows, state_width)
        actions = np.asarray(arrays["actions"], dtype=np.float64).reshape(rows, action_width)
        next_states = np.asarray(arrays["next_states"], dtype=np.float64).reshape(rows, state_width)
        terminals = np.asarray(arrays["terminals"]).reshape(-1) != 0.0
        for i in range(rows):
            experience = Experience(
                states[i].copy(), actions[i].copy(), float(rewards[i]), next_states[i].copy(), bool(terminals[i])
            )
            self._items.append(experience)
