from __future__ import annotations

import os
from dataclasses import astuple, dataclass, fields
from typing import TYPE_CHECKING, Any

import numpy as np
from polykit import PolyLog
from polykit.text import color, print_color
from tabulate import tabulate

if TYPE_CHECKING:
    from collections.abc import Sequence
    from logging import Logger

    from polykit.text.types import TextColor

LOG_LEVELS = ("error", "info", "debug")


class MbaeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MbaeError, ValueError):
    """Invalid configuration, shape mismatch or infeasible setup."""


class NumericError(MbaeError, ArithmeticError):
    """A NaN or Inf showed up in values, gradients, losses or actions."""


class TapeError(MbaeError, RuntimeError):
    """Misuse of a recorded tape."""


class CheckpointError(MbaeError, ValueError):
    """Unreadable checkpoint file."""


class CurveParseError(MbaeError, ValueError):
    """Malformed learning-curve CSV."""


class RunAborted(MbaeError, RuntimeError):
    """A training run hit a numeric error and was stopped."""

    def __init__(self, message: str, episode: int, run_id: str | None = None) -> None:
        super().__init__(message)
        self.episode = episode
        self.run_id = run_id

    def __reduce__(self) -> tuple[type[RunAborted], tuple[str, int, str | None]]:
        return type(self), (str(self), self.episode, self.run_id)


def get_logger() -> Logger:
    """Return the package logger at the level named by MBAE_LOG.

    Raises:
        ConfigurationError: If MBAE_LOG holds an unknown level.
    """
    level = os.getenv("MBAE_LOG", "info").strip().lower()
    if level not in LOG_LEVELS:
        msg = f"MBAE_LOG must be one of {', '.join(LOG_LEVELS)}, got {level!r}"
        raise ConfigurationError(msg)
    return PolyLog.get_logger("mbae", level=level, simple=True)


def check_finite(values: np.ndarray, what: str) -> np.ndarray:
    """Raise NumericError unless every entry is finite."""
    if not np.all(np.isfinite(values)):
        msg = f"non-finite {what}"
        raise NumericError(msg)
    return values


@dataclass(frozen=True)
class Experience:
    """One transition (s, u, r, s', terminal)."""

    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    terminal: bool


@dataclass(frozen=True)
class ExperienceBatch:
    """Row-stacked arrays of a list of Experience."""

    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    terminals: np.ndarray

    @classmethod
    def stack(cls, batch: Sequence[Experience]) -> ExperienceBatch:
        """Stack experiences into 2D arrays.

        Raises:
            ConfigurationError: If the batch is empty.
        """
        if not batch:
            msg = "batch must not be empty"
            raise ConfigurationError(msg)
        return cls(
            states=np.stack([e.state for e in batch]).astype(np.float64),
            actions=np.stack([e.action for e in batch]).astype(np.float64),
            rewards=np.array([e.reward for e in batch], dtype=np.float64),
            next_states=np.stack([e.next_state for e in batch]).astype(np.float64),
            terminals=np.array([e.terminal for e in batch], dtype=bool),
        )

    def __len__(self) -> int:
        return len(self.rewards)

    def replace(self, **changes: np.ndarray) -> ExperienceBatch:
        """Return a copy with some arrays swapped out."""
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(changes)
        return ExperienceBatch(**current)


@dataclass(frozen=True)
class LinearSchedule:
    """Monotone linear anneal from `initial` to `final` over `horizon` episodes."""

    initial: float
    final: float
    horizon: int

    def value(self, episode: int) -> float:
        if self.horizon <= 0:
            return self.final
        frac = min(max(episode, 0) / self.horizon, 1.0)
        return self.initial + (self.final - self.initial) * frac


@dataclass
class RunRecord:
    """One learning-curve row, written at every evaluation episode."""

    episode: int
    env_steps: int
    mean_return: float
    std_return: float
    value_loss: float
    policy_loss: float
    gen_loss: float
    disc_loss: float
    reward_loss: float
    dyna_loss: float
    mbae_steps: int
    mean_delta_norm: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> tuple[Any, ...]:
        return astuple(self)


@dataclass
class OutputFormatter:
    """Format console output with consistent styling."""

    logger: Logger

    def print_header(self, header: str, color_name: TextColor | None = None) -> None:
        """Print a header with a separator."""
        if color_name is None:
            color_name = "blue"

        separator = "=" * len(header)
        print_color(f"\n{header}\n{separator}", color_name)

    def color_headers(self, headers: list[str], color_name: TextColor | None = None) -> list[str]:
        """Apply color to headers."""
        if color_name is None:
            color_name = "yellow"

        return [color(header, color_name) for header in headers]

    def print_table(self, headers: list[str], rows: list[list[Any]]) -> None:
        """Print rows under colored headers."""
        print(tabulate(rows, headers=self.color_headers(headers), tablefmt="simple", floatfmt=".4f"))


@dataclass
class ExperimentComponent:
    """Base class for components reporting through a shared formatter and logger."""

    out: OutputFormatter
    logger: Logger
