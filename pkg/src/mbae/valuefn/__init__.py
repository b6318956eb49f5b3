"""State-value function trained by one-step temporal-difference regression."""

from __future__ import annotations

from .value_ops import ValueFunction
