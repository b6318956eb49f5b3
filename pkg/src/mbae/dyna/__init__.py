"""DYNA-style value conditioning on successors synthesized by the learned dynamics model."""

from __future__ import annotations

from .dyna_ops import SyntheticModel, dyna_update, synthetic_batch
