"""Gaussian policy trained with the CACLA rule."""

from __future__ import annotations

from .policy_ops import GaussianPolicy
