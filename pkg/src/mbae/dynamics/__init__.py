"""Learned dynamics: a conditional-GAN successor generator, its discriminator, and a reward predictor."""

from __future__ import annotations

from .dynamics_ops import DynamicsModel
