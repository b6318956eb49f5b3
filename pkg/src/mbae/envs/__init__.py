"""Particle navigation environment.

An N-dimensional continuous grid world with axis-aligned box obstacles, a bounded arena, and a progress
reward for moving towards the target.
"""  # noqa: D212, D415, W505

from __future__ import annotations

from .particle_env import Box, ParticleEnv, StepResult
