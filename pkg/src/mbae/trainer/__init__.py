"""Training loop, replay buffer and checkpoints."""

from __future__ import annotations

from .checkpoint import load_checkpoint, read_sections, save_checkpoint
from .replay import ReplayBuffer
from .trainer_ops import RNG_STREAMS, Trainer, run_episode, spawn_streams, train
