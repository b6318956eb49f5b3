"""Binary checkpoints of a full trainer state.

Layout (little-endian): magic b"MBAE", u32 format version, u32 section count, then per section a u32
name length, the UTF-8 name, a u8 kind (0 = float64 array, 1 = JSON text), a u64 element count and the
payload. Parameters, optimizer moments, the replay buffer and the learning curve are float64 sections;
RNG states, counters and the run configuration travel in one JSON section.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from mbae.config import EnvConfig, TrainConfig, from_mapping
from mbae.tools import CheckpointError, ConfigurationError, RunRecord
from mbae.trainer.trainer_ops import LOSS_KEYS, Trainer

if TYPE_CHECKING:
    from logging import Logger

MAGIC = b"MBAE"
FORMAT_VERSION = 1
_ARRAY, _JSON = 0, 1
_META = "meta"


def _optimizers(trainer: Trainer) -> dict[str, tuple[Any, Any]]:
    """Every (network, optimizer) pair of the trainer, by section prefix."""
    pairs = {
        "value": (trainer.value.net, trainer.value.optimizer),
        "policy": (trainer.policy.net, trainer.policy.optimizer),
    }
    pairs |= trainer.dynamics.networks()
    return pairs


def _collect_sections(trainer: Trainer) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    arrays: dict[str, np.ndarray] = {}
    step_counts = {}
    for prefix, (net, opt) in _optimizers(trainer).items():
        arrays |= net.state_dict()
        opt.bind(net.parameters())
        arrays |= opt.state_dict(f"{prefix}.opt")
        step_counts[prefix] = opt.step_count

    arrays |= {f"buffer.{key}": values for key, values in trainer.buffer.to_arrays().items()}
    arrays["records"] = np.array([r.as_row() for r in trainer.records], dtype=np.float64).reshape(-1)
    for key, values in trainer.pending_losses.items():
        arrays[f"pending.{key}"] = np.asarray(values, dtype=np.float64)
    arrays["pending.delta_norms"] = np.asarray(trainer.pending_delta_norms, dtype=np.float64)

    meta = {
        "run_id": trainer.run_id,
        "episode": trainer.episode,
        "env_steps": trainer.env_steps,
        "pending_mbae_steps": trainer.pending_mbae_steps,
        "step_counts": step_counts,
        "rng": {name: rng.bit_generator.state for name, rng in trainer.rngs.items()},
        "env": dataclasses.asdict(trainer.env_config),
        "train": dataclasses.asdict(trainer.config),
    }
    return arrays, meta


def save_checkpoint(trainer: Trainer, path: str | Path) -> None:
    """Write the complete trainer state to `path`."""
    arrays, meta = _collect_sections(trainer)
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(arrays) + 1)]
    for name, values in arrays.items():
        payload = np.ascontiguousarray(values, dtype="<f8").reshape(-1)
        chunks.append(_section_header(name, _ARRAY, payload.size))
        chunks.append(payload.tobytes())
    text = json.dumps(meta, sort_keys=True).encode("utf-8")
    chunks.append(_section_header(_META, _JSON, len(text)))
    chunks.append(text)
    Path(path).write_bytes(b"".join(chunks))


def _section_header(name: str, kind: int, count: int) -> bytes:
    encoded = name.encode("utf-8")
    return struct.pack("<I", len(encoded)) + encoded + struct.pack("<BQ", kind, count)


class _Reader:
    def __init__(self, data: bytes, path: str | Path) -> None:
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            msg = f"{self.path}: truncated checkpoint at byte {self.offset}"
            raise CheckpointError(msg)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_sections(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Parse a checkpoint file into its float sections and its JSON metadata.

    Raises:
        CheckpointError: On bad magic bytes, an unknown version, truncation or a malformed section.
    """
    reader = _Reader(Path(path).read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        msg = f"{path}: not a checkpoint (bad magic bytes)"
        raise CheckpointError(msg)
    version, count = reader.unpack("<II")
    if version != FORMAT_VERSION:
        msg = f"{path}: checkpoint format version {version}, expected {FORMAT_VERSION}"
        raise CheckpointError(msg)

    arrays: dict[str, np.ndarray] = {}
    meta: dict[str, Any] | None = None
    for _ in range(count):
        (name_length,) = reader.unpack("<I")
        try:
            name = reader.take(name_length).decode("utf-8")
        except UnicodeDecodeError as e:
            msg = f"{path}: malformed section name"
            raise CheckpointError(msg) from e
        kind, size = reader.unpack("<BQ")
        if kind == _ARRAY:
            arrays[name] = np.frombuffer(reader.take(8 * size), dtype="<f8").astype(np.float64)
        elif kind == _JSON:
            try:
                meta = json.loads(reader.take(size).decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as e:
                msg = f"{path}: malformed metadata section"
                raise CheckpointError(msg) from e
        else:
            msg = f"{path}: unknown section kind {kind} for {name!r}"
            raise CheckpointError(msg)
    if reader.offset != len(reader.data):
        msg = f"{path}: trailing bytes after the last section"
        raise CheckpointError(msg)
    if meta is None:
        msg = f"{path}: missing metadata section"
        raise CheckpointError(msg)
    return arrays, meta


def load_checkpoint(path: str | Path, logger: Logger | None = None) -> Trainer:
    """Rebuild the trainer saved at `path`; continuing it is bit-identical to an uninterrupted run.

    A fresh trainer is built and filled, so nothing is half-loaded on failure.

    Raises:
        CheckpointError: If the file is unreadable or does not match its own configuration.
    """
    arrays, meta = read_sections(path)
    try:
        env_config = from_mapping(EnvConfig, meta["env"], "env")
        train_config = from_mapping(TrainConfig, meta["train"], "train")
        trainer = Trainer(env_config, train_config, logger, run_id=meta["run_id"])

        for prefix, (net, opt) in _optimizers(trainer).items():
            net.load_state_dict(arrays)
            opt.bind(net.parameters())
            opt.load_state_dict(f"{prefix}.opt", arrays, meta["step_counts"][prefix])

        buffer = {name.removeprefix("buffer."): values for name, values in arrays.items() if name.startswith("buffer.")}
        trainer.buffer.load_arrays(buffer, trainer.env.observation_width, trainer.env.action_width)

        columns = RunRecord.columns()
        rows = arrays["records"].reshape(-1, len(columns))
        trainer.records = [_record_from_row(row) for row in rows]
        trainer.pending_losses = {key: arrays[f"pending.{key}"].tolist() for key in LOSS_KEYS}
        trainer.pending_delta_norms = arrays["pending.delta_norms"].tolist()
        trainer.pending_mbae_steps = int(meta["pending_mbae_steps"])
        trainer.episode = int(meta["episode"])
        trainer.env_steps = int(meta["env_steps"])
        for name, rng in trainer.rngs.items():
            rng.bit_generator.state = meta["rng"][name]
    except (KeyError, ValueError, TypeError, ConfigurationError) as e:
        msg = f"{path}: inconsistent checkpoint: {e}"
        raise CheckpointError(msg) from e
    return trainer


def _record_from_row(row: np.ndarray) -> RunRecord:
    values = dict(zip(RunRecord.columns(), row.tolist(), strict=True))
    for key in ("episode", "env_steps", "mbae_steps"):
        values[key] = int(values[key])
    return RunRecord(**values)
