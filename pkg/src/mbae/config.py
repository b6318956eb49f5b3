"""Dataclass configuration tree, YAML loading, dotted overrides and named variants."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from mbae.tools import ConfigurationError

NORMALIZATION_MODES = ("unit", "policy-std")
REWARD_SOURCES = ("learned", "replayed")
EVAL_POLICIES = ("mean", "optimized")
AGGREGATES = ("mean", "median")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigurationError(message)


@dataclass
class BoxConfig:
    """Axis-aligned box obstacle."""

    center: list[float]
    half_extent: list[float]


@dataclass
class EnvConfig:
    """Particle navigation arena."""

    dim: int
    low: float = -1.0
    high: float = 1.0
    step_scale: float = 0.1
    max_steps: int = 64
    goal_radius: float = 0.1
    goal_bonus: float = 1.0
    obstacles: list[BoxConfig] = field(default_factory=list)
    max_placement_attempts: int = 10_000

    def __post_init__(self) -> None:
        _require(self.dim >= 1, "env.dim must be positive")
        _require(self.low < self.high, "env.low must be below env.high")
        _require(self.step_scale > 0.0, "env.step_scale must be positive")
        _require(self.max_steps >= 1, "env.max_steps must be positive")
        _require(self.goal_radius > 0.0, "env.goal_radius must be positive")
        for box in self.obstacles:
            _require(
                len(box.center) == self.dim and len(box.half_extent) == self.dim,
                f"obstacle boxes must have {self.dim} coordinates",
            )


@dataclass
class PolicyConfig:
    """Gaussian policy: mean network, optimizer, and the exploration-std anneal."""

    hidden_sizes: list[int] = field(default_factory=lambda: [128, 64])
    activation: str = "relu"
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    sigma_initial: float = 0.4
    sigma_final: float = 0.1
    sigma_horizon: int | None = None  # episodes; defaults to train.episodes

    def __post_init__(self) -> None:
        _require(self.learning_rate > 0.0, "policy.learning_rate must be positive")
        _require(self.sigma_initial > 0.0 and self.sigma_final > 0.0, "policy sigma must stay positive")
        _require(self.sigma_final <= self.sigma_initial, "policy sigma must anneal downwards")


@dataclass
class ValueConfig:
    """State-value network and its TD regression."""

    hidden_sizes: list[int] = field(default_factory=lambda: [128, 64])
    activation: str = "relu"
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    gamma: float = 0.9

    def __post_init__(self) -> None:
        _require(self.learning_rate > 0.0, "value.learning_rate must be positive")
        _require(0.0 <= self.gamma <= 1.0, "value.gamma must lie in [0, 1]")


@dataclass
class DynamicsConfig:
    """Generator, discriminator and reward networks of the learned model."""

    blocks: int = 2
    block_width: int = 128
    activation: str = "relu"
    noise_width: int | None = None  # defaults to the action width
    input_dropout: float = 0.1
    hidden_dropout: float = 0.1
    output_dropout: float = 0.1
    disc_hidden_sizes: list[int] = field(default_factory=lambda: [128, 64])
    reward_hidden_sizes: list[int] = field(default_factory=lambda: [128, 64])
    blend: float = 0.9
    generator_lr: float = 1e-3
    discriminator_lr: float = 1e-3
    reward_lr: float = 1e-3

    def __post_init__(self) -> None:
        _require(0.0 <= self.blend <= 1.0, "dynamics.blend must lie in [0, 1]")
        _require(self.blocks >= 0, "dynamics.blocks must be non-negative")
        _require(
            min(self.generator_lr, self.discriminator_lr, self.reward_lr) > 0.0,
            "dynamics learning rates must be positive",
        )
        _require(self.noise_width is None or self.noise_width >= 0, "dynamics.noise_width must be non-negative")


@dataclass
class MbaeConfig:
    """Model-based action exploration settings."""

    p: float = 0.25
    alpha_initial: float = 1.0
    alpha_final: float = 0.1
    alpha_horizon: int | None = None  # episodes; defaults to train.episodes
    length_noise: float = 0.25
    normalization: str = "policy-std"
    optimize_iters: int = 1

    def __post_init__(self) -> None:
        _require(0.0 <= self.p <= 1.0, "mbae.p must lie in [0, 1]")
        _require(
            0.0 < self.alpha_final <= self.alpha_initial <= 1.0,
            "mbae alpha must anneal within (0, 1]",
        )
        _require(self.length_noise >= 0.0, "mbae.length_noise must be non-negative")
        _require(self.normalization in NORMALIZATION_MODES, f"mbae.normalization must be one of {NORMALIZATION_MODES}")
        _require(self.optimize_iters >= 1, "mbae.optimize_iters must be at least 1")


@dataclass
class DynaConfig:
    """Extra value updates on model-synthesized successors."""

    enabled: bool = False
    synthetic_updates_per_real_update: int = 1
    reward_source: str = "learned"

    def __post_init__(self) -> None:
        _require(self.synthetic_updates_per_real_update >= 0, "dyna update count must be non-negative")
        _require(self.reward_source in REWARD_SOURCES, f"dyna.reward_source must be one of {REWARD_SOURCES}")

    @property
    def updates(self) -> int:
        return self.synthetic_updates_per_real_update if self.enabled else 0


@dataclass
class TrainConfig:
    """One training run."""

    episodes: int = 1000
    batch_size: int = 64
    updates_per_episode: int = 32
    learning_starts: int = 64
    buffer_capacity: int = 65_536
    eval_every: int = 10
    eval_episodes: int = 5
    eval_policy: str = "mean"
    train_dynamics: bool = True
    pretrain_dynamics_steps: int = 0
    seed: int = 0
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    value: ValueConfig = field(default_factory=ValueConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    mbae: MbaeConfig = field(default_factory=MbaeConfig)
    dyna: DynaConfig = field(default_factory=DynaConfig)

    def __post_init__(self) -> None:
        _require(self.episodes >= 0, "train.episodes must be non-negative")
        _require(self.batch_size >= 1, "train.batch_size must be at least 1")
        _require(self.updates_per_episode >= 0, "train.updates_per_episode must be non-negative")
        _require(self.buffer_capacity >= 1, "train.buffer_capacity must be positive")
        _require(self.eval_every >= 1 and self.eval_episodes >= 1, "evaluation cadence must be positive")
        _require(self.eval_policy in EVAL_POLICIES, f"train.eval_policy must be one of {EVAL_POLICIES}")
        _require(self.pretrain_dynamics_steps >= 0, "train.pretrain_dynamics_steps must be non-negative")

    @property
    def sigma_horizon(self) -> int:
        return self.policy.sigma_horizon if self.policy.sigma_horizon is not None else self.episodes

    @property
    def alpha_horizon(self) -> int:
        return self.mbae.alpha_horizon if self.mbae.alpha_horizon is not None else self.episodes


@dataclass
class ExperimentConfig:
    """A seeded comparison of variants on one environment."""

    seeds: list[int]
    variants: list[str]
    env: EnvConfig
    name: str = "experiment"
    output_dir: str = "results"
    aggregate: str = "mean"
    parallel: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    # dotted train keys set by the config file or an override; filled by load_experiment_config
    explicit_train_keys: frozenset[str] = field(
        default=frozenset(), repr=False, compare=False, metadata={"internal": True}
    )

    def __post_init__(self) -> None:
        _require(len(self.seeds) > 0, "at least one seed is required")
        _require(len(set(self.seeds)) == len(self.seeds), "seeds must be distinct")
        _require(len(self.variants) > 0, "at least one variant is required")
        unknown = [v for v in self.variants if v not in VARIANT_SWITCHES]
        _require(not unknown, f"unknown variants: {', '.join(unknown)}")
        _require(self.aggregate in AGGREGATES, f"aggregate must be one of {AGGREGATES}")
        _require(self.parallel >= 1, "parallel must be at least 1")


# Switches define a variant and always win; defaults only fill keys the user left unset.
VARIANT_SWITCHES: dict[str, dict[str, Any]] = {
    "cacla": {"mbae.p": 0.0, "dyna.enabled": False},
    "cacla+mbae": {"dyna.enabled": True},
    "cacla+dyna": {"mbae.p": 0.0, "dyna.enabled": True},
    "cacla+mbae-unit": {"dyna.enabled": False, "mbae.normalization": "unit"},
    "cacla+mbae-std": {"dyna.enabled": False, "mbae.normalization": "policy-std"},
    "cacla+mbae+optimize": {"dyna.enabled": True, "eval_policy": "optimized"},
}
VARIANT_DEFAULTS: dict[str, dict[str, Any]] = {
    "cacla+mbae+optimize": {"mbae.optimize_iters": 10},
}
ABLATION_VARIANTS = list(VARIANT_SWITCHES)


def _as_float(value: Any, where: str) -> float:
    # YAML 1.1 reads exponents without a dot, like 1e-4, as strings
    if not isinstance(value, bool) and isinstance(value, int | float | str):
        try:
            return float(value)
        except ValueError:
            pass
    msg = f"{where} must be a number, got {value!r}"
    raise ConfigurationError(msg)
    if isinstance(value, int | float):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    msg = f"{where} must be a number, got {value!r}"
    raise ConfigurationError(msg)


def from_mapping(cls: type, data: Any, path: str = "") -> Any:
    """Build dataclass `cls` from a nested mapping, rejecting unknown and missing keys.

    Raises:
        ConfigurationError: On unknown keys, missing required keys, or wrong shapes.
    """
    where = path or "config"
    if not isinstance(data, dict):
        msg = f"{where} must be a mapping"
        raise ConfigurationError(msg)

    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls) if not f.metadata.get("internal")}
    unknown = sorted(set(data) - set(known))
    if unknown:
        msg = f"unknown keys in {where}: {', '.join(f'{path}.{k}'.lstrip('.') for k in unknown)}"
        raise ConfigurationError(msg)

    missing = [
        name
        for name, f in known.items()
        if name not in data and f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
    ]
    if missing:
        msg = f"missing required keys in {where}: {', '.join(f'{path}.{k}'.lstrip('.') for k in missing)}"
        raise ConfigurationError(msg)

    kwargs = {}
    for name, value in data.items():
        hint = hints[name]
        child = f"{path}.{name}".lstrip(".")
        if dataclasses.is_dataclass(hint):
            kwargs[name] = from_mapping(hint, value if value is not None else {}, child)
        elif typing.get_origin(hint) is list and dataclasses.is_dataclass(typing.get_args(hint)[0]):
            if not isinstance(value, list):
                msg = f"{child} must be a list"
                raise ConfigurationError(msg)
            item_cls = typing.get_args(hint)[0]
            kwargs[name] = [from_mapping(item_cls, item, f"{child}[{i}]") for i, item in enumerate(value)]
        elif hint is float:
            kwargs[name] = _as_float(value, child)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        msg = f"invalid {where}: {e}"
        raise ConfigurationError(msg) from e


def apply_overrides(raw: dict[str, Any], overrides: list[str]) -> dict[str, Any]:
    """Apply `key.path=value` strings to a raw config mapping; values are parsed as YAML.

    Raises:
        ConfigurationError: On a malformed override.
    """
    for override in overrides:
        key, sep, text = override.partition("=")
        if not sep or not key.strip():
            msg = f"override must look like key=value, got {override!r}"
            raise ConfigurationError(msg)
        parts = key.strip().split(".")
        node = raw
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                msg = f"cannot override below scalar key {part!r} in {override!r}"
                raise ConfigurationError(msg)
        node[parts[-1]] = yaml.safe_load(text)
    return raw


def _dotted_keys(mapping: dict[str, Any], prefix: str = "") -> set[str]:
    keys = set()
    for key, value in mapping.items():
        dotted = f"{prefix}{key}"
        keys |= _dotted_keys(value, f"{dotted}.") if isinstance(value, dict) and value else {dotted}
    return keys


def load_experiment_config(path: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Read a YAML experiment file and apply overrides.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigurationError: If the document is not valid YAML or fails validation.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        msg = f"cannot parse {path}: {e}"
        raise ConfigurationError(msg) from e
    config = from_mapping(ExperimentConfig, apply_overrides(raw, list(overrides or [])))
    train = raw.get("train")
    explicit = frozenset(_dotted_keys(train)) if isinstance(train, dict) else frozenset()
    return dataclasses.replace(config, explicit_train_keys=explicit)


def with_override(obj: Any, dotted: str, value: Any) -> Any:
    """Return a copy of dataclass `obj` with the field at `dotted` replaced.

    Raises:
        ConfigurationError: If the path names no field.
    """
    head, _, rest = dotted.partition(".")
    if not dataclasses.is_dataclass(obj) or head not in {f.name for f in dataclasses.fields(obj)}:
        msg = f"unknown config key {dotted!r}"
        raise ConfigurationError(msg)
    new_value = with_override(getattr(obj, head), rest, value) if rest else value
    return dataclasses.replace(obj, **{head: new_value})


def variant_config(
    train: TrainConfig, variant: str, seed: int, explicit_keys: frozenset[str] = frozenset()
) -> TrainConfig:
    """TrainConfig for one (variant, seed) run.

    The variant's switches are applied over `train`; its defaults only for keys not in `explicit_keys`.
    """
    if variant not in VARIANT_SWITCHES:
        msg = f"unknown variant {variant!r}"
        raise ConfigurationError(msg)
    for key, value in VARIANT_DEFAULTS.get(variant, {}).items():
        if key not in explicit_keys:
            train = with_override(train, key, value)
    for key, value in VARIANT_SWITCHES[variant].items():
        train = with_override(train, key, value)
    return dataclasses.replace(train, seed=seed)


def overridden_switches(train: TrainConfig, variant: str, explicit_keys: frozenset[str]) -> list[str]:
    """Explicitly set train keys whose value the variant's switches replace."""
    overridden = []
    for key, value in VARIANT_SWITCHES[variant].items():
        current: Any = train
        for part in key.split("."):
            current = getattr(current, part)
        if key in explicit_keys and current != value:
            overridden.append(key)
    return overridden
