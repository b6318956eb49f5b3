from __future__ import annotations

import dataclasses
from typing import TYPE_CHECKING

import pytest

from mbae.config import (
    ABLATION_VARIANTS,
    EnvConfig,
    TrainConfig,
    apply_overrides,
    from_mapping,
    load_experiment_config,
    overridden_switches,
    variant_config,
    with_override,
)
from mbae.experiment import ExperimentRunner
from mbae.main import main
from mbae.tools import ConfigurationError, OutputFormatter, get_logger

from .conftest import write_experiment

if TYPE_CHECKING:
    from pathlib import Path


def test_experiment_file_loads_into_typed_config(tmp_path: Path) -> None:
    config = load_experiment_config(write_experiment(tmp_path / "tiny.yaml"))
    assert config.name == "tiny"
    assert config.seeds == [0, 1]
    assert config.env.dim == 2
    assert config.env.max_steps == 12
    assert config.train.policy.hidden_sizes == [8]
    assert config.train.value.gamma == 0.9
    assert config.train.mbae.normalization == "policy-std"


def test_obstacles_become_boxes(tmp_path: Path) -> None:
    env = {"dim": 2, "obstacles": [{"center": [0.5, 0.5], "half_extent": [0.1, 0.2]}]}
    config = load_experiment_config(write_experiment(tmp_path / "boxes.yaml", env=env))
    assert config.env.obstacles[0].half_extent == [0.1, 0.2]


def test_unknown_keys_are_named(tmp_path: Path) -> None:
    path = write_experiment(tmp_path / "typo.yaml", train={"episodez": 3})
    with pytest.raises(ConfigurationError, match=r"train\.episodez"):
        load_experiment_config(path)


def test_missing_dimension_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError, match=r"env\.dim"):
        load_experiment_config(write_experiment(tmp_path / "nodim.yaml", env={"max_steps": 5}))


def test_empty_seed_list_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError, match="seed"):
        load_experiment_config(write_experiment(tmp_path / "noseeds.yaml", seeds=[]))


def test_unknown_variant_is_rejected(tmp_path: Path) -> None:
    with pytest.raises(ConfigurationError, match="cacla\\+magic"):
        load_experiment_config(write_experiment(tmp_path / "variant.yaml", variants=["cacla+magic"]))


def test_invalid_yaml_is_a_configuration_error(tmp_path: Path) -> None:
    path = tmp_path / "broken.yaml"
    path.write_text("seeds: [0, 1\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_experiment_config(path)


def test_overrides_are_parsed_as_yaml(tmp_path: Path) -> None:
    path = write_experiment(tmp_path / "tiny.yaml")
    config = load_experiment_config(path, ["train.value.gamma=0.5", "env.dim=3", "train.dyna.enabled=true"])
    assert config.train.value.gamma == 0.5
    assert config.env.dim == 3
    assert config.train.dyna.enabled is True


def test_malformed_override_is_rejected() -> None:
    with pytest.raises(ConfigurationError):
        apply_overrides({}, ["train.episodes"])
    with pytest.raises(ConfigurationError):
        apply_overrides({"train": 5}, ["train.episodes=3"])


def test_out_of_range_values_are_rejected() -> None:
    with pytest.raises(ConfigurationError):
        from_mapping(TrainConfig, {"mbae": {"p": 1.5}})
    with pytest.raises(ConfigurationError):
        from_mapping(TrainConfig, {"value": {"gamma": -0.1}})
    with pytest.raises(ConfigurationError):
        from_mapping(TrainConfig, {"mbae": {"normalization": "l1"}})
    with pytest.raises(ConfigurationError):
        from_mapping(TrainConfig, {"dyna": {"reward_source": "oracle"}})


def test_dataclass_dump_loads_back_unchanged() -> None:
    train = dataclasses.replace(TrainConfig(), episodes=7)
    assert from_mapping(TrainConfig, dataclasses.asdict(train)) == train
    env = EnvConfig(dim=2)
    assert from_mapping(EnvConfig, dataclasses.asdict(env)) == env


def test_variant_presets_set_exploration_and_seed() -> None:
    base = TrainConfig()
    cacla = variant_config(base, "cacla", 3)
    assert cacla.mbae.p == 0.0
    assert not cacla.dyna.enabled
    assert cacla.seed == 3

    full = variant_config(base, "cacla+mbae+optimize", 4)
    assert full.mbae.p == 0.25
    assert full.dyna.enabled
    assert full.eval_policy == "optimized"
    assert full.mbae.optimize_iters == 10
    assert base.mbae.optimize_iters == 1

    assert variant_config(base, "cacla+mbae-unit", 0).mbae.normalization == "unit"
    assert len(ABLATION_VARIANTS) == 6


def test_with_override_rejects_unknown_paths() -> None:
    with pytest.raises(ConfigurationError):
        with_override(TrainConfig(), "mbae.q", 0.1)
    with pytest.raises(ConfigurationError):
        variant_config(TrainConfig(), "sarsa", 0)


def test_horizons_default_to_the_episode_count() -> None:
    config = TrainConfig(episodes=250)
    assert config.sigma_horizon == 250
    assert config.alpha_horizon == 250
    assert dataclasses.replace(config, mbae=dataclasses.replace(config.mbae, alpha_horizon=40)).alpha_horizon == 40


def test_unknown_log_level_is_rejected(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv("MBAE_LOG", "chatty")
    with pytest.raises(ConfigurationError, match="MBAE_LOG"):
        get_logger()
    assert main(["run", "--config", str(write_experiment(tmp_path / "tiny.yaml"))]) == 2


def test_set_override_reaches_the_mbae_variant(tmp_path: Path) -> None:
    config = load_experiment_config(write_experiment(tmp_path / "tiny.yaml"), ["train.mbae.p=0.5"])
    assert "mbae.p" in config.explicit_train_keys
    assert variant_config(config.train, "cacla+mbae", 0, config.explicit_train_keys).mbae.p == 0.5
    assert variant_config(config.train, "cacla", 0, config.explicit_train_keys).mbae.p == 0.0

    runner = ExperimentRunner(
        out=OutputFormatter(get_logger()), logger=get_logger(), config=config, out_dir=tmp_path / "out"
    )
    p_by_run = {job.run_id: job.train.mbae.p for job in runner.jobs()}
    assert p_by_run["cacla+mbae_seed0"] == 0.5
    assert p_by_run["cacla+mbae_seed1"] == 0.5
    assert p_by_run["cacla_seed0"] == 0.0


def test_variant_defaults_yield_to_explicit_values(tmp_path: Path) -> None:
    path = write_experiment(tmp_path / "tiny.yaml")
    plain = load_experiment_config(path)
    tuned = load_experiment_config(path, ["train.mbae.optimize_iters=3", "train.mbae.normalization=unit"])

    assert variant_config(plain.train, "cacla+mbae+optimize", 0, plain.explicit_train_keys).mbae.optimize_iters == 10
    optimized = variant_config(tuned.train, "cacla+mbae+optimize", 0, tuned.explicit_train_keys)
    assert optimized.mbae.optimize_iters == 3
    assert optimized.mbae.normalization == "unit"
    # the normalization ablations pin their own mode
    std = variant_config(tuned.train, "cacla+mbae-std", 0, tuned.explicit_train_keys)
    assert std.mbae.normalization == "policy-std"


def test_switch_conflicts_are_reported(tmp_path: Path) -> None:
    config = load_experiment_config(write_experiment(tmp_path / "tiny.yaml"), ["train.dyna.enabled=true"])
    assert overridden_switches(config.train, "cacla", config.explicit_train_keys) == ["dyna.enabled"]
    assert overridden_switches(config.train, "cacla+mbae", config.explicit_train_keys) == []
    assert overridden_switches(config.train, "cacla", frozenset()) == []


def test_exponent_floats_are_read_as_numbers(tmp_path: Path) -> None:
    path = write_experiment(tmp_path / "tiny.yaml")
    config = load_experiment_config(path, ["train.value.learning_rate=1e-4"])
    assert config.train.value.learning_rate == 1e-4

    with pytest.raises(ConfigurationError, match=r"train\.policy\.learning_rate must be a number"):
        load_experiment_config(write_experiment(tmp_path / "bad.yaml"), ["train.policy.learning_rate=fast"])
    with pytest.raises(ConfigurationError, match=r"train\.value\.gamma must be a number"):
        load_experiment_config(write_experiment(tmp_path / "bool.yaml"), ["train.value.gamma=true"])


def test_exponent_floats_in_the_file_are_read_as_numbers(tmp_path: Path) -> None:
    path = tmp_path / "exp.yaml"
    path.write_text(
        "seeds: [0]\nvariants: [cacla]\nenv:\n  dim: 2\ntrain:\n  dynamics:\n    generator_lr: 5e-4\n",
        encoding="utf-8",
    )
    assert load_experiment_config(path).train.dynamics.generator_lr == 5e-4
