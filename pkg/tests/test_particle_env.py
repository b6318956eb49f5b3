from __future__ import annotations

import numpy as np
import pytest

from mbae.config import BoxConfig, EnvConfig
from mbae.envs import ParticleEnv
from mbae.tools import ConfigurationError, NumericError


def _env(**changes: object) -> ParticleEnv:
    return ParticleEnv(EnvConfig(dim=2, **changes))


def test_observation_is_offset_then_position() -> None:
    env = _env()
    obs = env.place([0.2, -0.3], [0.5, 0.5])
    np.testing.assert_allclose(obs, [-0.3, -0.8, 0.2, -0.3])
    agent, target = env.split_observation(obs)
    np.testing.assert_allclose(agent, [0.2, -0.3])
    np.testing.assert_allclose(target, [0.5, 0.5])
    assert env.observation_width == 4
    assert env.action_width == 2


def test_reward_is_progress_towards_target() -> None:
    env = _env()
    env.place([0.0, 0.0], [0.5, 0.0])
    result = env.step(np.array([1.0, 0.0]))
    assert result.reward == pytest.approx(0.1)
    assert not result.terminal
    np.testing.assert_allclose(result.next_state[2:], [0.1, 0.0])


def test_reaching_the_goal_pays_the_bonus_and_ends_the_episode() -> None:
    env = _env()
    env.place([0.0, 0.0], [0.15, 0.0])
    result = env.step(np.array([1.0, 0.0]))
    assert result.reward == pytest.approx(0.1 + 1.0)
    assert result.terminal


def test_moving_away_is_penalised() -> None:
    env = _env()
    env.place([0.0, 0.0], [0.5, 0.0])
    assert env.step(np.array([-1.0, 0.0])).reward == pytest.approx(-0.1)


def test_actions_are_clipped_before_scaling() -> None:
    env = _env()
    env.place([0.0, 0.0], [0.9, 0.9])
    result = env.step(np.array([5.0, -5.0]))
    np.testing.assert_allclose(result.next_state[2:], [0.1, -0.1])


def test_position_is_clipped_to_the_arena() -> None:
    env = _env()
    env.place([0.95, 0.0], [-0.5, 0.0])
    result = env.step(np.array([1.0, 0.0]))
    np.testing.assert_allclose(result.next_state[2:], [1.0, 0.0])


def test_move_into_obstacle_leaves_agent_in_place() -> None:
    env = _env(obstacles=[BoxConfig(center=[0.3, 0.0], half_extent=[0.1, 0.1])])
    env.place([0.15, 0.0], [0.9, 0.9])
    result = env.step(np.array([1.0, 0.0]))
    np.testing.assert_allclose(result.next_state[2:], [0.15, 0.0])
    assert result.reward == pytest.approx(0.0)


def test_episode_ends_at_max_steps() -> None:
    env = _env(max_steps=3)
    env.place([0.0, 0.0], [0.9, 0.9])
    terminals = [env.step(np.zeros(2)).terminal for _ in range(3)]
    assert terminals == [False, False, True]


def test_reset_places_agent_and_target_in_free_space() -> None:
    env = _env(obstacles=[BoxConfig(center=[0.0, 0.0], half_extent=[0.5, 0.5])])
    rng = np.random.default_rng(0)
    for _ in range(200):
        agent, target = env.split_observation(env.reset(rng))
        assert not env.blocked(agent)
        assert not env.blocked(target)
        assert np.linalg.norm(agent - target) >= env.config.goal_radius
        assert np.all(np.abs(agent) <= 1.0)


def test_reset_is_reproducible_from_the_generator() -> None:
    env = _env()
    first = env.reset(np.random.default_rng(5))
    second = env.reset(np.random.default_rng(5))
    np.testing.assert_array_equal(first, second)


def test_over_full_arena_is_a_configuration_error() -> None:
    env = _env(obstacles=[BoxConfig(center=[0.0, 0.0], half_extent=[2.0, 2.0])], max_placement_attempts=50)
    with pytest.raises(ConfigurationError):
        env.reset(np.random.default_rng(0))


def test_placing_inside_an_obstacle_is_rejected() -> None:
    env = _env(obstacles=[BoxConfig(center=[0.0, 0.0], half_extent=[0.2, 0.2])])
    with pytest.raises(ConfigurationError):
        env.place([0.2, 0.0], [0.9, 0.9])


def test_non_finite_action_raises() -> None:
    env = _env()
    env.place([0.0, 0.0], [0.5, 0.5])
    with pytest.raises(NumericError):
        env.step(np.array([np.nan, 0.0]))


def test_obstacle_dimension_must_match() -> None:
    with pytest.raises(ConfigurationError):
        EnvConfig(dim=3, obstacles=[BoxConfig(center=[0.0, 0.0], half_extent=[0.1, 0.1])])


@pytest.mark.parametrize("obstacles", [[], [BoxConfig(center=[0.3, 0.3], half_extent=[0.1, 0.1])]])
def test_true_dynamics_agrees_with_step_exactly(obstacles: list[BoxConfig]) -> None:
    env = _env(obstacles=obstacles)
    rng = np.random.default_rng(2)
    state = env.reset(rng)
    for _ in range(1000):
        action = rng.uniform(-1.5, 1.5, 2)
        predicted = env.true_dynamics(state, action)
        result = env.step(action)
        np.testing.assert_array_equal(predicted, result.next_state)
        np.testing.assert_array_equal(env.observe(), result.next_state)
        state = env.reset(rng) if result.terminal else result.next_state


def test_zero_action_leaves_the_observation_unchanged() -> None:
    env = _env()
    start = env.reset(np.random.default_rng(4))
    for _ in range(10):
        result = env.step(np.zeros(2))
        np.testing.assert_array_equal(result.next_state, start)
        assert result.reward == 0.0


@pytest.mark.parametrize("dim", [1, 10])
def test_widths_follow_dimension(dim: int) -> None:
    env = ParticleEnv(EnvConfig(dim=dim))
    obs = env.reset(np.random.default_rng(0))
    assert obs.shape == (2 * dim,)
    assert env.step(np.zeros(dim)).next_state.shape == (2 * dim,)
