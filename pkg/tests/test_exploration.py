from __future__ import annotations

import numpy as np
import pytest

from mbae.config import DynamicsConfig, MbaeConfig, ValueConfig
from mbae.diffcore.gradcheck import assert_close, numerical_gradient
from mbae.dynamics import DynamicsModel
from mbae.exploration import ModelBasedExplorer, action_value_gradient
from mbae.valuefn import ValueFunction

from .conftest import AdditiveModel, FixedPolicy, FlatValue, QuadraticValue


def _explorer(seed: int = 0, horizon: int = 10, **changes: object) -> ModelBasedExplorer:
    return ModelBasedExplorer(MbaeConfig(**changes), np.random.default_rng(seed), alpha_horizon=horizon)


def test_delta_points_along_the_analytic_gradient() -> None:
    goal, state, action = np.array([0.8, -0.3]), np.array([0.1, 0.2]), np.array([-0.4, 0.5])
    explorer = _explorer(normalization="unit", length_noise=0.0, alpha_initial=0.5)
    delta = explorer.get_action_delta(
        state, FixedPolicy([0.0, 0.0], 0.3), QuadraticValue(goal), AdditiveModel(), action=action
    )
    expected = 2.0 * (goal - state - action)
    cosine = float(delta @ expected / (np.linalg.norm(delta) * np.linalg.norm(expected)))
    assert cosine == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.norm(delta) == pytest.approx(0.5)


def test_policy_std_normalization_scales_by_sigma_norm() -> None:
    explorer = _explorer(normalization="policy-std", length_noise=0.0, alpha_initial=0.5)
    delta = explorer.get_action_delta(
        np.zeros(2), FixedPolicy([0.0, 0.0], 0.3), QuadraticValue([1.0, 1.0]), AdditiveModel()
    )
    assert np.linalg.norm(delta) == pytest.approx(0.5 * 0.3 * np.sqrt(2.0))


def test_length_noise_only_lengthens_the_delta() -> None:
    explorer = _explorer(normalization="unit", length_noise=0.25, alpha_initial=0.5)
    for _ in range(100):
        delta = explorer.get_action_delta(
            np.zeros(2), FixedPolicy([0.0, 0.0], 0.3), QuadraticValue([1.0, 1.0]), AdditiveModel()
        )
        assert np.linalg.norm(delta) >= 0.5 - 1e-12


def test_flat_value_gives_a_zero_delta() -> None:
    delta = _explorer().get_action_delta(np.zeros(2), FixedPolicy([0.2, 0.1], 0.3), FlatValue(), AdditiveModel())
    np.testing.assert_array_equal(delta, [0.0, 0.0])


def test_zero_p_reduces_to_gaussian_exploration() -> None:
    policy = FixedPolicy([0.2, -0.1], 0.3)
    explorer = _explorer(p=0.0)
    acting = np.random.default_rng(5)
    reference = np.random.default_rng(5)
    for _ in range(50):
        action = explorer.exploratory_action(np.zeros(2), policy, QuadraticValue([1.0, 1.0]), AdditiveModel(), acting)
        np.testing.assert_array_equal(action, policy.sample_action(np.zeros(2), reference))
        reference.random()
    assert explorer.pop_stats() == (0, [])


def test_unit_p_with_flat_value_is_still_gaussian() -> None:
    policy = FixedPolicy([0.2, -0.1], 0.3)
    explorer = _explorer(p=1.0)
    action = explorer.exploratory_action(np.zeros(2), policy, FlatValue(), AdditiveModel(), np.random.default_rng(5))
    np.testing.assert_array_equal(action, policy.sample_action(np.zeros(2), np.random.default_rng(5)))
    assert explorer.pop_stats() == (1, [0.0])
    assert explorer.pop_stats() == (0, [])


def test_acting_stream_is_consumed_the_same_whatever_p_is() -> None:
    policy = FixedPolicy([0.0, 0.0], 0.3)
    streams = []
    for p in (0.0, 1.0):
        acting = np.random.default_rng(11)
        explorer = _explorer(p=p)
        for _ in range(20):
            explorer.exploratory_action(np.zeros(2), policy, QuadraticValue([1.0, 1.0]), AdditiveModel(), acting)
        streams.append(acting.random())
    assert streams[0] == streams[1]


def test_mbae_fraction_matches_p() -> None:
    policy = FixedPolicy([0.0, 0.0], 0.3)
    explorer = _explorer(p=0.3)
    acting = np.random.default_rng(0)
    steps = 100_000
    for _ in range(steps):
        explorer.exploratory_action(np.zeros(2), policy, FlatValue(), AdditiveModel(), acting)
    mbae_steps, _ = explorer.pop_stats()
    assert abs(mbae_steps / steps - 0.3) < 0.01


def test_exploratory_actions_stay_in_the_box() -> None:
    policy = FixedPolicy([0.95, -0.95], 0.3)
    explorer = _explorer(p=1.0, alpha_initial=1.0, length_noise=1.0, normalization="unit")
    acting = np.random.default_rng(3)
    for _ in range(200):
        action = explorer.exploratory_action(
            np.zeros(2), policy, QuadraticValue([5.0, -5.0]), AdditiveModel(), acting
        )
        assert np.all(np.abs(action) <= 1.0)


def test_single_iteration_with_flat_value_returns_the_mean() -> None:
    policy = FixedPolicy([0.4, -0.6], 0.3)
    action = _explorer(optimize_iters=1).optimize_action(np.zeros(2), policy, FlatValue(), AdditiveModel())
    np.testing.assert_array_equal(action, [0.4, -0.6])


def test_optimized_action_improves_predicted_value_monotonically() -> None:
    state, goal = np.zeros(2), np.array([5.0, 0.3])
    policy, value, model = FixedPolicy([-0.5, -0.5], 0.3), QuadraticValue(goal), AdditiveModel()

    def predicted(action: np.ndarray) -> float:
        return float(value.values(model.predict_successors(state, action, np.zeros((1, 1))))[0])

    scores = [predicted(policy.mean_action(state))]
    for iters in range(1, 21):
        explorer = _explorer(
            optimize_iters=iters, normalization="unit", length_noise=0.0, alpha_initial=0.1, alpha_final=0.1
        )
        action = explorer.optimize_action(state, policy, value, model)
        assert np.all(np.abs(action) <= 1.0)
        scores.append(predicted(action))
    assert all(later >= earlier - 1e-12 for earlier, later in zip(scores, scores[1:], strict=False))
    assert scores[-1] > scores[0]


@pytest.mark.parametrize("seed", range(20))
def test_chained_gradient_matches_finite_differences(seed: int) -> None:
    rng = np.random.default_rng(seed)
    value = ValueFunction(4, ValueConfig(hidden_sizes=[6], activation="tanh"), rng)
    config = DynamicsConfig(blocks=1, block_width=6, activation="tanh", disc_hidden_sizes=[4], reward_hidden_sizes=[4])
    dynamics = DynamicsModel(4, 2, config, rng)
    state, action = rng.standard_normal(4), rng.uniform(-1.0, 1.0, 2)
    noise = dynamics.sample_noise(rng)

    analytic = action_value_gradient(state, action, value, dynamics, noise)
    numeric = numerical_gradient(
        lambda: float(np.sum(value.values(dynamics.predict_successors(state, action, noise)))), action
    )
    assert_close(analytic, numeric)


def test_alpha_anneals_between_its_endpoints() -> None:
    explorer = _explorer(horizon=100, alpha_initial=1.0, alpha_final=0.1)
    assert explorer.alpha_u == pytest.approx(1.0)
    explorer.set_episode(50)
    assert explorer.alpha_u == pytest.approx(0.55)
    explorer.set_episode(100)
    assert explorer.alpha_u == pytest.approx(0.1)
    explorer.set_episode(400)
    assert explorer.alpha_u == pytest.approx(0.1)
