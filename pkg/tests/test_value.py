from __future__ import annotations

import numpy as np
import pytest

from mbae.config import ValueConfig
from mbae.diffcore.gradcheck import assert_close, numerical_gradient
from mbae.tools import Experience, ExperienceBatch
from mbae.valuefn import ValueFunction


def _linear_value(width: int, learning_rate: float, gamma: float = 0.9) -> ValueFunction:
    config = ValueConfig(hidden_sizes=[], optimizer="sgd", learning_rate=learning_rate, gamma=gamma)
    return ValueFunction(width, config, np.random.default_rng(0))


def test_constant_reward_converges_to_geometric_sum() -> None:
    value = _linear_value(1, learning_rate=0.1)
    loop = [Experience(np.array([1.0]), np.zeros(1), 1.0, np.array([1.0]), False)]
    for _ in range(1000):
        value.td_update(loop)
    assert value.value(np.array([1.0])) == pytest.approx(1.0 / (1.0 - 0.9), rel=0.01)


def test_two_state_chain_matches_dynamic_programming() -> None:
    value = _linear_value(2, learning_rate=0.05)
    s0, s1 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    chain = [
        Experience(s0, np.zeros(1), 1.0, s1, False),
        Experience(s1, np.zeros(1), 2.0, s0, True),
    ]
    for _ in range(4000):
        value.td_update(chain)
    assert value.value(s1) == pytest.approx(2.0, rel=0.02)
    assert value.value(s0) == pytest.approx(1.0 + 0.9 * 2.0, rel=0.02)


def test_terminal_transitions_do_not_bootstrap(rng: np.random.Generator) -> None:
    value = ValueFunction(3, ValueConfig(hidden_sizes=[4]), rng)
    batch = ExperienceBatch.stack([Experience(np.ones(3), np.zeros(1), 0.5, np.full(3, 2.0), True)])
    np.testing.assert_array_equal(value.td_targets(batch), [0.5])


def test_advantage_is_the_td_residual(rng: np.random.Generator) -> None:
    value = ValueFunction(3, ValueConfig(hidden_sizes=[4]), rng)
    e = Experience(np.array([0.1, 0.2, 0.3]), np.zeros(1), 0.7, np.array([0.3, 0.2, 0.1]), False)
    expected = 0.7 + 0.9 * value.value(e.next_state) - value.value(e.state)
    assert value.advantage(e) == pytest.approx(expected)


def test_td_update_returns_pre_step_loss_and_reduces_it(rng: np.random.Generator) -> None:
    value = ValueFunction(2, ValueConfig(hidden_sizes=[8], learning_rate=1e-2), rng)
    batch = [Experience(rng.standard_normal(2), np.zeros(1), 1.0, rng.standard_normal(2), True) for _ in range(16)]
    before = value.td_loss(batch)
    assert value.td_update(batch) == pytest.approx(before)
    for _ in range(50):
        value.td_update(batch)
    assert value.td_loss(batch) < before


def test_bootstrap_is_held_constant_in_the_gradient(rng: np.random.Generator) -> None:
    value = ValueFunction(2, ValueConfig(hidden_sizes=[5], activation="tanh", optimizer="sgd"), rng)
    batch = ExperienceBatch.stack(
        [Experience(rng.standard_normal(2), np.zeros(1), 0.3, rng.standard_normal(2), False) for _ in range(4)]
    )
    targets = value.td_targets(batch)

    def loss() -> float:
        return float(np.mean((targets - value.values(batch.states)) ** 2))

    output = value.net.forward(batch.states, train_mode=True)
    seed = (2.0 / len(batch)) * (output.data[:, 0] - targets)
    output.tape.backward(output, seed[:, None])
    for _, param in value.net.named_parameters():
        assert_close(param.grad, numerical_gradient(loss, param.data))


def test_grad_wrt_state_matches_finite_differences(rng: np.random.Generator) -> None:
    value = ValueFunction(4, ValueConfig(hidden_sizes=[6, 5], activation="tanh"), rng)
    states = rng.standard_normal((3, 4))
    assert_close(value.grad_wrt_state(states), numerical_gradient(lambda: float(np.sum(value.values(states))), states))
