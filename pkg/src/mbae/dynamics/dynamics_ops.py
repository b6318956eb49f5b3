from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from mbae.diffcore import Network, OptimizerState, densenet_specs, mlp_specs, optimize_step
from mbae.tools import Experience, ExperienceBatch, check_finite

if TYPE_CHECKING:
    from collections.abc import Sequence

    from mbae.config import DynamicsConfig


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


class DynamicsModel:
    """Learned environment model.

    A noise-conditioned successor generator G(s, u, eta) trained as a conditional GAN whose generator
    loss blends MSE (weight `blend`) with the non-saturating adversarial loss, a discriminator
    D(s, u, s') returning a logit, and a reward regressor R(s, u).
    """

    def __init__(self, state_width: int, action_width: int, config: DynamicsConfig, rng: np.random.Generator) -> None:
        self.config = config
        self.state_width = state_width
        self.action_width = action_width
        self.noise_width = config.noise_width if config.noise_width is not None else action_width
        self.blend = config.blend

        self.generator = Network(
            state_width + action_width + self.noise_width,
            densenet_specs(
                config.blocks,
                config.block_width,
                state_width,
                activation=config.activation,
                input_dropout=config.input_dropout,
                hidden_dropout=config.hidden_dropout,
                output_dropout=config.output_dropout,
            ),
            rng,
            name="generator",
        )
        self.discriminator = Network(
            2 * state_width + action_width,
            mlp_specs(config.disc_hidden_sizes, 1, config.activation),
            rng,
            name="discriminator",
        )
        self.reward_net = Network(
            state_width + action_width,
            mlp_specs(config.reward_hidden_sizes, 1, config.activation),
            rng,
            name="reward",
        )
        self.generator_opt = OptimizerState(learning_rate=config.generator_lr)
        self.discriminator_opt = OptimizerState(learning_rate=config.discriminator_lr)
        self.reward_opt = OptimizerState(learning_rate=config.reward_lr)

    def networks(self) -> dict[str, tuple[Network, OptimizerState]]:
        return {
            "generator": (self.generator, self.generator_opt),
            "discriminator": (self.discriminator, self.discriminator_opt),
            "reward": (self.reward_net, self.reward_opt),
        }

    def sample_noise(self, rng: np.random.Generator, rows: int = 1) -> np.ndarray:
        return rng.standard_normal((rows, self.noise_width))

    def _generator_inputs(self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return np.concatenate([np.atleast_2d(states), np.atleast_2d(actions), np.atleast_2d(noise)], axis=1)

    def predict_successors(self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return self.generator(self._generator_inputs(states, actions, noise))

    def predict_successor(self, state: np.ndarray, action: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """Eval-mode G(s, u, eta); a pure function of its arguments."""
        return self.predict_successors(state, action, noise)[0]

    def predict_rewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.reward_net(np.concatenate([np.atleast_2d(states), np.atleast_2d(actions)], axis=1))[:, 0]

    def predict_reward(self, state: np.ndarray, action: np.ndarray) -> float:
        return float(self.predict_rewards(state, action)[0])

    def successor_action_vjp(
        self, states: np.ndarray, actions: np.ndarray, noise: np.ndarray, seed: np.ndarray
    ) -> np.ndarray:
        """d(seed . G(s, u, eta))/du at fixed s and eta."""
        grads = self.generator.grad_wrt_input(self._generator_inputs(states, actions, noise), np.atleast_2d(seed))
        return grads[:, self.state_width : self.state_width + self.action_width]

    def train_discriminator(
        self, states: np.ndarray, actions: np.ndarray, real_next: np.ndarray, fake_next: np.ndarray
    ) -> float:
        """One binary cross-entropy step, real (s, u, s') labelled 1 and fake labelled 0."""
        conditioned = np.concatenate([states, actions], axis=1)
        inputs = np.concatenate(
            [np.concatenate([conditioned, real_next], axis=1), np.concatenate([conditioned, fake_next], axis=1)]
        )
        labels = np.concatenate([np.ones(len(states)), np.zeros(len(states))])

        output = self.discriminator.forward(inputs, train_mode=True)
        logits = output.data[:, 0]
        loss = float(check_finite(np.mean(_softplus(logits) - labels * logits), "discriminator loss"))
        output.tape.backward(output, ((_sigmoid(logits) - labels) / len(labels))[:, None])
        optimize_step(self.discriminator.parameters(), self.discriminator_opt)
        return loss

    def discriminator_accuracy(
        self, states: np.ndarray, actions: np.ndarray, real_next: np.ndarray, fake_next: np.ndarray
    ) -> float:
        conditioned = np.concatenate([states, actions], axis=1)
        real = self.discriminator(np.concatenate([conditioned, real_next], axis=1))[:, 0]
        fake = self.discriminator(np.concatenate([conditioned, fake_next], axis=1))[:, 0]
        return float((np.sum(real > 0.0) + np.sum(fake <= 0.0)) / (len(real) + len(fake)))

    def train_generator(self, batch: ExperienceBatch, rng: np.random.Generator) -> float:
        """One step on blend * MSE(G, s') + (1 - blend) * softplus(-D(s, u, G)); returns the pre-step loss."""
        noise = self.sample_noise(rng, len(batch))
        output = self.generator.forward(
            self._generator_inputs(batch.states, batch.actions, noise), train_mode=True, rng=rng
        )
        fake = output.data
        error = fake - batch.next_states
        loss = self.blend * float(np.mean(error**2))
        seed = self.blend * (2.0 / error.size) * error

        if self.blend < 1.0:
            disc_inputs = np.concatenate([batch.states, batch.actions, fake], axis=1)
            logits = self.discriminator(disc_inputs)[:, 0]
            loss += (1.0 - self.blend) * float(np.mean(_softplus(-logits)))
            logit_seed = ((_sigmoid(logits) - 1.0) / len(logits))[:, None]
            adv_grad = self.discriminator.grad_wrt_input(disc_inputs, logit_seed)[:, -self.state_width :]
            seed = seed + (1.0 - self.blend) * adv_grad

        check_finite(np.asarray(loss), "generator loss")
        output.tape.backward(output, seed)
        optimize_step(self.generator.parameters(), self.generator_opt)
        return loss

    def train_reward(self, batch: ExperienceBatch) -> float:
        output = self.reward_net.forward(np.concatenate([batch.states, batch.actions], axis=1), train_mode=True)
        error = output.data[:, 0] - batch.rewards
        loss = float(check_finite(np.mean(error**2), "reward loss"))
        output.tape.backward(output, ((2.0 / len(error)) * error)[:, None])
        optimize_step(self.reward_net.parameters(), self.reward_opt)
        return loss

    def train_step(
        self, batch: Sequence[Experience] | ExperienceBatch, rng: np.random.Generator
    ) -> tuple[float, float, float]:
        """Discriminator, then generator, then reward step; returns (gen_loss, disc_loss, reward_loss)."""
        if not isinstance(batch, ExperienceBatch):
            batch = ExperienceBatch.stack(batch)
        fake = self.predict_successors(batch.states, batch.actions, self.sample_noise(rng, len(batch)))
        disc_loss = self.train_discriminator(batch.states, batch.actions, batch.next_states, fake)
        gen_loss = self.train_generator(batch, rng)
        reward_loss = self.train_reward(batch)
        return gen_loss, disc_loss, reward_loss
