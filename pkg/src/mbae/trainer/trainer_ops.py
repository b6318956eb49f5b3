from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from mbae.dyna import dyna_update
from mbae.dynamics import DynamicsModel
from mbae.envs import ParticleEnv
from mbae.exploration import ModelBasedExplorer
from mbae.policy import GaussianPolicy
from mbae.tools import Experience, NumericError, RunAborted, RunRecord, get_logger
from mbae.trainer.replay import ReplayBuffer
from mbae.valuefn import ValueFunction

if TYPE_CHECKING:
    from logging import Logger

    from mbae.config import EnvConfig, TrainConfig

RNG_STREAMS = ("init", "acting", "replay", "model", "mbae", "eval")
LOSS_KEYS = ("value_loss", "policy_loss", "gen_loss", "disc_loss", "reward_loss", "dyna_loss")


def spawn_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for each consumer of randomness, all derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(len(RNG_STREAMS))
    return {name: np.random.default_rng(child) for name, child in zip(RNG_STREAMS, children, strict=True)}


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


def run_episode(
    env: ParticleEnv,
    policy: GaussianPolicy,
    explorer: ModelBasedExplorer,
    value: ValueFunction,
    dynamics: DynamicsModel,
    rng: np.random.Generator,
    *,
    greedy: bool,
    optimize: bool = False,
) -> tuple[list[Experience], float]:
    """Step an already-reset env until terminal; returns the trajectory and its undiscounted return.

    Greedy episodes act with the policy mean (or the optimized action when `optimize` is set);
    otherwise actions come from the explorer.
    """
    state = env.observe()
    trajectory: list[Experience] = []
    total = 0.0
    while True:
        if not greedy:
            action = explorer.exploratory_action(state, policy, value, dynamics, rng)
        elif optimize:
            action = explorer.optimize_action(state, policy, value, dynamics, rng)
        else:
            action = policy.mean_action(state)
        result = env.step(action)
        trajectory.append(Experience(state, action, result.reward, result.next_state, result.terminal))
        total += result.reward
        state = result.next_state
        if result.terminal:
            return trajectory, total


class Trainer:
    """One seeded training run: CACLA updates with optional MBAE exploration and DYNA value updates.

    Every update round samples one replay batch and applies, in order: the TD value update, the
    advantage-masked policy update, one dynamics-model step, and the DYNA phase.
    """

    def __init__(
        self,
        env_config: EnvConfig,
        config: TrainConfig,
        logger: Logger | None = None,
        run_id: str = "run",
    ) -> None:
        self.env_config = env_config
        self.config = config
        self.logger = logger or get_logger()
        self.run_id = run_id

        self.env = ParticleEnv(env_config)
        self.eval_env = ParticleEnv(env_config)
        self.rngs = spawn_streams(config.seed)

        init = self.rngs["init"]
        state_width, action_width = self.env.observation_width, self.env.action_width
        self.value = ValueFunction(state_width, config.value, init)
        self.policy = GaussianPolicy(state_width, action_width, config.policy, init, config.sigma_horizon)
        self.dynamics = DynamicsModel(state_width, action_width, config.dynamics, init)
        self.explorer = ModelBasedExplorer(config.mbae, self.rngs["mbae"], config.alpha_horizon)
        self.buffer = ReplayBuffer(config.buffer_capacity)

        self.episode = 0
        self.env_steps = 0
        self.records: list[RunRecord] = []
        self.pending_losses: dict[str, list[float]] = {key: [] for key in LOSS_KEYS}
        self.pending_mbae_steps = 0
        self.pending_delta_norms: list[float] = []

    def update_round(self) -> dict[str, float]:
        """One replay batch through value, policy, dynamics and DYNA updates; returns the losses."""
        batch = self.buffer.sample(self.config.batch_size, self.rngs["replay"])
        losses = {"value_loss": self.value.td_update(batch)}
        losses["policy_loss"] = self.policy.cacla_update(batch, self.value.advantages(batch))
        if self.config.train_dynamics:
            gen, disc, reward = self.dynamics.train_step(batch, self.rngs["model"])
            losses |= {"gen_loss": gen, "disc_loss": disc, "reward_loss": reward}
        if self.config.dyna.updates:
            losses["dyna_loss"] = dyna_update(self.value, self.dynamics, batch, self.rngs["model"], self.config.dyna)

        for key, loss in losses.items():
            self.pending_losses[key].append(loss)
        self.logger.debug("%s round losses: %s", self.run_id, {k: round(v, 6) for k, v in losses.items()})
        return losses

    def evaluate(self) -> tuple[float, float]:
        """Mean and std of greedy returns over fresh evaluation episodes."""
        returns = []
        optimize = self.config.eval_policy == "optimized"
        for _ in range(self.config.eval_episodes):
            self.eval_env.reset(self.rngs["eval"])
            _, total = run_episode(
                self.eval_env,
                self.policy,
                self.explorer,
                self.value,
                self.dynamics,
                self.rngs["eval"],
                greedy=True,
                optimize=optimize,
            )
            returns.append(total)
        return float(np.mean(returns)), float(np.std(returns))

    def _record(self) -> RunRecord:
        mean_return, std_return = self.evaluate()
        record = RunRecord(
            episode=self.episode,
            env_steps=self.env_steps,
            mean_return=mean_return,
            std_return=std_return,
            **{key: _mean(values) for key, values in self.pending_losses.items()},
            mbae_steps=self.pending_mbae_steps,
            mean_delta_norm=_mean(self.pending_delta_norms),
        )
        self.pending_losses = {key: [] for key in LOSS_KEYS}
        self.pending_mbae_steps = 0
        self.pending_delta_norms = []
        self.records.append(record)
        self.logger.info(
            "%s episode %d: return %.4f +/- %.4f after %d steps (%d MBAE)",
            self.run_id,
            record.episode,
            record.mean_return,
            record.std_return,
            record.env_steps,
            record.mbae_steps,
        )
        return record

    def train_episode(self) -> RunRecord | None:
        """Simulate one exploratory episode, then run the update rounds; returns a record on evaluation episodes."""
        self.policy.set_episode(self.episode)
        self.explorer.set_episode(self.episode)

        self.env.reset(self.rngs["acting"])
        trajectory, _ = run_episode(
            self.env, self.policy, self.explorer, self.value, self.dynamics, self.rngs["acting"], greedy=False
        )
        self.buffer.extend(trajectory)
        self.env_steps += len(trajectory)

        if len(self.buffer) >= self.config.learning_starts:
            for _ in range(self.config.updates_per_episode):
                self.update_round()

        steps, norms = self.explorer.pop_stats()
        self.pending_mbae_steps += steps
        self.pending_delta_norms.extend(norms)
        self.episode += 1
        return self._record() if self.episode % self.config.eval_every == 0 else None

    def _aborted(self, error: NumericError) -> RunAborted:
        self.logger.error("%s aborted at episode %d: %s", self.run_id, self.episode, error)
        return RunAborted(f"{self.run_id} aborted at episode {self.episode}: {error}", self.episode, self.run_id)

    def train(self, episodes: int | None = None) -> list[RunRecord]:
        """Run `episodes` more episodes (default: up to the configured total); returns the new records.

        Raises:
            RunAborted: If a NaN or Inf appears, with the offending episode index.
        """
        remaining = self.config.episodes - self.episode if episodes is None else episodes
        records = []
        for _ in range(max(remaining, 0)):
            try:
                record = self.train_episode()
            except NumericError as e:
                raise self._aborted(e) from e
            if record is not None:
                records.append(record)
        return records

    def pretrain_dynamics(self, steps: int) -> tuple[float, float, float]:
        """Fit the dynamics model on uniformly random actions before any episode.

        Transitions go to a scratch buffer, never to the replay buffer. Returns the mean
        (gen, disc, reward) losses.

        Raises:
            RunAborted: If a NaN or Inf appears, reported at the current episode index.
        """
        try:
            losses = self._pretrain_losses(steps)
        except NumericError as e:
            raise self._aborted(e) from e
        if not losses:
            return 0.0, 0.0, 0.0
        gen, disc, reward = np.mean(np.asarray(losses), axis=0)
        self.logger.info("%s pretrained dynamics for %d steps: gen %.5f, reward %.5f", self.run_id, steps, gen, reward)
        return float(gen), float(disc), float(reward)

    def _pretrain_losses(self, steps: int) -> list[tuple[float, float, float]]:
        rng = self.rngs["model"]
        scratch_env = ParticleEnv(self.env_config)
        scratch = ReplayBuffer(self.config.buffer_capacity)
        state = scratch_env.reset(rng)
        losses: list[tuple[float, float, float]] = []
        while len(losses) < steps:
            action = rng.uniform(-1.0, 1.0, self.env.action_width)
            result = scratch_env.step(action)
            scratch.add(Experience(state, action, result.reward, result.next_state, result.terminal))
            state = scratch_env.reset(rng) if result.terminal else result.next_state
            if len(scratch) >= self.config.batch_size:
                losses.append(self.dynamics.train_step(scratch.sample(self.config.batch_size, rng), rng))
        return losses


def train(env_config: EnvConfig, config: TrainConfig, logger: Logger | None = None) -> list[RunRecord]:
    """Build a trainer for (env, config) and run it to completion; returns the learning curve."""
    trainer = Trainer(env_config, config, logger)
    if config.pretrain_dynamics_steps:
        trainer.pretrain_dynamics(config.pretrain_dynamics_steps)
    return trainer.train()
