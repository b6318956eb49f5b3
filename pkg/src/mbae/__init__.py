"""A from-scratch continuous-control toolkit for comparing CACLA with and without model-based action exploration. Trains an actor-critic on an N-dimensional particle navigation task, learns a conditional-GAN model of the dynamics, and nudges exploratory actions along the gradient of predicted next-state value, all on a small numpy autodiff engine.

## Features

### Learning

- **CACLA Actor-Critic**: Gaussian policy with an annealed exploration std, trained only towards actions with positive TD advantage
- **Value Function**: One-step TD regression with a held-constant bootstrap
- **Dynamics Model**: Noise-conditioned successor generator trained against a discriminator with a blended MSE loss, plus a reward predictor
- **Model-Based Action Exploration**: With probability p, exploratory actions move along dV(G(s, u, eta))/du, normalized to the policy std or to unit length
- **Action Optimization**: Optional greedy evaluation that iterates the same gradient step from the policy mean
- **DYNA Updates**: Extra value updates on successors synthesized by the generator

### Engine

- **Reverse-Mode Autodiff**: Define-by-run tape over float64 numpy arrays with gradients for parameters and inputs
- **Layers**: Dense, ReLU, tanh, inverted dropout and concat-skip blocks
- **Optimizers**: SGD and bias-corrected Adam
- **Gradient Checking**: Central finite-difference oracle for every primitive and network

### Experiments

- **Paired Seeds**: Separate random streams per concern, so variants sharing a seed draw the same exploration noise
- **Variants**: Baseline, MBAE, DYNA-only, unit and policy-std normalization, and optimized evaluation
- **Outputs**: Per-run and aggregate CSV learning curves, a static SVG overlay, a summary table and binary checkpoints
- **Field Diagnostics**: Value, policy direction, model error and MBAE direction over a 2D grid

## Arguments

```text
command {run,ablate,plot,eval-checkpoint}   what to do

--config PATH                               experiment config file
--seed N                                    seed to run, repeatable (replaces the config's seed list)
--set KEY=VALUE                             override a config value by dotted key, repeatable
--parallel N                                worker processes for independent runs
--median                                    aggregate seeds by median instead of mean
--pretrain-dynamics N                       train the dynamics model on random actions first
--csv PATH                                  learning-curve CSV to overlay, repeatable
--checkpoint PATH                           checkpoint file to evaluate
--episodes N                                greedy evaluation episodes
--eval-policy {mean,optimized}              act with the policy mean or the optimized action
--out DIR                                   output directory
```

Set `MBAE_LOG` to `error`, `info` (default) or `debug` to control logging.

## Usage

```bash
# Baseline against MBAE on the 10D particle task, five seeds
mbae run --config configs/particle10d.yaml --out results/10d

# Every variant on the 2D task with obstacles, four runs at a time
mbae ablate --config configs/particle2d.yaml --parallel 4 --out results/ablation

# Shorter smoke run
mbae run --config configs/particle2d.yaml --set train.episodes=50 --seed 0 --seed 1

# Re-plot aggregate curves
mbae plot --csv results/10d/cacla_aggregate.csv --csv results/10d/cacla+mbae_aggregate.csv --out plots

# Evaluate a saved run with optimized actions and dump field diagnostics
mbae eval-checkpoint --checkpoint results/ablation/checkpoints/cacla+mbae_seed0.mbae --eval-policy optimized --out fields
```

Exit status is 0 on success, 2 for configuration or input errors, and 3 when a run aborts on a numeric error.

"""  # noqa: D212, D415, W505

from __future__ import annotations

from mbae.config import ExperimentConfig, TrainConfig, load_experiment_config
from mbae.tools import MbaeError, RunRecord
