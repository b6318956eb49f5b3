"""Model-based action exploration.

Exploratory actions are nudged along the gradient of the predicted successor's value with respect to the
action, computed by differentiating the value function through the learned successor generator. The same
step, iterated from the policy mean, gives a greedy action-optimization mode for evaluation.
"""  # noqa: D212, D415, W505

from __future__ import annotations

from .mbae_ops import ActionPolicy, ModelBasedExplorer, SuccessorModel, ValueModel, action_value_gradient
