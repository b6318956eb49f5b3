from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mbae.diffcore.tensor import Tape, Tensor, concat, dense, dropout, relu, tanh
from mbae.tools import ConfigurationError

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

LAYER_KINDS = ("dense", "relu", "tanh", "dropout", "concat-skip")
ACTIVATIONS = ("none", "relu", "tanh")


@dataclass(frozen=True)
class LayerSpec:
    """One entry of a network description."""

    kind: str
    width: int = 0
    dropout_rate: float = 0.0
    activation: str = "none"  # concat-skip only: concat(x, activation(dense(x)))

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            msg = f"unknown layer kind {self.kind!r}"
            raise ConfigurationError(msg)
        if self.kind in {"dense", "concat-skip"} and self.width < 1:
            msg = f"{self.kind} layer needs a positive width"
            raise ConfigurationError(msg)
        if not 0.0 <= self.dropout_rate < 1.0:
            msg = f"dropout_rate must lie in [0, 1), got {self.dropout_rate}"
            raise ConfigurationError(msg)
        if self.activation not in ACTIVATIONS:
            msg = f"unknown activation {self.activation!r}"
            raise ConfigurationError(msg)


def mlp_specs(hidden_sizes: Sequence[int], output_width: int, activation: str = "relu") -> list[LayerSpec]:
    """Plain MLP: dense+activation per hidden size, then a linear output layer."""
    layers: list[LayerSpec] = []
    for width in hidden_sizes:
        layers += [LayerSpec("dense", width), LayerSpec(activation)]
    layers.append(LayerSpec("dense", output_width))
    return layers


def densenet_specs(
    blocks: int,
    width: int,
    output_width: int,
    *,
    activation: str = "relu",
    input_dropout: float = 0.0,
    hidden_dropout: float = 0.0,
    output_dropout: float = 0.0,
) -> list[LayerSpec]:
    """Concat-skip blocks between input and output dropout, ending in a linear layer."""
    layers = [LayerSpec("dropout", dropout_rate=input_dropout)]
    for block in range(blocks):
        if block > 0:
            layers.append(LayerSpec("dropout", dropout_rate=hidden_dropout))
        layers.append(LayerSpec("concat-skip", width, activation=activation))
    layers += [LayerSpec("dropout", dropout_rate=output_dropout), LayerSpec("dense", output_width)]
    return layers


class Network:
    """A feed-forward network built from LayerSpecs, Glorot-uniform initialised."""

    def __init__(
        self, input_width: int, layers: Sequence[LayerSpec], rng: np.random.Generator, name: str = "net"
    ) -> None:
        if not layers or layers[-1].kind != "dense":
            msg = f"{name}: a network description must be non-empty and end in a dense layer"
            raise ConfigurationError(msg)
        if input_width < 1:
            msg = f"{name}: input width must be positive"
            raise ConfigurationError(msg)

        self.name = name
        self.input_width = input_width
        self.layers = list(layers)
        self._weights: list[tuple[Tensor, Tensor] | None] = []

        width = input_width
        for index, spec in enumerate(self.layers):
            if spec.kind in {"dense", "concat-skip"}:
                limit = np.sqrt(6.0 / (width + spec.width))
                weight = Tensor(
                    rng.uniform(-limit, limit, size=(width, spec.width)),
                    requires_grad=True,
                    name=f"{name}.{index}.weight",
                )
                bias = Tensor(np.zeros(spec.width), requires_grad=True, name=f"{name}.{index}.bias")
                self._weights.append((weight, bias))
                width = spec.width if spec.kind == "dense" else width + spec.width
            else:
                self._weights.append(None)
        self.output_width = width

    @property
    def needs_rng(self) -> bool:
        return any(spec.kind == "dropout" and spec.dropout_rate > 0.0 for spec in self.layers)

    def parameters(self) -> list[Tensor]:
        return [t for pair in self._weights if pair is not None for t in pair]

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        for tensor in self.parameters():
            yield tensor.name, tensor

    @property
    def output_layer(self) -> tuple[Tensor, Tensor]:
        """Weight and bias of the final dense layer."""
        pair = self._weights[-1]
        assert pair is not None
        return pair

    def zero_grad(self) -> None:
        for tensor in self.parameters():
            tensor.zero_grad()

    def forward(
        self,
        inputs: Tensor | np.ndarray,
        *,
        train_mode: bool = False,
        rng: np.random.Generator | None = None,
        tape: Tape | None = None,
    ) -> Tensor:
        """Run the network on a batch of rows, recording every primitive on `tape`.

        Raises:
            ConfigurationError: If the input width does not match, or dropout is sampled without a generator.
        """
        x = inputs if isinstance(inputs, Tensor) else Tensor(np.atleast_2d(inputs))
        if x.data.ndim != 2 or x.shape[1] != self.input_width:
            msg = f"{self.name}: expected input of width {self.input_width}, got shape {x.shape}"
            raise ConfigurationError(msg)
        if train_mode and rng is None and self.needs_rng:
            msg = f"{self.name}: train-mode forward with dropout needs a random generator"
            raise ConfigurationError(msg)
        tape = tape if tape is not None else Tape()

        for spec, pair in zip(self.layers, self._weights, strict=True):
            if spec.kind == "dense":
                assert pair is not None
                x = dense(tape, x, *pair)
            elif spec.kind == "relu":
                x = relu(tape, x)
            elif spec.kind == "tanh":
                x = tanh(tape, x)
            elif spec.kind == "dropout":
                x = dropout(tape, x, spec.dropout_rate, rng, train_mode=train_mode)
            else:
                assert pair is not None
                h = dense(tape, x, *pair)
                if spec.activation == "relu":
                    h = relu(tape, h)
                elif spec.activation == "tanh":
                    h = tanh(tape, h)
                x = concat(tape, (x, h))
        return x

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        """Eval-mode prediction as a plain array."""
        return self.forward(inputs).data

    def grad_wrt_input(self, inputs: np.ndarray, seed_grad: np.ndarray) -> np.ndarray:
        """d(seed . output)/d(inputs) in eval mode; parameter gradients are left as they were."""
        saved = [tensor.grad.copy() for tensor in self.parameters()]
        x = Tensor(np.atleast_2d(inputs))
        output = self.forward(x)
        output.tape.backward(output, np.reshape(seed_grad, output.shape))
        for tensor, grad in zip(self.parameters(), saved, strict=True):
            tensor.grad[...] = grad
        return x.grad

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy arrays into the parameters.

        Raises:
            ConfigurationError: On a missing name or a shape mismatch.
        """
        for name, tensor in self.named_parameters():
            if name not in state:
                msg = f"missing parameter {name}"
                raise ConfigurationError(msg)
            values = np.asarray(state[name], dtype=np.float64).reshape(-1)
            if values.size != tensor.data.size:
                msg = f"parameter {name} has {values.size} values, expected {tensor.data.size}"
                raise ConfigurationError(msg)
            tensor.data[...] = values.reshape(tensor.shape)
