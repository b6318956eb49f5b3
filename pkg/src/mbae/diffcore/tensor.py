"""Tensors, the define-by-run tape, and the primitive operations it records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from mbae.tools import ConfigurationError, TapeError, check_finite

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence


class Tensor:
    """A float64 array with an accumulated gradient of the same shape."""

    __slots__ = ("data", "grad", "name", "requires_grad", "tape")

    def __init__(
        self, data: np.ndarray | Sequence[float] | float, *, requires_grad: bool = False, name: str = ""
    ) -> None:
        self.data = np.array(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.requires_grad = requires_grad
        self.name = name
        self.tape: Tape | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"


@dataclass
class _Node:
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """Ordered record of primitive ops; replayed once, in reverse, by `backward`."""

    def __init__(self) -> None:
        self._nodes: list[_Node] = []
        self.consumed = False

    def __len__(self) -> int:
        return len(self._nodes)

    def record(
        self,
        data: np.ndarray,
        inputs: Sequence[Tensor],
        backward_fn: Callable[[np.ndarray], Sequence[np.ndarray | None]],
    ) -> Tensor:
        """Wrap `data` as the output of an op over `inputs` and remember how to differentiate it."""
        if self.consumed:
            msg = "cannot record on a tape that has already been replayed"
            raise TapeError(msg)
        output = Tensor(check_finite(data, "forward output"))
        output.tape = self
        self._nodes.append(_Node(tuple(inputs), output, backward_fn))
        return output

    def backward(self, output: Tensor, seed_grad: np.ndarray | float) -> None:
        """Accumulate d(seed_grad . output)/d(tensor) into every tensor that fed `output`.

        Raises:
            TapeError: If the tape was already replayed, `output` is foreign, or the seed has the wrong shape.
        """
        if self.consumed:
            msg = "tape already consumed"
            raise TapeError(msg)
        if output.tape is not self:
            msg = "output was not recorded on this tape"
            raise TapeError(msg)
        seed = np.asarray(seed_grad, dtype=np.float64)
        if seed.ndim == 0:
            seed = np.full(output.shape, float(seed))
        if seed.shape != output.shape:
            msg = f"seed shape {seed.shape} does not match output shape {output.shape}"
            raise TapeError(msg)
        check_finite(seed, "seed gradient")
        self.consumed = True

        output.grad += seed
        touched: list[Tensor] = []
        for node in reversed(self._nodes):
            grad = node.output.grad
            if not grad.any():
                continue
            for tensor, contribution in zip(node.inputs, node.backward_fn(grad), strict=True):
                if contribution is not None:
                    tensor.grad += contribution
                    touched.append(tensor)
        for tensor in touched:
            check_finite(tensor.grad, f"gradient of {tensor!r}")


def backward(tape: Tape, output: Tensor, seed_grad: np.ndarray | float) -> None:
    tape.backward(output, seed_grad)


def dense(tape: Tape, x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ W + b over a batch of rows."""
    if x.shape[-1] != weight.shape[0]:
        msg = f"dense layer expects width {weight.shape[0]}, got {x.shape[-1]}"
        raise ConfigurationError(msg)

    def _backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return g @ weight.data.T, x.data.T @ g, g.sum(axis=0)

    return tape.record(x.data @ weight.data + bias.data, (x, weight, bias), _backward)


def relu(tape: Tape, x: Tensor) -> Tensor:
    mask = x.data > 0.0
    return tape.record(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def tanh(tape: Tape, x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return tape.record(y, (x,), lambda g: (g * (1.0 - y * y),))


def add(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    return tape.record(a.data + b.data, (a, b), lambda g: (g, g))


def mul(tape: Tape, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product."""
    return tape.record(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def concat(tape: Tape, parts: Sequence[Tensor]) -> Tensor:
    """Concatenate along the feature axis; backward hands each part its own columns."""
    bounds = np.cumsum([0, *(p.shape[-1] for p in parts)])

    def _backward(g: np.ndarray) -> list[np.ndarray]:
        return [g[..., lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)]

    return tape.record(np.concatenate([p.data for p in parts], axis=-1), parts, _backward)


def slice_columns(tape: Tape, x: Tensor, start: int, stop: int) -> Tensor:
    def _backward(g: np.ndarray) -> tuple[np.ndarray]:
        full = np.zeros_like(x.data)
        full[..., start:stop] = g
        return (full,)

    return tape.record(x.data[..., start:stop], (x,), _backward)


def dropout(tape: Tape, x: Tensor, rate: float, rng: np.random.Generator | None, *, train_mode: bool) -> Tensor:
    """Inverted dropout: survivors are scaled by 1/(1-rate) in train mode, eval mode is the identity."""
    if not train_mode or rate == 0.0:
        return x
    if rng is None:
        msg = "train-mode dropout needs a random generator"
        raise ConfigurationError(msg)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return tape.record(x.data * mask, (x,), lambda g: (g * mask,))
