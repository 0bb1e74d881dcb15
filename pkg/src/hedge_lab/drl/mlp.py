# SPDX-FileCopyrightText: 2025 Harri Kaimio
#
# SPDX-License-Identifier: BSD-3-Clause

"""Multilayer perceptrons with hand-written backpropagation.

Inputs are batches of row vectors: layer ``l`` computes
``z_l = a_{l-1} @ W_l.T + b_l`` and ``a_l = relu(z_l)``, except the last layer,
which applies the output activation instead.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from ..errors import ContractError


class OutputActivation(str, Enum):
    IDENTITY = "identity"
    SIGMOID = "sigmoid"


@dataclass
class Mlp:
    """A fully connected network.

    Attributes:
        layer_sizes: Input width followed by the width of every layer.
        weights: One ``(out, in)`` matrix per layer.
        biases: One ``(out,)`` vector per layer.
        output: Activation of the last layer; hidden layers use ReLU.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output: OutputActivation = OutputActivation.IDENTITY

    def __post_init__(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ContractError("an MLP needs an input and at least one layer")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ContractError("parameter count does not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases, strict=True)):
            expected = (self.layer_sizes[i + 1], self.layer_sizes[i])
            if w.shape != expected or b.shape != (expected[0],):
                raise ContractError(f"layer {i} has shape {w.shape}, expected {expected}")

    @classmethod
    def create(
        cls, layer_sizes: Sequence[int], rng: np.random.Generator, output: OutputActivation = OutputActivation.IDENTITY
    ) -> "Mlp":
        """He-initialised network; the last layer starts small."""
        sizes = tuple(int(n) for n in layer_sizes)
        weights, biases = [], []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:], strict=True)):
            scale = math.sqrt(2.0 / n_in)
            if i == len(sizes) - 2:
                scale *= 0.1
            weights.append(rng.normal(0.0, scale, size=(n_out, n_in)))
            biases.append(np.zeros(n_out))
        return cls(sizes, weights, biases, output)

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order: W1, b1, W2, b2, ..."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            out.extend((w, b))
        return out

    def copy(self) -> "Mlp":
        return Mlp(self.layer_sizes, [w.copy() for w in self.weights], [b.copy() for b in self.biases], self.output)


class MlpGradients(NamedTuple):
    """Gradients of a scalar loss with respect to parameters and inputs."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    inputs: np.ndarray

    def params(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases, strict=True):
            out.extend((w, b))
        return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    activations = [x]
    pre = []
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases, strict=True)):
        z = a @ w.T + b
        pre.append(z)
        if i < last:
            a = np.maximum(z, 0.0)
        elif net.output == OutputActivation.SIGMOID:
            a = _sigmoid(z)
        else:
            a = z
        activations.append(a)
    return a, activations, pre


def _as_batch(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.shape[-1] != net.layer_sizes[0]:
        raise ContractError(f"input width {batch.shape[-1]} does not match {net.layer_sizes[0]}")
    return batch, single


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Forward pass of a vector or a batch of row vectors."""
    batch, single = _as_batch(net, x)
    out = _forward(net, batch)[0]
    return out[0] if single else out


def mlp_gradients(net: Mlp, x: np.ndarray, upstream: np.ndarray) -> MlpGradients:
    """Reverse-mode gradients of ``sum(upstream * mlp_forward(net, x))``.

    Args:
        net: The network.
        x: Input vector or batch.
        upstream: Gradient of the loss with respect to the output, same
            leading shape as the output.

    Returns:
        Parameter gradients summed over the batch and per-sample input gradients.
    """
    batch, single = _as_batch(net, x)
    out, activations, pre = _forward(net, batch)
    grad = np.asarray(upstream, dtype=float)
    grad = grad[None, :] if single else grad
    if grad.shape != out.shape:
        raise ContractError(f"upstream shape {grad.shape} does not match output shape {out.shape}")

    if net.output == OutputActivation.SIGMOID:
        grad = grad * out * (1.0 - out)
    n_layers = len(net.weights)
    dw: list[np.ndarray] = [np.empty(0)] * n_layers
    db: list[np.ndarray] = [np.empty(0)] * n_layers
    for i in range(n_layers - 1, -1, -1):
        dw[i] = grad.T @ activations[i]
        db[i] = grad.sum(axis=0)
        grad = grad @ net.weights[i]
        if i > 0:
            grad = grad * (pre[i - 1] > 0.0)
    return MlpGradients(dw, db, grad[0] if single else grad)


class Adam:
    """Adam optimiser over a fixed list of parameter arrays, updated in place."""

    def __init__(
        self, params: list[np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Takes one descent step along ``grads``."""
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v, strict=True):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def soft_update(target: Mlp, source: Mlp, tau: float) -> None:
    """Moves ``target`` a fraction ``tau`` towards ``source``."""
    for t, s in zip(target.params(), source.params(), strict=True):
        t *= 1.0 - tau
        t += tau * s
