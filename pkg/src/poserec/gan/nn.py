"""Fully connected generator/discriminator networks with hand-written backprop."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..exceptions import DimensionMismatch, LengthMismatch

LEAK = 0.2
BCE_CLAMP = 1e-7

TANH = "tanh"
SIGMOID = "sigmoid"


@dataclass(eq=False)
class MLP:
    """Affine layers with leaky-ReLU between them and a squashing output.

    ``weights[k]`` has shape ``(fan_in, fan_out)``; inputs are batches of
    row vectors.
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    output: str = TANH

    def __post_init__(self):
        if self.output not in (TANH, SIGMOID):
            raise ValueError(f"unknown output activation {self.output!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatch("need one bias per weight matrix and at least one layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionMismatch(f"layer {k}: weight {w.shape} vs bias {b.shape}")
            if k and self.weights[k - 1].shape[1] != w.shape[0]:
                raise DimensionMismatch(f"layer {k} expects {w.shape[0]} inputs, "
                                        f"previous layer gives {self.weights[k - 1].shape[1]}")

    @classmethod
    def init(cls, dims: Sequence[int], output: str, rng: np.random.Generator) -> "MLP":
        """He-style normal initialization for leaky-ReLU, zero biases."""
        gain = np.sqrt(2.0 / (1.0 + LEAK ** 2))
        weights = [rng.standard_normal((a, b)) * (gain / np.sqrt(a))
                   for a, b in zip(dims[:-1], dims[1:])]
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(weights, biases, output)

    @property
    def dims(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def params(self) -> List[np.ndarray]:
        """Tensors in optimizer order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, tensors: Sequence[np.ndarray]) -> "MLP":
        return MLP(list(tensors[0::2]), list(tensors[1::2]), self.output)

    def __eq__(self, other):
        if not isinstance(other, MLP):
            return NotImplemented
        return (self.output == other.output and self.dims == other.dims
                and all(np.array_equal(a, b) for a, b in zip(self.params, other.params)))


@dataclass
class ForwardCache:
    inputs: List[np.ndarray]
    pre: List[np.ndarray]
    out: np.ndarray


def _sigmoid(x):
    # exp of a non-positive argument only; avoids overflow warnings
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def forward(net: MLP, x) -> Tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    if h.shape[1] != net.dims[0]:
        raise DimensionMismatch(f"network expects {net.dims[0]} inputs, got {h.shape[1]}")
    inputs, pre = [], []
    last = len(net.weights) - 1
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        a = h @ w + b
        pre.append(a)
        if k < last:
            h = np.where(a > 0, a, LEAK * a)
        elif net.output == TANH:
            h = np.tanh(a)
        else:
            h = _sigmoid(a)
    out = h[0] if squeeze else h
    return out, ForwardCache(inputs, pre, h)


def forward_generator(theta_g: MLP, z) -> np.ndarray:
    """Latent vector(s) to image vector(s) in [-1, 1]."""
    return forward(theta_g, z)[0]


def forward_discriminator(theta_d: MLP, x) -> np.ndarray:
    """Image vector(s) to real-vs-fake probabilities; batches give shape ``(n,)``."""
    out = forward(theta_d, x)[0]
    return out[..., 0] if np.ndim(out) else out


def backward(net: MLP, cache: ForwardCache, upstream) -> Tuple[List[np.ndarray], np.ndarray]:
    """Gradients of a scalar loss given ``upstream = dloss/d(output)``.

    Returns parameter gradients in ``net.params`` order and the gradient
    with respect to the network input.
    """
    g = np.asarray(upstream, dtype=np.float64).reshape(cache.out.shape)
    y = cache.out
    if net.output == TANH:
        g = g * (1.0 - y * y)
    else:
        g = g * y * (1.0 - y)
    grads: List[np.ndarray] = [None] * (2 * len(net.weights))
    for k in range(len(net.weights) - 1, -1, -1):
        if k < len(net.weights) - 1:
            g = g * np.where(cache.pre[k] > 0, 1.0, LEAK)
        grads[2 * k] = cache.inputs[k].T @ g
        grads[2 * k + 1] = g.sum(axis=0)
        g = g @ net.weights[k].T
    return grads, g


def bce_loss(predictions, labels) -> Tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient with respect to ``predictions``.

    Predictions are clamped to ``[1e-7, 1 - 1e-7]`` first; the gradient
    ``(p - y) / (p (1 - p)) / n`` uses the clamped values.
    """
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(labels, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.size} predictions vs {y.size} labels")
    if p.size == 0:
        raise LengthMismatch("empty batch")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    n = p.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p)) / n
    return float(loss), grad
