"""Fully connected, dropout, and embedding layers plus activations.

Every layer follows the same protocol: ``build(input_shape, rng)``
allocates parameters and returns the output shape, ``forward(x, mask,
training)`` returns ``(y, mask_out)`` caching whatever backward needs,
and ``backward(dy)`` accumulates parameter gradients and returns the
input gradient.  Weights are Glorot-uniform
(+-sqrt(6/(fan_in+fan_out))), biases zero.
"""

from __future__ import annotations

import numpy as np

from ..errors import EraclassError


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(x: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis, max-shifted for stability."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _apply_activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "relu":
        return relu(z)
    if name == "sigmoid":
        return sigmoid(z)
    if name == "tanh":
        return np.tanh(z)
    if name == "softmax":
        return softmax(z)
    raise EraclassError(f"unknown activation {name!r}")


def _activation_backward(name: str, dy: np.ndarray, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    if name == "identity":
        return dy
    if name == "relu":
        return dy * (z > 0)
    if name == "sigmoid":
        return dy * y * (1.0 - y)
    if name == "tanh":
        return dy * (1.0 - y * y)
    if name == "softmax":
        # J^T dy for each row: y * (dy - <dy, y>)
        dot = (dy * y).sum(axis=-1, keepdims=True)
        return y * (dy - dot)
    raise EraclassError(f"unknown activation {name!r}")


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    """Base layer; subclasses fill ``params``/``grads`` dicts in build()."""

    needs_rng = False

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.built = False

    def build(self, input_shape: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
        raise NotImplementedError

    def forward(self, x, mask=None, training=False):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def zero_grads(self):
        for k in self.grads:
            self.grads[k][...] = 0.0

    def spec(self) -> dict:
        raise NotImplementedError


class Dense(Layer):
    """y = activation(x W + b)."""

    def __init__(self, units: int, activation: str = "identity"):
        super().__init__()
        self.units = units
        self.activation = activation

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise EraclassError(f"Dense expects a vector input, got shape {input_shape}")
        d = input_shape[0]
        self.params = {
            "W": glorot_uniform(rng, (d, self.units), d, self.units),
            "b": np.zeros(self.units),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.built = True
        return (self.units,)

    def forward(self, x, mask=None, training=False):
        if x.shape[1] != self.params["W"].shape[0]:
            raise EraclassError(
                f"Dense input width {x.shape[1]} != weight rows {self.params['W'].shape[0]}"
            )
        self._x = x
        self._z = x @ self.params["W"] + self.params["b"]
        self._y = _apply_activation(self.activation, self._z)
        return self._y, None

    def backward(self, dy):
        dz = _activation_backward(self.activation, dy, self._z, self._y)
        self.grads["W"] += self._x.T @ dz
        self.grads["b"] += dz.sum(axis=0)
        return dz @ self.params["W"].T

    def spec(self):
        return {"type": "dense", "units": self.units, "activation": self.activation}


class Dropout(Layer):
    """Inverted dropout: zero units with probability ``rate`` during
    training, scale survivors by 1/(1-rate); identity at inference."""

    needs_rng = True

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise EraclassError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.rng: np.random.Generator | None = None

    def build(self, input_shape, rng):
        self.rng = rng
        self.built = True
        return input_shape

    def forward(self, x, mask=None, training=False):
        if not training or self.rate == 0.0:
            self._keep = None
            return x, mask
        keep = self.rng.random(x.shape) >= self.rate
        self._keep = keep / (1.0 - self.rate)
        return x * self._keep, mask

    def backward(self, dy):
        if self._keep is None:
            return dy
        return dy * self._keep

    def spec(self):
        return {"type": "dropout", "rate": self.rate}


class Embedding(Layer):
    """Integer indices -> learned vectors; index 0 is PAD and produces
    the sequence mask consumed by recurrent layers."""

    def __init__(self, vocab_rows: int, dim: int):
        super().__init__()
        self.vocab_rows = vocab_rows  # includes PAD and OOV rows
        self.dim = dim

    def build(self, input_shape, rng):
        if len(input_shape) != 1:
            raise EraclassError(f"Embedding expects (T,) index input, got {input_shape}")
        self.params = {
            "table": glorot_uniform(
                rng, (self.vocab_rows, self.dim), self.vocab_rows, self.dim
            )
        }
        self.grads = {"table": np.zeros_like(self.params["table"])}
        self.built = True
        return (input_shape[0], self.dim)

    def forward(self, x, mask=None, training=False):
        idx = x.astype(np.int64)
        if idx.min() < 0 or idx.max() >= self.vocab_rows:
            raise EraclassError(
                f"embedding index out of range [0, {self.vocab_rows}): "
                f"[{idx.min()}, {idx.max()}]"
            )
        self._idx = idx
        return self.params["table"][idx], idx != 0

    def backward(self, dy):
        np.add.at(self.grads["table"], self._idx, dy)
        return None  # integer inputs carry no gradient

    def spec(self):
        return {"type": "embedding", "vocab_rows": self.vocab_rows, "dim": self.dim}
