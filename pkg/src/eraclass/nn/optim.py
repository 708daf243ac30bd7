"""RMSProp and Adam with in-place parameter updates.

RMSProp:  v <- rho v + (1-rho) g^2;   theta <- theta - lr g / (sqrt(v) + eps)
Adam:     m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;
          theta <- theta - lr m-hat / (sqrt(v-hat) + eps)   (bias-corrected)

Updates mutate the parameter arrays in place so that shared references
(e.g. bidirectional wrappers) stay valid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


@dataclass
class OptimizerSpec:
    kind: str = "rmsprop"  # "rmsprop" | "adam"
    learning_rate: float = 1e-3
    rho: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7

    def __post_init__(self):
        if self.kind not in ("rmsprop", "adam"):
            raise ConfigError(f"unknown optimizer {self.kind!r}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


class RMSProp:
    def __init__(self, learning_rate=1e-3, rho=0.9, epsilon=1e-7):
        self.lr = learning_rate
        self.rho = rho
        self.eps = epsilon
        self._v: dict[tuple[int, str], np.ndarray] = {}

    def step(self, params: list[dict[str, np.ndarray]], grads: list[dict[str, np.ndarray]]):
        for i, (p, g) in enumerate(zip(params, grads)):
            for name, grad in g.items():
                key = (i, name)
                v = self._v.setdefault(key, np.zeros_like(grad))
                v *= self.rho
                v += (1.0 - self.rho) * grad * grad
                p[name] -= self.lr * grad / (np.sqrt(v) + self.eps)


class Adam:
    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-7):
        self.lr = learning_rate
        self.b1 = beta1
        self.b2 = beta2
        self.eps = epsilon
        self._m: dict[tuple[int, str], np.ndarray] = {}
        self._v: dict[tuple[int, str], np.ndarray] = {}
        self._t = 0

    def step(self, params: list[dict[str, np.ndarray]], grads: list[dict[str, np.ndarray]]):
        self._t += 1
        correct1 = 1.0 - self.b1**self._t
        correct2 = 1.0 - self.b2**self._t
        for i, (p, g) in enumerate(zip(params, grads)):
            for name, grad in g.items():
                key = (i, name)
                m = self._m.setdefault(key, np.zeros_like(grad))
                v = self._v.setdefault(key, np.zeros_like(grad))
                m *= self.b1
                m += (1.0 - self.b1) * grad
                v *= self.b2
                v += (1.0 - self.b2) * grad * grad
                m_hat = m / correct1
                v_hat = v / correct2
                p[name] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def build_optimizer(spec: OptimizerSpec):
    if spec.kind == "rmsprop":
        return RMSProp(spec.learning_rate, spec.rho, spec.epsilon)
    return Adam(spec.learning_rate, spec.beta1, spec.beta2, spec.epsilon)
