"""Baseline models: a Conv1D text classifier and ridge logistic regression.

The CNN follows the embedding -> valid 1-D convolution (ReLU) -> global
max pool -> dense stack shape.  Logistic regression is multinomial
(softmax) with an L2 penalty on the weights (bias unpenalized),
minimizing  mean log loss + lambda ||W||^2  with lambda = 1/C, fit by
a limited-memory BFGS (memory 10, Armijo backtracking line search)
from a zero initialization, which makes fits fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, EraclassError
from .nn.layers import Layer, glorot_uniform, softmax


class Conv1D(Layer):
    """Valid cross-correlation over the time axis followed by ReLU."""

    def __init__(self, filters: int, kernel_width: int):
        super().__init__()
        self.filters = filters
        self.kernel_width = kernel_width

    def build(self, input_shape, rng):
        if len(input_shape) != 2:
            raise EraclassError(f"Conv1D expects (T, features) input, got {input_shape}")
        t, d = input_shape
        k = self.kernel_width
        if t < k:
            raise EraclassError(f"sequence length {t} shorter than kernel width {k}")
        self.params = {
            "K": glorot_uniform(rng, (k, d, self.filters), k * d, self.filters),
            "b": np.zeros(self.filters),
        }
        self.grads = {name: np.zeros_like(v) for name, v in self.params.items()}
        self.built = True
        return (t - k + 1, self.filters)

    def forward(self, x, mask=None, training=False):
        _, t, _ = x.shape
        k = self.kernel_width
        if t < k:
            raise EraclassError(f"sequence length {t} shorter than kernel width {k}")
        t_out = t - k + 1
        z = np.zeros((x.shape[0], t_out, self.filters))
        for dt in range(k):
            z += x[:, dt : dt + t_out, :] @ self.params["K"][dt]
        z += self.params["b"]
        self._x, self._z = x, z
        return np.maximum(0.0, z), None

    def backward(self, dy):
        x, z = self._x, self._z
        k = self.kernel_width
        t_out = z.shape[1]
        dz = dy * (z > 0)
        self.grads["b"] += dz.sum(axis=(0, 1))
        dx = np.zeros_like(x)
        for dt in range(k):
            self.grads["K"][dt] += np.tensordot(x[:, dt : dt + t_out, :], dz, axes=([0, 1], [0, 1]))
            dx[:, dt : dt + t_out, :] += dz @ self.params["K"][dt].T
        return dx

    def spec(self):
        return {"type": "conv1d", "filters": self.filters, "kernel_width": self.kernel_width}


class GlobalMaxPool1D(Layer):
    """Per-filter maximum over time; gradients route to the (first) argmax."""

    def build(self, input_shape, rng):
        if len(input_shape) != 2:
            raise EraclassError(f"GlobalMaxPool1D expects (T, features), got {input_shape}")
        self.built = True
        return (input_shape[1],)

    def forward(self, x, mask=None, training=False):
        self._argmax = x.argmax(axis=1)
        self._in_shape = x.shape
        batch, _, filters = x.shape
        out = x[np.arange(batch)[:, None], self._argmax, np.arange(filters)[None, :]]
        return out, None

    def backward(self, dy):
        batch, _, filters = self._in_shape
        dx = np.zeros(self._in_shape)
        dx[np.arange(batch)[:, None], self._argmax, np.arange(filters)[None, :]] = dy
        return dx

    def spec(self):
        return {"type": "global_max_pool"}


def build_baseline_layer(spec: dict) -> Layer:
    if spec["type"] == "conv1d":
        return Conv1D(spec["filters"], spec["kernel_width"])
    if spec["type"] == "global_max_pool":
        return GlobalMaxPool1D()
    raise ConfigError(f"unknown baseline layer {spec['type']!r}")


@dataclass
class CnnSpec:
    embedding_dim: int = 64
    filters: int = 128
    kernel_width: int = 5
    pooling: str = "global_max"
    dense_widths: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.pooling != "global_max":
            raise ConfigError(f"unsupported pooling {self.pooling!r}")


def cnn_layer_specs(spec: CnnSpec, vocab_rows: int, n_classes: int) -> tuple[list[dict], str]:
    """Layer stack + loss name for the Conv1D classifier."""
    layers = [
        {"type": "embedding", "vocab_rows": vocab_rows, "dim": spec.embedding_dim},
        {"type": "conv1d", "filters": spec.filters, "kernel_width": spec.kernel_width},
        {"type": "global_max_pool"},
    ]
    for width in spec.dense_widths:
        layers.append({"type": "dense", "units": width, "activation": "relu"})
    if n_classes == 2:
        layers.append({"type": "dense", "units": 1, "activation": "sigmoid"})
        return layers, "binary_ce"
    layers.append({"type": "dense", "units": n_classes, "activation": "softmax"})
    return layers, "sparse_categorical_ce"


# ---------------------------------------------------------------------------
# Ridge logistic regression
# ---------------------------------------------------------------------------


@dataclass
class LogRegSpec:
    C: float = 1.0  # inverse of the ridge strength lambda
    max_iterations: int = 200
    tolerance: float = 1e-5

    def __post_init__(self):
        if self.C <= 0:
            raise ConfigError("C must be positive")


@dataclass
class FittedLogReg:
    weights: np.ndarray  # (features, classes)
    bias: np.ndarray  # (classes,)
    converged: bool
    n_iterations: int
    objective: float
    objective_history: list[float]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return softmax(x @ self.weights + self.bias)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.predict_proba(x).argmax(axis=1).astype(np.int64)


def logreg_objective(
    theta: np.ndarray, x: np.ndarray, y: np.ndarray, n_classes: int, lam: float
) -> tuple[float, np.ndarray]:
    """Penalized objective and its gradient at packed parameters.

    theta packs the weight matrix row-major followed by the bias vector.
    """
    n, d = x.shape
    w = theta[: d * n_classes].reshape(d, n_classes)
    b = theta[d * n_classes :]
    p = softmax(x @ w + b)
    picked = np.clip(p[np.arange(n), y], 1e-300, None)
    loss = -float(np.mean(np.log(picked))) + lam * float((w * w).sum())
    g = p.copy()
    g[np.arange(n), y] -= 1.0
    g /= n
    dw = x.T @ g + 2.0 * lam * w
    db = g.sum(axis=0)
    return loss, np.concatenate([dw.ravel(), db])


def _lbfgs_direction(g, s_list, y_list, rho_list):
    q = g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if y_list:
        gamma = (s_list[-1] @ y_list[-1]) / (y_list[-1] @ y_list[-1])
        q *= gamma
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        beta = rho * (y @ q)
        q += s * (a - beta)
    return -q


def minimize_lbfgs(fun_grad, x0: np.ndarray, max_iterations: int, tolerance: float, memory: int = 10):
    """L-BFGS with Armijo backtracking; returns (x, f, converged, iters, history).

    Convergence is declared when the gradient's max-norm drops to the
    tolerance.  If the line search stalls, the best iterate so far is
    returned with converged=False.
    """
    x = x0.astype(np.float64).copy()
    f, g = fun_grad(x)
    history = [f]
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iterations + 1):
        if np.max(np.abs(g)) <= tolerance:
            converged = True
            break
        d = _lbfgs_direction(g, s_list, y_list, rho_list)
        slope = g @ d
        if slope >= 0:  # stale curvature pairs; fall back to steepest descent
            s_list, y_list, rho_list = [], [], []
            d = -g
            slope = g @ d
        step = 1.0
        accepted = False
        while step >= 1e-16:
            x_new = x + step * d
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        s = x_new - x
        yv = g_new - g
        sy = s @ yv
        if sy > 1e-12:
            s_list.append(s)
            y_list.append(yv)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        x, f, g = x_new, f_new, g_new
        history.append(f)
    else:
        it = max_iterations
    if not converged and np.max(np.abs(g)) <= tolerance:
        converged = True
    return x, f, converged, it, history


def logreg_fit(x: np.ndarray, y: np.ndarray, spec: LogRegSpec) -> FittedLogReg:
    """Fit multinomial ridge logistic regression from zero initialization."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or len(x) != len(y):
        raise DataError(f"bad training shapes: x {x.shape}, y {y.shape}")
    if not np.isfinite(x).all():
        raise DataError("feature matrix contains non-finite values")
    n_classes = int(y.max()) + 1
    if n_classes < 2:
        n_classes = 2
    d = x.shape[1]
    lam = 1.0 / spec.C
    theta0 = np.zeros(d * n_classes + n_classes)
    theta, f, converged, iters, history = minimize_lbfgs(
        lambda t: logreg_objective(t, x, y, n_classes, lam),
        theta0,
        spec.max_iterations,
        spec.tolerance,
    )
    return FittedLogReg(
        weights=theta[: d * n_classes].reshape(d, n_classes),
        bias=theta[d * n_classes :],
        converged=converged,
        n_iterations=iters,
        objective=f,
        objective_history=history,
    )
