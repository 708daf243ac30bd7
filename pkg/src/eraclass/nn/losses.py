"""Cross-entropy losses.

Predictions are clipped to [1e-12, 1-1e-12] before the log; the
returned gradient is with respect to the (pre-clip) prediction and is
zero wherever the clip was active.
"""

from __future__ import annotations

import numpy as np

from ..errors import EraclassError

CLIP = 1e-12


def binary_cross_entropy(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """-mean(y ln p + (1-y) ln(1-p)) for sigmoid outputs.

    ``pred`` is (batch,) or (batch, 1); ``target`` holds 0/1 labels.
    """
    p = pred.reshape(-1)
    y = target.astype(np.float64).reshape(-1)
    if p.shape != y.shape:
        raise EraclassError(f"prediction/target shape mismatch: {pred.shape} vs {target.shape}")
    clipped = np.clip(p, CLIP, 1.0 - CLIP)
    n = p.shape[0]
    loss = -float(np.mean(y * np.log(clipped) + (1.0 - y) * np.log(1.0 - clipped)))
    inside = (p > CLIP) & (p < 1.0 - CLIP)
    dp = np.where(inside, (-y / clipped + (1.0 - y) / (1.0 - clipped)) / n, 0.0)
    return loss, dp.reshape(pred.shape)


def sparse_categorical_cross_entropy(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """-mean(ln p[target]) for softmax outputs; targets are class indices."""
    if pred.ndim != 2:
        raise EraclassError(f"expected (batch, classes) predictions, got {pred.shape}")
    y = target.astype(np.int64).reshape(-1)
    n, classes = pred.shape
    if y.shape[0] != n:
        raise EraclassError(f"{n} predictions but {y.shape[0]} targets")
    if y.min() < 0 or y.max() >= classes:
        raise EraclassError(f"target index out of range [0, {classes}): {y.min()}..{y.max()}")
    picked = pred[np.arange(n), y]
    clipped = np.clip(picked, CLIP, 1.0 - CLIP)
    loss = -float(np.mean(np.log(clipped)))
    dp = np.zeros_like(pred)
    inside = (picked > CLIP) & (picked < 1.0 - CLIP)
    dp[np.arange(n), y] = np.where(inside, -1.0 / (clipped * n), 0.0)
    return loss, dp


LOSSES = {
    "binary_ce": binary_cross_entropy,
    "sparse_categorical_ce": sparse_categorical_cross_entropy,
}


def get_loss(name: str):
    if name not in LOSSES:
        raise EraclassError(f"unknown loss {name!r}; valid: {sorted(LOSSES)}")
    return LOSSES[name]
