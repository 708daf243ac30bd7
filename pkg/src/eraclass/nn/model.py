"""Model assembly, the training loop, and checkpoint serialization.

Training runs at most ``epochs`` passes, evaluates validation accuracy
after every epoch, snapshots the best weights seen, and restores that
snapshot at the end.  With ``patience`` set, training stops early after
that many epochs without improvement.  All randomness (init, dropout,
shuffling) derives from one seed through spawned PCG64 streams, making
weight trajectories bitwise reproducible on a platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Generator, PCG64, SeedSequence

from ..errors import ConfigError, EraclassError, NumericError
from .layers import Dense, Dropout, Embedding, Layer
from .losses import get_loss
from .optim import OptimizerSpec
from .recurrent import GRU, LSTM, Bidirectional

CHECKPOINT_VERSION = 1


@dataclass
class ModelSpec:
    """Architecture + training hyperparameters for one experiment."""

    layers: list[dict]
    loss: str  # "binary_ce" | "sparse_categorical_ce"
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    batch_size: int = 512
    epochs: int = 10
    seed: int = 0


def build_layer(spec: dict) -> Layer:
    """Instantiate a layer from its serialized description."""
    kind = spec.get("type")
    if kind == "dense":
        return Dense(spec["units"], spec.get("activation", "identity"))
    if kind == "dropout":
        return Dropout(spec["rate"])
    if kind == "embedding":
        return Embedding(spec["vocab_rows"], spec["dim"])
    if kind == "gru":
        return GRU(spec["units"], spec.get("return_sequences", False))
    if kind == "lstm":
        return LSTM(spec["units"], spec.get("return_sequences", False))
    if kind == "bidirectional":
        return Bidirectional(spec["cell"], spec["units"], spec.get("return_sequences", False))
    if kind in ("conv1d", "global_max_pool"):
        from ..baselines import build_baseline_layer

        return build_baseline_layer(spec)
    raise ConfigError(f"unknown layer type {kind!r}")


class Sequential:
    """An ordered layer stack threading (output, mask) between layers."""

    def __init__(self, layers: list[Layer]):
        self.layers = layers
        self.built = False

    def build(self, input_shape: tuple[int, ...], seed: int) -> "Sequential":
        streams = SeedSequence([seed, 0x6C6179]).spawn(len(self.layers))
        shape = input_shape
        for layer, stream in zip(self.layers, streams):
            shape = layer.build(shape, Generator(PCG64(stream)))
        self.output_shape = shape
        self.built = True
        return self

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        out, mask = x, None
        for layer in self.layers:
            out, mask = layer.forward(out, mask=mask, training=training)
        return out

    def backward(self, dpred: np.ndarray) -> None:
        grad = dpred
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
            if grad is None:  # reached an embedding (integer inputs)
                break

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def parameters(self) -> list[dict[str, np.ndarray]]:
        return [layer.params for layer in self.layers]

    def gradients(self) -> list[dict[str, np.ndarray]]:
        return [layer.grads for layer in self.layers]

    def get_weights(self) -> list[dict[str, np.ndarray]]:
        return [{k: v.copy() for k, v in layer.params.items()} for layer in self.layers]

    def set_weights(self, weights: list[dict[str, np.ndarray]]) -> None:
        if len(weights) != len(self.layers):
            raise EraclassError("weight list length does not match layer count")
        for layer, w in zip(self.layers, weights):
            for k, arr in w.items():
                layer.params[k][...] = arr

    def layer_specs(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]


def build_model(layer_specs: list[dict], input_shape: tuple[int, ...], seed: int) -> Sequential:
    return Sequential([build_layer(s) for s in layer_specs]).build(input_shape, seed)


def predict_labels(pred: np.ndarray, loss: str) -> np.ndarray:
    """Probabilities -> class indices (0.5 threshold for sigmoid heads)."""
    if loss == "binary_ce":
        return (pred.reshape(-1) >= 0.5).astype(np.int64)
    return pred.argmax(axis=1).astype(np.int64)


def _accuracy(model: Sequential, x: np.ndarray, y: np.ndarray, loss: str) -> float:
    pred = model.forward(x, training=False)
    return float(np.mean(predict_labels(pred, loss) == y))


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val_accuracy: float = 0.0


def train_model(
    model: Sequential,
    loss: str,
    optimizer,
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    epochs: int,
    batch_size: int,
    seed: int,
    patience: int | None = None,
) -> TrainHistory:
    """Minibatch training with best-validation-accuracy model selection.

    Returns the per-epoch history; the model is left holding the best
    snapshot.  ``epochs=0`` keeps the initial weights.  A non-finite
    loss aborts with a NumericError naming the epoch and batch.
    """
    loss_fn = get_loss(loss)
    shuffle_rng = Generator(PCG64(SeedSequence([seed, 0x736866])))
    history = TrainHistory()
    best_weights = model.get_weights()
    best_val = -np.inf
    since_best = 0

    for epoch in range(epochs):
        order = shuffle_rng.permutation(len(x_train))
        batch_losses = []
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            pred = model.forward(x_train[idx], training=True)
            batch_loss, dpred = loss_fn(pred, y_train[idx])
            if not np.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite loss {batch_loss} at epoch {epoch + 1}, "
                    f"batch {start // batch_size + 1}"
                )
            model.zero_grads()
            model.backward(dpred)
            optimizer.step(model.parameters(), model.gradients())
            batch_losses.append(batch_loss)

        val_acc = _accuracy(model, x_val, y_val, loss)
        val_loss, _ = loss_fn(model.forward(x_val, training=False), y_val)
        train_acc = _accuracy(model, x_train, y_train, loss)
        history.epochs.append(
            {
                "epoch": epoch + 1,
                "train_loss": float(np.mean(batch_losses)),
                "train_accuracy": train_acc,
                "val_loss": val_loss,
                "val_accuracy": val_acc,
            }
        )
        if val_acc > best_val:
            best_val = val_acc
            best_weights = model.get_weights()
            history.best_epoch = epoch + 1
            history.best_val_accuracy = val_acc
            since_best = 0
        else:
            since_best += 1
            if patience is not None and since_best >= patience:
                break

    model.set_weights(best_weights)
    return history


def _output_head(n_classes: int) -> tuple[dict, str]:
    if n_classes < 2:
        raise ConfigError("need at least 2 classes")
    if n_classes == 2:
        return {"type": "dense", "units": 1, "activation": "sigmoid"}, "binary_ce"
    return {"type": "dense", "units": n_classes, "activation": "softmax"}, "sparse_categorical_ce"


def ann_layer_specs(
    n_classes: int,
    dense_units: int = 32,
    dense_blocks: int = 1,
    dropout: float = 0.7,
) -> tuple[list[dict], str]:
    """Dense(ReLU)+Dropout blocks followed by a sigmoid/softmax head."""
    layers: list[dict] = []
    for _ in range(dense_blocks):
        layers.append({"type": "dense", "units": dense_units, "activation": "relu"})
        layers.append({"type": "dropout", "rate": dropout})
    head, loss = _output_head(n_classes)
    layers.append(head)
    return layers, loss


def rnn_layer_specs(
    n_classes: int,
    vocab_rows: int,
    embedding_dim: int = 64,
    cell: str = "bigru",
    recurrent_units: int = 32,
    recurrent_layers: int = 2,
    dropout: float = 0.7,
) -> tuple[list[dict], str]:
    """Embedding -> stacked recurrence -> dropout -> output head.

    All recurrent layers except the last return full sequences so they
    can stack; ``cell`` is one of lstm, gru, bigru.
    """
    if recurrent_layers < 1:
        raise ConfigError("need at least one recurrent layer")
    layers: list[dict] = [
        {"type": "embedding", "vocab_rows": vocab_rows, "dim": embedding_dim}
    ]
    for depth in range(recurrent_layers):
        return_sequences = depth < recurrent_layers - 1
        if cell == "bigru":
            layers.append(
                {
                    "type": "bidirectional",
                    "cell": "gru",
                    "units": recurrent_units,
                    "return_sequences": return_sequences,
                }
            )
        elif cell in ("gru", "lstm"):
            layers.append(
                {"type": cell, "units": recurrent_units, "return_sequences": return_sequences}
            )
        else:
            raise ConfigError(f"unknown recurrent cell {cell!r}")
    layers.append({"type": "dropout", "rate": dropout})
    head, loss = _output_head(n_classes)
    layers.append(head)
    return layers, loss


def _weights_to_jsonable(weights: list[dict[str, np.ndarray]]) -> list[dict]:
    return [{k: v.tolist() for k, v in w.items()} for w in weights]


def _weights_from_jsonable(raw: list[dict]) -> list[dict[str, np.ndarray]]:
    return [{k: np.asarray(v, dtype=np.float64) for k, v in w.items()} for w in raw]


def save_checkpoint(
    path: str | Path,
    model: Sequential,
    loss: str,
    input_shape: tuple[int, ...],
    meta: dict | None = None,
) -> None:
    """Self-describing JSON checkpoint: layer specs, shapes, weights.

    Python's float repr round-trips binary64 exactly, so reloading
    reproduces weights bit-for-bit.
    """
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "loss": loss,
        "input_shape": list(input_shape),
        "layer_specs": model.layer_specs(),
        "weights": _weights_to_jsonable(model.get_weights()),
        "meta": meta or {},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[Sequential, str, dict]:
    raw = json.loads(Path(path).read_text("utf-8"))
    version = raw.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"unsupported checkpoint version {version!r}")
    model = build_model(raw["layer_specs"], tuple(raw["input_shape"]), seed=0)
    model.set_weights(_weights_from_jsonable(raw["weights"]))
    return model, raw["loss"], raw.get("meta", {})
