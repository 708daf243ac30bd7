"""Minimal from-scratch neural framework (numpy, float64 throughout).

Layers implement explicit forward/backward passes; recurrences are
mask-aware over post-padded sequences.  Training is single-threaded and
bitwise deterministic for a fixed seed.
"""

from .layers import Dense, Dropout, Embedding, relu, sigmoid, softmax
from .recurrent import GRU, LSTM, Bidirectional
from .losses import binary_cross_entropy, sparse_categorical_cross_entropy
from .optim import Adam, RMSProp, build_optimizer, OptimizerSpec
from .model import (
    ModelSpec,
    Sequential,
    TrainHistory,
    build_layer,
    build_model,
    load_checkpoint,
    predict_labels,
    save_checkpoint,
    train_model,
)

__all__ = [
    "Adam",
    "Bidirectional",
    "Dense",
    "Dropout",
    "Embedding",
    "GRU",
    "LSTM",
    "ModelSpec",
    "OptimizerSpec",
    "RMSProp",
    "Sequential",
    "TrainHistory",
    "binary_cross_entropy",
    "build_layer",
    "build_model",
    "build_optimizer",
    "load_checkpoint",
    "predict_labels",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "sparse_categorical_cross_entropy",
    "train_model",
]
