"""Analytic gradients vs central finite differences for every layer type.

The numerical side is an independent oracle: it only calls forward()
and differentiates a fixed random projection of the output with
h = 1e-5.  Maximum relative error must stay below 1e-4 on small random
configurations of each layer.
"""

import numpy as np
import pytest
from numpy.random import Generator, PCG64

from eraclass.baselines import Conv1D, GlobalMaxPool1D
from eraclass.nn.layers import Dense, Embedding
from eraclass.nn.recurrent import GRU, LSTM, Bidirectional

H = 1e-5
TOL = 1e-4
N_CONFIGS = 20


def max_relative_error(layer, x, mask=None, seed=0):
    """Sweep every parameter and input entry with central differences."""
    rng = np.random.default_rng(seed)
    y0, _ = layer.forward(x, mask=mask, training=False)
    projection = rng.standard_normal(y0.shape)

    def scalar_loss():
        y, _ = layer.forward(x, mask=mask, training=False)
        return float((y * projection).sum())

    layer.forward(x, mask=mask, training=False)
    layer.zero_grads()
    dx = layer.backward(projection)

    worst = 0.0

    def compare(analytic, array):
        nonlocal worst
        it = np.nditer(array, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            original = array[idx]
            array[idx] = original + H
            f_plus = scalar_loss()
            array[idx] = original - H
            f_minus = scalar_loss()
            array[idx] = original
            numeric = (f_plus - f_minus) / (2 * H)
            denom = max(abs(analytic[idx]), abs(numeric), 1.0)
            worst = max(worst, abs(analytic[idx] - numeric) / denom)

    grads = dict(layer.grads)
    params = dict(layer.params)
    for name in params:
        compare(grads[name], params[name])
    if dx is not None and np.issubdtype(x.dtype, np.floating):
        compare(dx, x)
    return worst


def _dims(rng, low=1, high=4):
    return int(rng.integers(low, high + 1))


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_dense_gradients(seed):
    rng = Generator(PCG64(100 + seed))
    d_in, units, batch = _dims(rng, 1, 5), _dims(rng, 1, 5), _dims(rng, 1, 3)
    activation = ("identity", "sigmoid", "tanh", "softmax", "relu")[seed % 5]
    layer = Dense(units, activation)
    layer.build((d_in,), Generator(PCG64(200 + seed)))
    x = rng.standard_normal((batch, d_in))
    assert max_relative_error(layer, x, seed=seed) < TOL


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_embedding_gradients(seed):
    rng = Generator(PCG64(300 + seed))
    rows, dim, batch, timesteps = _dims(rng, 3, 6), _dims(rng, 1, 4), _dims(rng, 1, 3), _dims(rng, 1, 5)
    layer = Embedding(rows, dim)
    layer.build((timesteps,), Generator(PCG64(400 + seed)))
    x = rng.integers(0, rows, size=(batch, timesteps))
    assert max_relative_error(layer, x, seed=seed) < TOL


def _random_mask(rng, batch, timesteps):
    # post-padding style: a random number of trailing pads per row
    mask = np.ones((batch, timesteps), dtype=bool)
    for b in range(batch):
        keep = int(rng.integers(0, timesteps + 1))
        mask[b, keep:] = False
    return mask


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_gru_gradients(seed):
    rng = Generator(PCG64(500 + seed))
    batch, timesteps, emb, hidden = _dims(rng, 1, 3), _dims(rng, 1, 4), _dims(rng, 1, 3), _dims(rng, 1, 3)
    layer = GRU(hidden, return_sequences=bool(seed % 2))
    layer.build((timesteps, emb), Generator(PCG64(600 + seed)))
    x = rng.standard_normal((batch, timesteps, emb))
    mask = _random_mask(rng, batch, timesteps)
    assert max_relative_error(layer, x, mask=mask, seed=seed) < TOL


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_lstm_gradients(seed):
    rng = Generator(PCG64(700 + seed))
    batch, timesteps, emb, hidden = _dims(rng, 1, 3), _dims(rng, 1, 4), _dims(rng, 1, 3), _dims(rng, 1, 3)
    layer = LSTM(hidden, return_sequences=bool(seed % 2))
    layer.build((timesteps, emb), Generator(PCG64(800 + seed)))
    x = rng.standard_normal((batch, timesteps, emb))
    mask = _random_mask(rng, batch, timesteps)
    assert max_relative_error(layer, x, mask=mask, seed=seed) < TOL


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_bigru_gradients(seed):
    rng = Generator(PCG64(900 + seed))
    batch, timesteps, emb, hidden = _dims(rng, 1, 3), _dims(rng, 1, 4), _dims(rng, 1, 3), _dims(rng, 1, 2)
    layer = Bidirectional("gru", hidden, return_sequences=bool(seed % 2))
    layer.build((timesteps, emb), Generator(PCG64(1000 + seed)))
    x = rng.standard_normal((batch, timesteps, emb))
    mask = _random_mask(rng, batch, timesteps)
    assert max_relative_error(layer, x, mask=mask, seed=seed) < TOL


@pytest.mark.parametrize("seed", range(N_CONFIGS))
def test_conv1d_gradients(seed):
    rng = Generator(PCG64(1100 + seed))
    emb, filters, batch = _dims(rng, 1, 3), _dims(rng, 1, 3), _dims(rng, 1, 3)
    kernel = _dims(rng, 1, 3)
    timesteps = kernel + int(rng.integers(0, 3))
    layer = Conv1D(filters, kernel)
    layer.build((timesteps, emb), Generator(PCG64(1200 + seed)))
    x = rng.standard_normal((batch, timesteps, emb))
    assert max_relative_error(layer, x, seed=seed) < TOL


@pytest.mark.parametrize("seed", range(5))
def test_global_max_pool_gradients(seed):
    rng = Generator(PCG64(1300 + seed))
    layer = GlobalMaxPool1D()
    layer.build((4, 3), Generator(PCG64(0)))
    x = rng.standard_normal((2, 4, 3))
    assert max_relative_error(layer, x, seed=seed) < TOL
