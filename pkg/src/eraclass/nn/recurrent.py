"""Mask-aware GRU, LSTM, and bidirectional recurrences.

Gate equations (x_t is the timestep input, h_{t-1} the previous hidden
state, sigma the logistic function):

GRU (update gate z, reset gate r, candidate c; gates packed [z|r|c]):
    z_t = sigma(x_t W_z + h_{t-1} U_z + b_z)
    r_t = sigma(x_t W_r + h_{t-1} U_r + b_r)
    c_t = tanh (x_t W_c + (r_t * h_{t-1}) U_c + b_c)
    h_t = (1 - z_t) * h_{t-1} + z_t * c_t

LSTM (input i, forget f, candidate g, output o; packed [i|f|g|o]):
    i_t = sigma(x_t W_i + h_{t-1} U_i + b_i)        (f_t, o_t alike)
    g_t = tanh (x_t W_g + h_{t-1} U_g + b_g)
    cell_t = f_t * cell_{t-1} + i_t * g_t
    h_t = o_t * tanh(cell_t)

Padding steps (mask false) carry the previous state through unchanged,
so the final state is the state at the last non-pad step and an all-pad
sequence yields a zero state.  The bidirectional wrapper runs a second
cell over the time-reversed sequence and concatenates final states (or
per-step outputs when returning sequences).
"""

from __future__ import annotations

import numpy as np

from ..errors import EraclassError
from .layers import Layer, glorot_uniform, sigmoid


def _check_seq_input(x: np.ndarray):
    if x.ndim != 3:
        raise EraclassError(f"recurrent layers expect (batch, T, features), got {x.shape}")
    if x.shape[1] == 0:
        raise EraclassError("recurrent layers require at least one timestep")


def _as_mask(mask, batch: int, timesteps: int) -> np.ndarray:
    if mask is None:
        return np.ones((batch, timesteps), dtype=np.float64)
    return mask.astype(np.float64)


class GRU(Layer):
    def __init__(self, units: int, return_sequences: bool = False):
        super().__init__()
        self.units = units
        self.return_sequences = return_sequences

    def build(self, input_shape, rng):
        if len(input_shape) != 2:
            raise EraclassError(f"GRU expects (T, features) input, got {input_shape}")
        t, d = input_shape
        h = self.units
        self.params = {
            "W": glorot_uniform(rng, (d, 3 * h), d, h),
            "U": glorot_uniform(rng, (h, 3 * h), h, h),
            "b": np.zeros(3 * h),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.built = True
        return (t, h) if self.return_sequences else (h,)

    def forward(self, x, mask=None, training=False):
        _check_seq_input(x)
        batch, timesteps, _ = x.shape
        h = self.units
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        m = _as_mask(mask, batch, timesteps)

        hs = np.zeros((batch, timesteps + 1, h))
        zs = np.zeros((batch, timesteps, h))
        rs = np.zeros((batch, timesteps, h))
        cs = np.zeros((batch, timesteps, h))
        for t in range(timesteps):
            h_prev = hs[:, t]
            a_zr = x[:, t] @ W[:, : 2 * h] + h_prev @ U[:, : 2 * h] + b[: 2 * h]
            z = sigmoid(a_zr[:, :h])
            r = sigmoid(a_zr[:, h:])
            a_c = x[:, t] @ W[:, 2 * h :] + (r * h_prev) @ U[:, 2 * h :] + b[2 * h :]
            c = np.tanh(a_c)
            h_new = (1.0 - z) * h_prev + z * c
            mt = m[:, t : t + 1]
            hs[:, t + 1] = mt * h_new + (1.0 - mt) * h_prev
            zs[:, t], rs[:, t], cs[:, t] = z, r, c

        self._cache = (x, m, hs, zs, rs, cs)
        if self.return_sequences:
            return hs[:, 1:], (mask if mask is not None else None)
        return hs[:, -1], None

    def backward(self, dy):
        x, m, hs, zs, rs, cs = self._cache
        batch, timesteps, _ = x.shape
        h = self.units
        W, U = self.params["W"], self.params["U"]
        dW, dU, db = self.grads["W"], self.grads["U"], self.grads["b"]

        dx = np.zeros_like(x)
        dh_carry = np.zeros((batch, h))
        for t in range(timesteps - 1, -1, -1):
            dh = dh_carry.copy()
            if self.return_sequences:
                dh += dy[:, t]
            elif t == timesteps - 1:
                dh += dy
            mt = m[:, t : t + 1]
            h_prev = hs[:, t]
            z, r, c = zs[:, t], rs[:, t], cs[:, t]

            dh_new = mt * dh
            dh_prev = (1.0 - mt) * dh
            dz = dh_new * (c - h_prev)
            dc = dh_new * z
            dh_prev = dh_prev + dh_new * (1.0 - z)

            da_c = dc * (1.0 - c * c)
            dW[:, 2 * h :] += x[:, t].T @ da_c
            dU[:, 2 * h :] += (r * h_prev).T @ da_c
            db[2 * h :] += da_c.sum(axis=0)
            d_rh = da_c @ U[:, 2 * h :].T
            dh_prev = dh_prev + d_rh * r
            dr = d_rh * h_prev
            dx[:, t] = da_c @ W[:, 2 * h :].T

            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            da_zr = np.concatenate([da_z, da_r], axis=1)
            dW[:, : 2 * h] += x[:, t].T @ da_zr
            dU[:, : 2 * h] += h_prev.T @ da_zr
            db[: 2 * h] += da_zr.sum(axis=0)
            dx[:, t] += da_zr @ W[:, : 2 * h].T
            dh_prev = dh_prev + da_zr @ U[:, : 2 * h].T

            dh_carry = dh_prev
        return dx

    def spec(self):
        return {"type": "gru", "units": self.units, "return_sequences": self.return_sequences}


class LSTM(Layer):
    def __init__(self, units: int, return_sequences: bool = False):
        super().__init__()
        self.units = units
        self.return_sequences = return_sequences

    def build(self, input_shape, rng):
        if len(input_shape) != 2:
            raise EraclassError(f"LSTM expects (T, features) input, got {input_shape}")
        t, d = input_shape
        h = self.units
        self.params = {
            "W": glorot_uniform(rng, (d, 4 * h), d, h),
            "U": glorot_uniform(rng, (h, 4 * h), h, h),
            "b": np.zeros(4 * h),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.built = True
        return (t, h) if self.return_sequences else (h,)

    def forward(self, x, mask=None, training=False):
        _check_seq_input(x)
        batch, timesteps, _ = x.shape
        h = self.units
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        m = _as_mask(mask, batch, timesteps)

        hs = np.zeros((batch, timesteps + 1, h))
        cells = np.zeros((batch, timesteps + 1, h))
        gates = np.zeros((batch, timesteps, 4 * h))  # post-activation i|f|g|o
        tanh_cnew = np.zeros((batch, timesteps, h))
        for t in range(timesteps):
            h_prev, c_prev = hs[:, t], cells[:, t]
            a = x[:, t] @ W + h_prev @ U + b
            i = sigmoid(a[:, :h])
            f = sigmoid(a[:, h : 2 * h])
            g = np.tanh(a[:, 2 * h : 3 * h])
            o = sigmoid(a[:, 3 * h :])
            c_new = f * c_prev + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            mt = m[:, t : t + 1]
            cells[:, t + 1] = mt * c_new + (1.0 - mt) * c_prev
            hs[:, t + 1] = mt * h_new + (1.0 - mt) * h_prev
            gates[:, t] = np.concatenate([i, f, g, o], axis=1)
            tanh_cnew[:, t] = tc

        self._cache = (x, m, hs, cells, gates, tanh_cnew)
        if self.return_sequences:
            return hs[:, 1:], (mask if mask is not None else None)
        return hs[:, -1], None

    def backward(self, dy):
        x, m, hs, cells, gates, tanh_cnew = self._cache
        batch, timesteps, _ = x.shape
        h = self.units
        W, U = self.params["W"], self.params["U"]
        dW, dU, db = self.grads["W"], self.grads["U"], self.grads["b"]

        dx = np.zeros_like(x)
        dh_carry = np.zeros((batch, h))
        dc_carry = np.zeros((batch, h))
        for t in range(timesteps - 1, -1, -1):
            dh = dh_carry.copy()
            if self.return_sequences:
                dh += dy[:, t]
            elif t == timesteps - 1:
                dh += dy
            mt = m[:, t : t + 1]
            h_prev, c_prev = hs[:, t], cells[:, t]
            i = gates[:, t, :h]
            f = gates[:, t, h : 2 * h]
            g = gates[:, t, 2 * h : 3 * h]
            o = gates[:, t, 3 * h :]
            tc = tanh_cnew[:, t]

            dh_new = mt * dh
            dh_prev = (1.0 - mt) * dh
            dc_new = mt * dc_carry
            dc_prev = (1.0 - mt) * dc_carry

            do = dh_new * tc
            dc_new = dc_new + dh_new * o * (1.0 - tc * tc)
            df = dc_new * c_prev
            di = dc_new * g
            dg = dc_new * i
            dc_prev = dc_prev + dc_new * f

            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dW += x[:, t].T @ da
            dU += h_prev.T @ da
            db += da.sum(axis=0)
            dx[:, t] = da @ W.T
            dh_prev = dh_prev + da @ U.T

            dh_carry = dh_prev
            dc_carry = dc_prev
        return dx

    def spec(self):
        return {"type": "lstm", "units": self.units, "return_sequences": self.return_sequences}


_CELLS = {"gru": GRU, "lstm": LSTM}


class Bidirectional(Layer):
    """Two independent cells, one over the sequence and one over its
    time reversal; outputs are concatenated on the feature axis."""

    def __init__(self, cell: str, units: int, return_sequences: bool = False):
        super().__init__()
        if cell not in _CELLS:
            raise EraclassError(f"unknown recurrent cell {cell!r}")
        self.cell = cell
        self.units = units
        self.return_sequences = return_sequences
        self.fwd = _CELLS[cell](units, return_sequences)
        self.bwd = _CELLS[cell](units, return_sequences)

    def build(self, input_shape, rng):
        out = self.fwd.build(input_shape, rng)
        self.bwd.build(input_shape, rng)
        self.built = True
        if self.return_sequences:
            return (out[0], 2 * self.units)
        return (2 * self.units,)

    @property
    def params(self):
        merged = {f"fwd_{k}": v for k, v in self.fwd.params.items()}
        merged.update({f"bwd_{k}": v for k, v in self.bwd.params.items()})
        return merged

    @params.setter
    def params(self, value):  # set by Layer.__init__ before children exist
        if value:
            raise EraclassError("Bidirectional params are owned by its child cells")

    @property
    def grads(self):
        merged = {f"fwd_{k}": v for k, v in self.fwd.grads.items()}
        merged.update({f"bwd_{k}": v for k, v in self.bwd.grads.items()})
        return merged

    @grads.setter
    def grads(self, value):
        if value:
            raise EraclassError("Bidirectional grads are owned by its child cells")

    def zero_grads(self):
        self.fwd.zero_grads()
        self.bwd.zero_grads()

    def forward(self, x, mask=None, training=False):
        y_f, _ = self.fwd.forward(x, mask, training)
        x_rev = x[:, ::-1].copy()
        mask_rev = None if mask is None else mask[:, ::-1].copy()
        y_b, _ = self.bwd.forward(x_rev, mask_rev, training)
        if self.return_sequences:
            y = np.concatenate([y_f, y_b[:, ::-1]], axis=2)
            return y, mask
        return np.concatenate([y_f, y_b], axis=1), None

    def backward(self, dy):
        h = self.units
        if self.return_sequences:
            dx_f = self.fwd.backward(dy[:, :, :h])
            dx_b = self.bwd.backward(dy[:, ::-1, h:])
        else:
            dx_f = self.fwd.backward(dy[:, :h])
            dx_b = self.bwd.backward(dy[:, h:])
        return dx_f + dx_b[:, ::-1]

    def spec(self):
        return {
            "type": "bidirectional",
            "cell": self.cell,
            "units": self.units,
            "return_sequences": self.return_sequences,
        }
