"""Dense/dropout/embedding layers, activations, losses, optimizers."""

import math

import numpy as np
import pytest
from numpy.random import Generator, PCG64

from eraclass.errors import EraclassError
from eraclass.nn.layers import Dense, Dropout, Embedding, relu, sigmoid, softmax
from eraclass.nn.losses import binary_cross_entropy, sparse_categorical_cross_entropy
from eraclass.nn.optim import Adam, RMSProp


class TestActivations:
    def test_relu_values(self):
        assert relu(np.array([-2.0])).item() == 0.0
        assert relu(np.array([3.0])).item() == 3.0

    def test_sigmoid_zero(self):
        assert sigmoid(np.array([0.0])).item() == 0.5

    def test_sigmoid_extreme_inputs_finite(self):
        out = sigmoid(np.array([-1e4, 1e4]))
        assert np.isfinite(out).all()

    def test_softmax_symmetry(self):
        out = softmax(np.array([[7.0, 7.0, 7.0]]))
        np.testing.assert_allclose(out, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)

    def test_softmax_rows_sum_to_one(self):
        rng = Generator(PCG64(0))
        x = rng.standard_normal((50, 7)) * 10
        out = softmax(x)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-9)
        assert (out > 0).all() and (out < 1).all()

    def test_softmax_stable_for_huge_logits(self):
        out = softmax(np.array([[1e9, 0.0, -1e9]]))
        assert np.isfinite(out).all()


class TestDense:
    def _built(self, d_in, units, activation="identity", seed=0):
        layer = Dense(units, activation)
        layer.build((d_in,), Generator(PCG64(seed)))
        return layer

    def test_identity_weights_pass_through(self):
        layer = self._built(3, 3)
        layer.params["W"][...] = np.eye(3)
        layer.params["b"][...] = 0.0
        x = np.array([[1.0, -2.0, 0.5]])
        y, _ = layer.forward(x)
        np.testing.assert_array_equal(y, x)

    def test_zero_input_gives_activated_bias(self):
        layer = self._built(4, 2, activation="sigmoid")
        layer.params["b"][...] = [0.3, -0.7]
        y, _ = layer.forward(np.zeros((3, 4)))
        expected = 1 / (1 + np.exp(-np.array([0.3, -0.7])))
        np.testing.assert_allclose(y, np.tile(expected, (3, 1)), atol=1e-15)

    def test_random_case_matches_hand_multiply(self):
        layer = self._built(3, 4)
        rng = Generator(PCG64(9))
        x = rng.standard_normal((2, 3))
        W, b = layer.params["W"], layer.params["b"]
        y, _ = layer.forward(x)
        # explicit loop arithmetic as the independent oracle
        for i in range(2):
            for j in range(4):
                expected = b[j]
                for k in range(3):
                    expected += x[i, k] * W[k, j]
                assert abs(y[i, j] - expected) < 1e-12

    def test_shape_mismatch_fatal(self):
        layer = self._built(3, 2)
        with pytest.raises(EraclassError):
            layer.forward(np.zeros((2, 5)))

    def test_glorot_bound(self):
        layer = self._built(100, 50, seed=3)
        bound = math.sqrt(6.0 / 150)
        W = layer.params["W"]
        assert (np.abs(W) <= bound).all()
        assert np.abs(W).max() > 0.8 * bound  # actually spans the range


class TestDropout:
    def _built(self, rate, seed=0):
        layer = Dropout(rate)
        layer.build((10,), Generator(PCG64(seed)))
        return layer

    def test_rate_zero_identity(self):
        layer = self._built(0.0)
        x = np.ones((4, 10))
        y, _ = layer.forward(x, training=True)
        np.testing.assert_array_equal(y, x)

    def test_inference_identity(self):
        layer = self._built(0.7)
        x = np.ones((4, 10))
        y, _ = layer.forward(x, training=False)
        np.testing.assert_array_equal(y, x)

    def test_monte_carlo_zero_fraction(self):
        layer = Dropout(0.7)
        layer.build((100_000,), Generator(PCG64(1)))
        y, _ = layer.forward(np.ones((1, 100_000)), training=True)
        zero_fraction = float((y == 0).mean())
        assert abs(zero_fraction - 0.7) < 0.01

    def test_survivors_scaled(self):
        layer = self._built(0.5, seed=2)
        y, _ = layer.forward(np.ones((1, 10)), training=True)
        kept = y[y != 0]
        np.testing.assert_allclose(kept, 2.0)

    def test_invalid_rate(self):
        with pytest.raises(EraclassError):
            Dropout(1.0)


class TestEmbedding:
    def test_lookup_and_mask(self):
        layer = Embedding(5, 3)
        layer.build((4,), Generator(PCG64(0)))
        idx = np.array([[2, 4, 0, 0]])
        y, mask = layer.forward(idx)
        np.testing.assert_array_equal(y[0, 0], layer.params["table"][2])
        assert mask.tolist() == [[True, True, False, False]]

    def test_out_of_range_fatal(self):
        layer = Embedding(5, 3)
        layer.build((2,), Generator(PCG64(0)))
        with pytest.raises(EraclassError):
            layer.forward(np.array([[1, 7]]))


class TestLosses:
    def test_perfect_prediction_near_zero(self):
        pred = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        loss, _ = sparse_categorical_cross_entropy(pred, np.array([0, 1]))
        assert loss <= 1e-10
        loss_b, _ = binary_cross_entropy(np.array([1.0, 0.0]), np.array([1, 0]))
        assert loss_b <= 1e-10

    def test_binary_half_is_ln2(self):
        loss, _ = binary_cross_entropy(np.array([0.5, 0.5]), np.array([1, 0]))
        assert abs(loss - math.log(2)) < 1e-12

    def test_three_class_fixture_matches_hand_value(self):
        pred = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1]])
        loss, grad = sparse_categorical_cross_entropy(pred, np.array([0, 1]))
        hand = -(math.log(0.7) + math.log(0.8)) / 2
        assert abs(loss - hand) < 1e-12
        assert abs(grad[0, 0] - (-1 / (0.7 * 2))) < 1e-12
        assert grad[0, 1] == 0.0

    def test_target_out_of_range_fatal(self):
        with pytest.raises(EraclassError):
            sparse_categorical_cross_entropy(np.ones((2, 3)) / 3, np.array([0, 3]))

    def test_clip_guards_log_of_zero(self):
        loss, grad = sparse_categorical_cross_entropy(
            np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1, 0])
        )
        assert np.isfinite(loss)
        assert np.isfinite(grad).all()


class TestOptimizers:
    def test_zero_gradient_no_change(self):
        for opt in (RMSProp(), Adam()):
            params = [{"W": np.array([1.0, 2.0])}]
            grads = [{"W": np.zeros(2)}]
            opt.step(params, grads)
            np.testing.assert_array_equal(params[0]["W"], [1.0, 2.0])

    def test_rmsprop_single_step_formula(self):
        opt = RMSProp(learning_rate=0.1, rho=0.9, epsilon=1e-7)
        params = [{"w": np.array([1.0])}]
        grads = [{"w": np.array([1.0])}]
        opt.step(params, grads)
        v = 0.1  # 0.9*0 + 0.1*1^2
        expected = 1.0 - 0.1 * 1.0 / (math.sqrt(v) + 1e-7)
        assert abs(params[0]["w"].item() - expected) < 1e-15

    def test_rmsprop_second_step_accumulates(self):
        opt = RMSProp(learning_rate=0.1, rho=0.9, epsilon=1e-7)
        params = [{"w": np.array([1.0])}]
        opt.step(params, [{"w": np.array([1.0])}])
        after_first = params[0]["w"].item()
        opt.step(params, [{"w": np.array([1.0])}])
        v2 = 0.9 * 0.1 + 0.1  # rho*v1 + (1-rho)*g^2
        expected = after_first - 0.1 / (math.sqrt(v2) + 1e-7)
        assert abs(params[0]["w"].item() - expected) < 1e-15

    def test_adam_first_step_magnitude_is_lr(self):
        opt = Adam(learning_rate=1e-3)
        params = [{"w": np.array([5.0])}]
        opt.step(params, [{"w": np.array([1.0])}])
        # bias correction makes m-hat = 1, v-hat = 1 on step one
        assert abs((5.0 - params[0]["w"].item()) - 1e-3 / (1.0 + 1e-7)) < 1e-12

    def test_in_place_updates_preserve_references(self):
        w = np.array([1.0, 1.0])
        params = [{"w": w}]
        RMSProp(learning_rate=0.1).step(params, [{"w": np.ones(2)}])
        assert params[0]["w"] is w  # mutated, not replaced
