import math

import numpy as np
import pytest

from linetrace import nn_core as nn
from linetrace.nn_core.layers import Conv1d, Dense, Dropout, MaxPoolAxis0

import oracles


class TestActivationFunctions:
    def test_softsign_values(self):
        assert nn.softsign(np.array([0.0]))[0] == 0.0
        assert nn.softsign(np.array([1.0]))[0] == 0.5
        assert nn.softsign(np.array([-3.0]))[0] == -0.75

    def test_relu_values(self):
        x = np.array([2.0, -2.0, 0.0])
        assert np.array_equal(nn.relu(x), [2.0, 0.0, 0.0])

    def test_relu_gradient_zero_at_zero(self):
        layer = nn.Activation("relu")
        out = layer.forward(np.array([[0.0, 1.0, -1.0]]), train=True)
        dx = layer.backward(np.ones((1, 3)))
        assert np.array_equal(out, [[0.0, 1.0, 0.0]])
        assert np.array_equal(dx, [[0.0, 1.0, 0.0]])


class TestDense:
    def test_identity_weights(self):
        layer = Dense(3, 3)
        layer.params[0][...] = np.eye(3)
        layer.params[1][...] = 0.0
        x = np.array([[1.0, 2.0, 3.0]])
        assert np.allclose(layer.forward(x, train=False), x)

    def test_hand_computed_2_to_3(self):
        layer = Dense(2, 3)
        layer.params[0][...] = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
        layer.params[1][...] = np.array([1.0, 1.0, 1.0])
        out = layer.forward(np.array([[1.0, 2.0]]), train=False)
        assert np.array_equal(out, [[2.0, 3.0, 4.0]])

    def test_table_row_shape_and_count(self):
        layer = Dense(1022, 207)
        out = layer.forward(np.zeros((102, 1022)), train=False)
        assert out.shape == (102, 207)
        assert layer.param_count == 1022 * 207 + 207 == 211_761

    def test_shape_error_names_both_shapes(self):
        layer = Dense(8, 4)
        with pytest.raises(ValueError, match=r"\(3, 5\).*\(8, 4\)"):
            layer.forward(np.zeros((3, 5)), train=False)


class TestConv1d:
    def test_channels_first_table_row(self):
        layer = Conv1d(1, 307, 3, "channels_first")
        out = layer.forward(np.zeros((1, 1024)), train=False)
        assert out.shape == (307, 1022)
        assert layer.param_count == 3 * 1 * 307 + 307 == 1228

    def test_channels_last_table_row(self):
        layer = Conv1d(207, 100, 1, "channels_last")
        out = layer.forward(np.zeros((102, 207)), train=False)
        assert out.shape == (102, 100)
        assert layer.param_count == 207 * 100 + 100 == 20_800

    def test_k1_conv_equals_dense_on_feature_axis(self):
        rng = np.random.default_rng(0)
        conv = Conv1d(5, 4, 1, "channels_last", rng=rng)
        dense = Dense(5, 4)
        dense.params[0][...] = conv.params[0][:, :, 0].T
        dense.params[1][...] = conv.params[1]
        x = np.random.default_rng(1).normal(size=(7, 5))
        assert np.allclose(conv.forward(x, train=False), dense.forward(x, train=False))

    def test_channels_first_hand_example(self):
        # 1 channel, 1 filter, k=2: sliding dot product
        layer = Conv1d(1, 1, 2, "channels_first")
        layer.params[0][...] = np.array([[[2.0, -1.0]]])
        layer.params[1][...] = np.array([0.5])
        out = layer.forward(np.array([[1.0, 2.0, 3.0, 4.0]]), train=False)
        # 2*x[t] - x[t+1] + 0.5
        assert np.allclose(out, [[0.5, 1.5, 2.5]])

    def test_kernel_larger_than_extent_rejected(self):
        layer = Conv1d(1, 4, 5, "channels_first")
        with pytest.raises(ValueError, match="kernel"):
            layer.forward(np.zeros((1, 3)), train=False)


class TestMaxPool:
    def test_table_row(self):
        layer = MaxPoolAxis0(3)
        assert layer.forward(np.zeros((307, 1022)), train=False).shape == (102, 1022)

    def test_ascending_groups(self):
        layer = MaxPoolAxis0(2)
        out = layer.forward(np.arange(12.0).reshape(6, 2), train=False)
        assert np.array_equal(out, [[2.0, 3.0], [6.0, 7.0], [10.0, 11.0]])

    def test_pool_one_is_identity(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, 4))
        assert np.array_equal(MaxPoolAxis0(1).forward(x, train=False), x)

    def test_remainder_rows_dropped_and_get_zero_grad(self):
        layer = MaxPoolAxis0(3)
        x = np.arange(14.0).reshape(7, 2)
        out = layer.forward(x, train=True)
        assert out.shape == (2, 2)
        dx = layer.backward(np.ones((2, 2)))
        assert dx.shape == (7, 2)
        assert not dx[6].any()


class TestBatchNorm:
    def test_train_mode_standardizes(self):
        layer = nn.BatchNorm(4)
        x = np.random.default_rng(0).normal(3.0, 2.0, size=(64, 4))
        out = layer.forward(x, train=True)
        assert np.allclose(out.mean(axis=0), 0.0, atol=1e-10)
        assert np.allclose(out.var(axis=0), 1.0, atol=2e-3)  # eps-limited

    def test_standardized_batch_passes_through(self):
        layer = nn.BatchNorm(3, eps=1e-3)
        rng = np.random.default_rng(1)
        x = rng.normal(size=(256, 3))
        x = (x - x.mean(axis=0)) / x.std(axis=0)
        out = layer.forward(x, train=True)
        assert np.allclose(out, x, atol=2e-3)

    def test_param_count_is_4_per_feature(self):
        assert nn.BatchNorm(200).param_count == 800
        assert nn.BatchNorm(207).param_count == 828

    def test_eval_before_train_warns(self):
        layer = nn.BatchNorm(2)
        with pytest.warns(UserWarning, match="init stats"):
            layer.forward(np.ones((4, 2)), train=False)

    def test_eval_uses_running_stats(self):
        layer = nn.BatchNorm(2, momentum=0.0)  # running stats = last batch
        rng = np.random.default_rng(3)
        x = rng.normal(5.0, 3.0, size=(512, 2))
        layer.forward(x, train=True)
        y = layer.forward(x, train=False)
        assert np.allclose(y.mean(axis=0), 0.0, atol=1e-2)


class TestDropout:
    def test_eval_is_identity(self):
        layer = Dropout(0.5)
        x = np.arange(10.0)
        assert np.array_equal(layer.forward(x, train=False), x)

    def test_rate_zero_is_identity(self):
        layer = Dropout(0.0)
        x = np.arange(10.0)
        assert np.array_equal(layer.forward(x, train=True), x)

    def test_statistics(self):
        layer = Dropout(0.2, rng=np.random.default_rng(7))
        x = np.ones(100_000)
        out = layer.forward(x, train=True)
        survivors = np.count_nonzero(out) / x.size
        assert abs(survivors - 0.8) < 0.01
        assert abs(out.mean() - 1.0) < 0.02

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            Dropout(1.0)


class TestMseLoss:
    def test_zero_on_match(self):
        p = np.ones((3, 2))
        loss, grad = nn.mse_loss(p, p)
        assert loss == 0.0
        assert not grad.any()

    def test_unit_error(self):
        loss, _ = nn.mse_loss(np.ones((4, 2)), np.zeros((4, 2)))
        assert loss == 1.0

    def test_hand_example(self):
        loss, grad = nn.mse_loss(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        assert loss == 1.0  # (1 + 1) / 2
        assert np.array_equal(grad, [[1.0, -1.0]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            nn.mse_loss(np.zeros((2, 2)), np.zeros((3, 2)))


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = [np.array([1.0, -2.0])]
        state = nn.AdamState(p)
        state.step(p, [np.zeros(2)])
        assert np.array_equal(p[0], [1.0, -2.0])

    def test_first_step_hand_formula(self):
        p = [np.array([0.0])]
        state = nn.AdamState(p, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-7)
        state.step(p, [np.array([1.0])])
        # m_hat = v_hat = 1 at t=1, so the update is -lr / (1 + eps)
        assert p[0][0] == pytest.approx(-1e-4 / (1.0 + 1e-7), abs=1e-18)
        assert p[0][0] == pytest.approx(-9.9999e-5, abs=1e-9)

    def test_three_steps_match_scalar_reimplementation(self):
        # independent scalar Adam, written from the update equations
        lr, b1, b2, eps = 1e-4, 0.9, 0.999, 1e-7
        theta, m, v = 0.3, 0.0, 0.0
        for t in range(1, 4):
            g = 1.0
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            mhat = m / (1 - b1**t)
            vhat = v / (1 - b2**t)
            theta -= lr * mhat / (math.sqrt(vhat) + eps)
        p = [np.array([0.3])]
        state = nn.AdamState(p, lr=lr, beta1=b1, beta2=b2, eps=eps)
        for _ in range(3):
            state.step(p, [np.array([1.0])])
        assert abs(p[0][0] - theta) < 1e-12

    def test_nonfinite_gradient_aborts(self):
        p = [np.array([1.0])]
        state = nn.AdamState(p)
        with pytest.raises(FloatingPointError):
            state.step(p, [np.array([np.nan])])


def small_net(specs, in_shape, seed=0):
    return nn.Network.build(specs, in_shape, seed)


class TestGradients:
    """Central finite differences vs backprop, per layer kind."""

    CASES = {
        "dense": ([nn.dense(7), nn.dense(3)], (1, 5)),
        "relu": ([nn.dense(7), nn.activation("relu"), nn.dense(3)], (1, 5)),
        "softsign": ([nn.dense(7), nn.activation("softsign"), nn.dense(3)], (1, 5)),
        "conv1d_channels_first": (
            [nn.conv1d(6, 3, "channels_first"), nn.flatten(), nn.dense(2)], (2, 9)),
        "conv1d_channels_last": (
            [nn.conv1d(6, 1, "channels_last"), nn.flatten(), nn.dense(2)], (5, 4)),
        "maxpool_axis0": ([nn.maxpool_axis0(2), nn.flatten(), nn.dense(2)], (6, 3)),
        "batchnorm": ([nn.dense(5), nn.batchnorm(), nn.dense(2)], (1, 4)),
        "dropout": ([nn.dense(8), nn.dropout(0.3), nn.dense(2)], (1, 6)),
        "flatten": ([nn.conv1d(4, 2, "channels_first"), nn.flatten(), nn.dense(2)], (2, 6)),
    }

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_layer_gradcheck(self, name):
        specs, in_shape = self.CASES[name]
        net = small_net(specs, in_shape, seed=3)
        rng = np.random.default_rng(5)
        x = rng.normal(size=(4,) + in_shape)
        target = rng.normal(size=(4,) + net.out_shape())
        err = oracles.gradcheck(net, x, target, samples_per_param=8, seed=11)
        assert err < 1e-4, f"{name}: max relative error {err}"

    def test_dense_closed_form_gradient(self):
        net = small_net([nn.dense(3)], (1, 4), seed=1)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, 1, 4))
        out = net.forward(x, train=True)
        delta = rng.normal(size=out.shape)
        grads = net.backward(2.0 * delta / delta.size * 0 + delta)  # pass delta directly
        dw_expected = np.einsum("bli,blo->io", x, delta)
        db_expected = delta.sum(axis=(0, 1))
        assert np.allclose(grads[0], dw_expected, atol=1e-12)
        assert np.allclose(grads[1], db_expected, atol=1e-12)

    def test_dropout_eval_passes_gradient_through(self):
        layer = Dropout(0.4)
        x = np.arange(6.0)
        layer.forward(x, train=False)
        dout = np.linspace(-1, 1, 6)
        assert np.array_equal(layer.backward(dout), dout)

    def test_backward_without_forward_raises(self):
        layer = Dense(3, 2)
        with pytest.raises(RuntimeError, match="without a stored forward"):
            layer.backward(np.zeros((1, 2)))
