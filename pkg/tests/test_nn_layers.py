"""Layer forward/backward checks against slow, independent oracles."""

import numpy as np
import pytest

from cogdrive.nn import (
    Conv2d,
    Dense,
    Flatten,
    GlobalAvgPool,
    SelfAttention,
    Sequential,
    ReLU,
    Tanh,
    Sigmoid,
    ScaledSigmoid,
    conv2d,
    softmax,
)


def naive_conv(x, kernels, bias, stride, padding):
    """Reference convolution: nested loops, no im2col."""
    n, c_in, h, w = x.shape
    c_out = kernels.shape[0]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    h_out = (h + 2 * padding - 3) // stride + 1
    w_out = (w + 2 * padding - 3) // stride + 1
    out = np.zeros((n, c_out, h_out, w_out))
    for b in range(n):
        for co in range(c_out):
            for i in range(h_out):
                for j in range(w_out):
                    patch = xp[b, :, i * stride:i * stride + 3,
                               j * stride:j * stride + 3]
                    out[b, co, i, j] = np.sum(patch * kernels[co]) + bias[co]
    return out


def test_conv_dirac_kernel_is_identity():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, 1, 9, 9))
    kernels = np.zeros((1, 1, 3, 3))
    kernels[0, 0, 1, 1] = 1.0
    out = conv2d(x, kernels, bias=np.zeros(1), stride=1, padding=1)
    np.testing.assert_array_equal(out, x)


@pytest.mark.parametrize("stride,padding,c_in,c_out,hw", [
    (1, 0, 1, 1, 6),
    (1, 1, 2, 3, 7),
    (2, 1, 3, 4, 8),
    (2, 0, 2, 2, 9),
])
def test_conv_matches_naive_oracle(stride, padding, c_in, c_out, hw):
    rng = np.random.default_rng(42 + stride * 10 + padding)
    x = rng.normal(size=(3, c_in, hw, hw))
    layer = Conv2d(c_in, c_out, rng, stride=stride, padding=padding)
    got = layer.forward(x)
    want = naive_conv(x, layer.kernels.value, layer.bias.value, stride,
                      padding)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


def test_conv_single_input_rank_preserved():
    rng = np.random.default_rng(0)
    layer = Conv2d(3, 5, rng, stride=2, padding=1)
    out = layer.forward(rng.normal(size=(3, 64, 64)))
    assert out.shape == (5, 32, 32)


def test_conv_channel_mismatch_reports_dimensions():
    rng = np.random.default_rng(0)
    layer = Conv2d(3, 4, rng)
    with pytest.raises(ValueError) as err:
        layer.forward(rng.normal(size=(1, 2, 8, 8)))
    msg = str(err.value)
    assert "(1, 2, 8, 8)" in msg and "4, 3, 3, 3" in msg


def test_conv_rejects_bad_stride_and_padding():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        Conv2d(1, 1, rng, stride=3)
    with pytest.raises(ValueError):
        Conv2d(1, 1, rng, padding=2)


def test_conv_backward_matches_naive_param_grads():
    # Loss = sum(out * proj); accumulate kernel grads by the same nested
    # loops the forward oracle uses.
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 2, 6, 6))
    layer = Conv2d(2, 3, rng, stride=2, padding=1)
    out = layer.forward(x)
    proj = rng.normal(size=out.shape)
    layer.backward(proj)

    stride, padding = 2, 1
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    want_k = np.zeros_like(layer.kernels.value)
    want_b = np.zeros_like(layer.bias.value)
    n, c_out, h_out, w_out = out.shape
    for b in range(n):
        for co in range(c_out):
            for i in range(h_out):
                for j in range(w_out):
                    patch = xp[b, :, i * stride:i * stride + 3,
                               j * stride:j * stride + 3]
                    want_k[co] += proj[b, co, i, j] * patch
                    want_b[co] += proj[b, co, i, j]
    np.testing.assert_allclose(layer.kernels.grad, want_k, atol=1e-10)
    np.testing.assert_allclose(layer.bias.grad, want_b, atol=1e-10)


def test_dense_forward_and_backward_oracle():
    rng = np.random.default_rng(5)
    layer = Dense(6, 4, rng)
    x = rng.normal(size=(3, 6))
    out = layer.forward(x)
    np.testing.assert_allclose(out, x @ layer.weight.value + layer.bias.value,
                               atol=1e-14)
    g = rng.normal(size=out.shape)
    dx = layer.backward(g)
    np.testing.assert_allclose(dx, g @ layer.weight.value.T, atol=1e-14)
    np.testing.assert_allclose(layer.weight.grad, x.T @ g, atol=1e-14)
    np.testing.assert_allclose(layer.bias.grad, g.sum(axis=0), atol=1e-14)


def test_dense_shape_error():
    layer = Dense(6, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        layer.forward(np.zeros((3, 5)))


def test_activations_forward_values():
    x = np.array([[-2.0, 0.0, 3.0]])
    np.testing.assert_array_equal(ReLU().forward(x), [[0.0, 0.0, 3.0]])
    np.testing.assert_allclose(Tanh().forward(x), np.tanh(x), atol=1e-15)
    np.testing.assert_allclose(Sigmoid().forward(x), 1 / (1 + np.exp(-x)),
                               atol=1e-15)
    np.testing.assert_allclose(ScaledSigmoid(5.0).forward(x),
                               5 / (1 + np.exp(-x)), atol=1e-14)


def test_sigmoid_stable_for_large_inputs():
    y = Sigmoid().forward(np.array([-1000.0, 1000.0]))
    assert np.all(np.isfinite(y))
    np.testing.assert_allclose(y, [0.0, 1.0], atol=1e-12)


def test_global_avg_pool_forward_backward():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 4, 5))
    pool = GlobalAvgPool()
    np.testing.assert_allclose(pool.forward(x), x.mean(axis=(2, 3)),
                               atol=1e-15)
    g = rng.normal(size=(2, 3))
    dx = pool.backward(g)
    assert dx.shape == x.shape
    np.testing.assert_allclose(dx, np.broadcast_to(g[:, :, None, None] / 20,
                                                   x.shape), atol=1e-15)


def test_flatten_round_trip():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(4, 3, 2, 2))
    f = Flatten()
    y = f.forward(x)
    assert y.shape == (4, 12)
    np.testing.assert_array_equal(f.backward(y), x)


def test_softmax_rows_sum_to_one_and_is_stable():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(5, 7)) * 500.0
    y = softmax(x)
    assert np.all(np.isfinite(y))
    np.testing.assert_allclose(y.sum(axis=1), np.ones(5), atol=1e-12)
    # Shift invariance: softmax(x + c) == softmax(x).
    np.testing.assert_allclose(softmax(x + 123.0), y, atol=1e-12)


def test_attention_matches_explicit_matrix_oracle():
    rng = np.random.default_rng(11)
    att = SelfAttention(f=5, d=3, rng=rng)
    x = rng.normal(size=(2, 4, 5))
    ctx = att.forward(x)

    for b in range(2):
        q = x[b] @ att.wq.value + att.bq.value
        k = x[b] @ att.wk.value + att.bk.value
        v = x[b] @ att.wv.value + att.bv.value
        scores = q @ k.T / np.sqrt(3.0)
        e = np.exp(scores - scores.max(axis=1, keepdims=True))
        w = e / e.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(att.last_weights[b], w, atol=1e-12)
        np.testing.assert_allclose(ctx[b], w @ v, atol=1e-12)
    np.testing.assert_allclose(att.last_weights.sum(axis=2),
                               np.ones((2, 4)), atol=1e-12)


def test_attention_rejects_wrong_feature_dim():
    att = SelfAttention(f=5, d=3, rng=np.random.default_rng(0))
    with pytest.raises(ValueError):
        att.forward(np.zeros((1, 4, 6)))


def test_sequential_composes_and_backpropagates():
    rng = np.random.default_rng(4)
    net = Sequential([Dense(4, 8, rng), ReLU(), Dense(8, 2, rng), Tanh()])
    x = rng.normal(size=(5, 4))
    y = net.forward(x)
    assert y.shape == (5, 2)
    dx = net.backward(np.ones_like(y))
    assert dx.shape == x.shape
    names = [n for n, _ in net.named_params()]
    assert names == ["0.weight", "0.bias", "2.weight", "2.bias"]
