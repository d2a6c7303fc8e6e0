"""Dense-tensor layers in numpy float64.

Every layer implements ``forward`` and ``backward`` by hand.  ``backward``
takes the gradient of the scalar loss with respect to the layer output and
returns the gradient with respect to the layer input, accumulating parameter
gradients into ``Param.grad`` along the way.  There is no autograd tape: a
layer caches whatever it needs during ``forward``.

Convolutions are fixed to 3x3 kernels with stride 1 or 2 and zero padding 0
or 1, which is all the models here use.  They are implemented with an
im2col/col2im pair so the heavy lifting is a single matrix multiply.
"""

from __future__ import annotations

import numpy as np


def as_tensor(x) -> np.ndarray:
    """Coerce to a float64 ndarray (the only dtype the engine computes in)."""
    return np.asarray(x, dtype=np.float64)


class Param:
    """A trainable tensor: value, gradient and Adam state.

    ``m``/``v`` are the first/second moment accumulators and ``t`` the step
    count used for bias correction.
    """

    __slots__ = ("value", "grad", "m", "v", "t")

    def __init__(self, value: np.ndarray):
        self.value = np.array(value, dtype=np.float64)  # owned copy
        self.grad = np.zeros_like(self.value)
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.t = 0

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


def _he_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


class Layer:
    """Base class: ``forward``/``backward`` plus parameter discovery."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return [p for _, p in self.named_params()]

    def named_params(self) -> list[tuple[str, Param]]:
        out = []
        for name in sorted(vars(self)):
            attr = getattr(self, name)
            if isinstance(attr, Param):
                out.append((name, attr))
        return out

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)


class Dense(Layer):
    """Affine map ``y = x @ W + b`` on inputs of shape (batch, n_in)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator,
                 bias: bool = True):
        self.n_in = n_in
        self.n_out = n_out
        self.weight = Param(_he_init(rng, (n_in, n_out), n_in))
        self.bias = Param(np.zeros(n_out)) if bias else None
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(
                f"Dense expected input (batch, {self.n_in}), got {x.shape}")
        self._x = x
        y = x @ self.weight.value
        if self.bias is not None:
            y = y + self.bias.value
        return y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        g = as_tensor(grad_out)
        self.weight.grad += self._x.T @ g
        if self.bias is not None:
            self.bias.grad += g.sum(axis=0)
        return g @ self.weight.value.T

    def named_params(self):
        out = [("weight", self.weight)]
        if self.bias is not None:
            out.append(("bias", self.bias))
        return out


def _im2col(xp: np.ndarray, stride: int, h_out: int, w_out: int) -> np.ndarray:
    """(N, C, Hp, Wp) padded input -> (N, C*9, h_out*w_out) patch matrix."""
    n, c = xp.shape[:2]
    cols = np.empty((n, c, 3, 3, h_out, w_out), dtype=np.float64)
    for ki in range(3):
        for kj in range(3):
            cols[:, :, ki, kj] = xp[:, :, ki:ki + stride * h_out:stride,
                                    kj:kj + stride * w_out:stride]
    return cols.reshape(n, c * 9, h_out * w_out)


def _col2im(dcols: np.ndarray, x_shape, padding: int, stride: int,
            h_out: int, w_out: int) -> np.ndarray:
    """Adjoint of :func:`_im2col`: scatter patch gradients back to the input."""
    n, c, h, w = x_shape
    dxp = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=np.float64)
    d6 = dcols.reshape(n, c, 3, 3, h_out, w_out)
    for ki in range(3):
        for kj in range(3):
            dxp[:, :, ki:ki + stride * h_out:stride,
                kj:kj + stride * w_out:stride] += d6[:, :, ki, kj]
    if padding:
        return dxp[:, :, padding:-padding, padding:-padding]
    return dxp


class Conv2d(Layer):
    """3x3 convolution, stride 1 or 2, zero padding 0 or 1.

    Kernels have shape (c_out, c_in, 3, 3).  Accepts (N, C, H, W) batches or a
    single (C, H, W) input, returning the matching rank.
    """

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 stride: int = 1, padding: int = 0, bias: bool = True):
        if stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {stride}")
        if padding not in (0, 1):
            raise ValueError(f"padding must be 0 or 1, got {padding}")
        self.c_in = c_in
        self.c_out = c_out
        self.stride = stride
        self.padding = padding
        self.kernels = Param(_he_init(rng, (c_out, c_in, 3, 3), c_in * 9))
        self.bias = Param(np.zeros(c_out)) if bias else None
        self._cache = None

    def _out_hw(self, h: int, w: int) -> tuple[int, int]:
        h_out = (h + 2 * self.padding - 3) // self.stride + 1
        w_out = (w + 2 * self.padding - 3) // self.stride + 1
        if h_out < 1 or w_out < 1:
            raise ValueError(
                f"conv input {h}x{w} too small for 3x3 kernel with "
                f"padding {self.padding}")
        return h_out, w_out

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        squeeze = x.ndim == 3
        if squeeze:
            x = x[None]
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ValueError(
                f"conv2d: expected input (N, {self.c_in}, H, W), got shape "
                f"{x.shape} against kernels {self.kernels.shape}")
        n, _, h, w = x.shape
        h_out, w_out = self._out_hw(h, w)
        p = self.padding
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        cols = _im2col(xp, self.stride, h_out, w_out)
        w_mat = self.kernels.value.reshape(self.c_out, self.c_in * 9)
        out = np.matmul(w_mat, cols)              # (N, c_out, L)
        if self.bias is not None:
            out += self.bias.value[:, None]
        out = out.reshape(n, self.c_out, h_out, w_out)
        self._cache = (x.shape, cols, h_out, w_out, squeeze)
        return out[0] if squeeze else out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x_shape, cols, h_out, w_out, squeeze = self._cache
        g = as_tensor(grad_out)
        if squeeze:
            g = g[None]
        n = x_shape[0]
        g2 = g.reshape(n, self.c_out, h_out * w_out)
        k = self.c_in * 9
        gw = g2.transpose(1, 0, 2).reshape(self.c_out, -1) @ \
            cols.transpose(1, 0, 2).reshape(k, -1).T
        self.kernels.grad += gw.reshape(self.kernels.shape)
        if self.bias is not None:
            self.bias.grad += g2.sum(axis=(0, 2))
        w_mat = self.kernels.value.reshape(self.c_out, k)
        dcols = np.matmul(w_mat.T, g2)
        dx = _col2im(dcols, x_shape, self.padding, self.stride, h_out, w_out)
        return dx[0] if squeeze else dx

    def named_params(self):
        out = [("kernels", self.kernels)]
        if self.bias is not None:
            out.append(("bias", self.bias))
        return out


def conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray | None = None,
           stride: int = 1, padding: int = 0) -> np.ndarray:
    """Functional 3x3 convolution (forward only) over (C,H,W) or (N,C,H,W)."""
    kernels = as_tensor(kernels)
    if kernels.ndim != 4 or kernels.shape[2:] != (3, 3):
        raise ValueError(f"kernels must be (c_out, c_in, 3, 3), got "
                         f"{kernels.shape}")
    layer = Conv2d(kernels.shape[1], kernels.shape[0],
                   np.random.default_rng(0), stride=stride, padding=padding,
                   bias=bias is not None)
    layer.kernels.value = kernels
    if bias is not None:
        layer.bias.value = as_tensor(bias)
    return layer.forward(x)


class ReLU(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        self._mask = x > 0.0
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return as_tensor(grad_out) * self._mask


class Tanh(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._y = np.tanh(as_tensor(x))
        return self._y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return as_tensor(grad_out) * (1.0 - self._y * self._y)


class Sigmoid(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        # Numerically stable logistic for both signs of x.
        self._y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                           np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
        return self._y

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return as_tensor(grad_out) * self._y * (1.0 - self._y)


class ScaledSigmoid(Layer):
    """``scale * sigmoid(x)`` -- used to bound a regression head to [0, scale]."""

    def __init__(self, scale: float):
        self.scale = float(scale)
        self._inner = Sigmoid()

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.scale * self._inner.forward(x)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return self._inner.backward(as_tensor(grad_out) * self.scale)


class GlobalAvgPool(Layer):
    """(N, C, H, W) -> (N, C) by averaging each channel plane."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        if x.ndim != 4:
            raise ValueError(f"GlobalAvgPool expects (N, C, H, W), got "
                             f"{x.shape}")
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        n, c, h, w = self._shape
        g = as_tensor(grad_out).reshape(n, c, 1, 1)
        return np.broadcast_to(g / (h * w), self._shape).copy()


class Flatten(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        return as_tensor(grad_out).reshape(self._shape)


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = list(layers)

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad_out = layer.backward(grad_out)
        return grad_out

    def named_params(self):
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in layer.named_params():
                out.append((f"{i}.{name}", p))
        return out


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Row-stable softmax: subtracts the per-row max before exponentiating."""
    x = as_tensor(x)
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _softmax_backward(y: np.ndarray, grad_out: np.ndarray,
                      axis: int = -1) -> np.ndarray:
    inner = (grad_out * y).sum(axis=axis, keepdims=True)
    return y * (grad_out - inner)


class SelfAttention(Layer):
    """Single-head scaled dot-product self-attention over a token sequence.

    Input is (N, n_tokens, f).  Q/K/V are per-token affine maps to dimension
    ``d``; attention weights are ``softmax(Q K^T / sqrt(d))`` row-wise and the
    output context is ``weights @ V`` of shape (N, n_tokens, d).

    ``forward`` returns only the context; the weight matrices from the most
    recent forward pass are kept in ``last_weights`` for inspection.
    """

    def __init__(self, f: int, d: int, rng: np.random.Generator):
        self.f = f
        self.d = d
        self.wq = Param(_he_init(rng, (f, d), f))
        self.wk = Param(_he_init(rng, (f, d), f))
        self.wv = Param(_he_init(rng, (f, d), f))
        self.bq = Param(np.zeros(d))
        self.bk = Param(np.zeros(d))
        self.bv = Param(np.zeros(d))
        self.last_weights: np.ndarray | None = None
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = as_tensor(x)
        if x.ndim != 3 or x.shape[2] != self.f:
            raise ValueError(
                f"SelfAttention expects (N, n, {self.f}), got {x.shape}")
        q = x @ self.wq.value + self.bq.value
        k = x @ self.wk.value + self.bk.value
        v = x @ self.wv.value + self.bv.value
        scores = q @ k.transpose(0, 2, 1) / np.sqrt(self.d)
        weights = softmax(scores, axis=-1)
        context = weights @ v
        self.last_weights = weights
        self._cache = (x, q, k, v, weights)
        return context

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        x, q, k, v, weights = self._cache
        g = as_tensor(grad_out)
        d_weights = g @ v.transpose(0, 2, 1)
        dv = weights.transpose(0, 2, 1) @ g
        d_scores = _softmax_backward(weights, d_weights, axis=-1)
        d_scores /= np.sqrt(self.d)
        dq = d_scores @ k
        dk = d_scores.transpose(0, 2, 1) @ q
        self.wq.grad += np.einsum("nif,nid->fd", x, dq)
        self.wk.grad += np.einsum("nif,nid->fd", x, dk)
        self.wv.grad += np.einsum("nif,nid->fd", x, dv)
        self.bq.grad += dq.sum(axis=(0, 1))
        self.bk.grad += dk.sum(axis=(0, 1))
        self.bv.grad += dv.sum(axis=(0, 1))
        return (dq @ self.wq.value.T + dk @ self.wk.value.T
                + dv @ self.wv.value.T)

    def named_params(self):
        return [("wq", self.wq), ("bq", self.bq),
                ("wk", self.wk), ("bk", self.bk),
                ("wv", self.wv), ("bv", self.bv)]
