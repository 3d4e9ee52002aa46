"""Differentiable layer kernel: forward/backward passes in plain numpy.

Every layer caches what its backward pass needs during forward. Arrays are
float64 throughout; single precision is an explicit caller choice for speed
runs, never the default, so gradient checks stay meaningful.

Convolutions use "same" padding (asymmetric on the high side for even
kernels) and support stride >= 1 via an im2col buffer that the backward pass
scatters back with a k*k loop.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..validation import NumericError, check_finite


def he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base layer: owns ``params`` and matching ``grads`` dicts."""

    def __init__(self):
        self.params = {}
        self.grads = {}

    def build(self, input_shape, rng):
        """Allocate parameters for ``input_shape`` (batch axis excluded); returns output shape."""
        return input_shape

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def sublayers(self):
        return []

    def named_params(self, prefix=""):
        name = prefix + type(self).__name__
        for key in sorted(self.params):
            yield f"{name}.{key}", self, key
        for i, sub in enumerate(self.sublayers()):
            yield from sub.named_params(prefix=f"{name}.{i}/")


class Dense(Layer):
    def __init__(self, units):
        super().__init__()
        self.units = units

    def build(self, input_shape, rng):
        (in_dim,) = input_shape
        self.params["W"] = he_uniform(rng, (in_dim, self.units), fan_in=in_dim)
        self.params["b"] = np.zeros(self.units)
        return (self.units,)

    def forward(self, x, training=False):
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dout):
        self.grads["W"] = self._x.T @ dout
        self.grads["b"] = dout.sum(axis=0)
        return dout @ self.params["W"].T


class ReLU(Layer):
    def forward(self, x, training=False):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0.0)


class Dropout(Layer):
    """Inverted dropout: training activations keep their expectation, inference is identity.

    ``frozen_mask`` pins the mask for finite-difference checks.
    """

    def __init__(self, rate):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.frozen_mask = None

    def build(self, input_shape, rng):
        self._rng = rng.spawn(1)[0]
        return input_shape

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._scaled_mask = None
            return x
        if self.frozen_mask is not None:
            mask = self.frozen_mask
        else:
            mask = self._rng.uniform(size=x.shape) >= self.rate
        self._scaled_mask = mask / (1.0 - self.rate)
        return x * self._scaled_mask

    def backward(self, dout):
        if self._scaled_mask is None:
            return dout
        return dout * self._scaled_mask


def _same_pad(size, kernel, stride):
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, (total // 2, total - total // 2)


class Conv2D(Layer):
    """2d convolution, NHWC layout, "same" padding, stride >= 1."""

    def __init__(self, filters, kernel_size, stride=1):
        super().__init__()
        self.filters = filters
        self.kernel_size = kernel_size
        self.stride = stride

    def build(self, input_shape, rng):
        h, w, in_ch = input_shape
        k = self.kernel_size
        self.in_channels = in_ch
        fan_in = k * k * in_ch
        self.params["W"] = he_uniform(rng, (k, k, in_ch, self.filters), fan_in=fan_in)
        self.params["b"] = np.zeros(self.filters)
        out_h, self._pad_h = _same_pad(h, k, self.stride)
        out_w, self._pad_w = _same_pad(w, k, self.stride)
        self._out_hw = (out_h, out_w)
        return (out_h, out_w, self.filters)

    def forward(self, x, training=False):
        k, s = self.kernel_size, self.stride
        out_h, out_w = self._out_hw
        xp = np.pad(x, ((0, 0), self._pad_h, self._pad_w, (0, 0)))
        windows = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::s, ::s]
        # (B, out_h, out_w, C, k, k) -> (B, out_h, out_w, k, k, C) contiguous
        cols = np.ascontiguousarray(windows.transpose(0, 1, 2, 4, 5, 3))
        self._cols = cols.reshape(len(x), out_h, out_w, k * k * self.in_channels)
        self._x_shape = x.shape
        # W is (k, k, in_ch, filters); cols flatten (k, k, in_ch) the same way.
        w_mat = self.params["W"].reshape(-1, self.filters)
        return self._cols @ w_mat + self.params["b"]

    def backward(self, dout):
        k, s = self.kernel_size, self.stride
        b, h, w, _ = self._x_shape
        out_h, out_w = self._out_hw
        w_mat = self.params["W"].reshape(-1, self.filters)

        self.grads["W"] = np.einsum("bijp,bijq->pq", self._cols, dout).reshape(self.params["W"].shape)
        self.grads["b"] = dout.sum(axis=(0, 1, 2))

        dcols = (dout @ w_mat.T).reshape(b, out_h, out_w, k, k, self.in_channels)
        dxp = np.zeros((b, h + sum(self._pad_h), w + sum(self._pad_w), self.in_channels))
        for ki in range(k):
            for kj in range(k):
                dxp[:, ki : ki + s * out_h : s, kj : kj + s * out_w : s] += dcols[:, :, :, ki, kj]
        return dxp[:, self._pad_h[0] : self._pad_h[0] + h, self._pad_w[0] : self._pad_w[0] + w]


class MaxPool2D(Layer):
    """Non-overlapping max pooling; gradient routes to the first argmax of each window."""

    def __init__(self, pool=2):
        super().__init__()
        self.pool = pool

    def build(self, input_shape, rng):
        h, w, c = input_shape
        out_h, out_w = h // self.pool, w // self.pool
        if out_h < 1 or out_w < 1:
            raise ValueError(f"input {input_shape} too small for pool size {self.pool}")
        return (out_h, out_w, c)

    def forward(self, x, training=False):
        p = self.pool
        b, h, w, c = x.shape
        out_h, out_w = h // p, w // p
        self._x_shape = x.shape
        windows = (
            x[:, : out_h * p, : out_w * p]
            .reshape(b, out_h, p, out_w, p, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(b, out_h, out_w, c, p * p)
        )
        self._argmax = windows.argmax(axis=-1)
        return np.take_along_axis(windows, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        p = self.pool
        b, h, w, c = self._x_shape
        out_h, out_w = h // p, w // p
        dwindows = np.zeros((b, out_h, out_w, c, p * p))
        np.put_along_axis(dwindows, self._argmax[..., None], dout[..., None], axis=-1)
        dx = np.zeros(self._x_shape)
        dx[:, : out_h * p, : out_w * p] = (
            dwindows.reshape(b, out_h, out_w, c, p, p)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(b, out_h * p, out_w * p, c)
        )
        return dx


class GlobalAvgPool(Layer):
    def build(self, input_shape, rng):
        h, w, c = input_shape
        return (c,)

    def forward(self, x, training=False):
        self._x_shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dout):
        b, h, w, c = self._x_shape
        return np.broadcast_to(dout[:, None, None, :], self._x_shape) / (h * w)


class Flatten(Layer):
    def build(self, input_shape, rng):
        self._shape = input_shape
        return (int(np.prod(input_shape)),)

    def forward(self, x, training=False):
        self._x_shape = x.shape
        return x.reshape(len(x), -1)

    def backward(self, dout):
        return dout.reshape(self._x_shape)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LSTM(Layer):
    """Single-layer LSTM over a (batch, time, dim) sequence; emits the final hidden state.

    The cell candidate and output activations are ReLU (gates stay sigmoid),
    matching the classifier description this kernel serves. Weights use a
    plain scaled-uniform init; the forget-gate bias starts at 1.
    """

    def __init__(self, units, activation="relu"):
        super().__init__()
        if activation not in ("relu", "tanh"):
            raise ValueError(f"unsupported LSTM activation {activation!r}")
        self.units = units
        self.activation = activation

    def _act(self, z):
        return np.maximum(z, 0.0) if self.activation == "relu" else np.tanh(z)

    def _act_grad(self, z, a):
        return (z > 0).astype(float) if self.activation == "relu" else 1.0 - a * a

    def build(self, input_shape, rng):
        t, d = input_shape
        h = self.units
        self.params["Wx"] = glorot_uniform(rng, (d, 4 * h), fan_in=d, fan_out=4 * h)
        self.params["Wh"] = glorot_uniform(rng, (h, 4 * h), fan_in=h, fan_out=4 * h)
        bias = np.zeros(4 * h)
        bias[h : 2 * h] = 1.0  # forget gate opens at init
        self.params["b"] = bias
        return (h,)

    def forward(self, x, training=False):
        b, t, d = x.shape
        h = self.units
        Wx, Wh, bias = self.params["Wx"], self.params["Wh"], self.params["b"]
        self._x = x
        self._cache = []
        h_t = np.zeros((b, h))
        c_t = np.zeros((b, h))
        for step in range(t):
            z = x[:, step] @ Wx + h_t @ Wh + bias
            zi, zf, zg, zo = np.split(z, 4, axis=1)
            i_g, f_g, o_g = _sigmoid(zi), _sigmoid(zf), _sigmoid(zo)
            g = self._act(zg)
            c_prev, h_prev = c_t, h_t
            c_t = f_g * c_prev + i_g * g
            c_act = self._act(c_t)
            h_t = o_g * c_act
            self._cache.append((h_prev, c_prev, i_g, f_g, o_g, g, zg, c_t, c_act))
        return h_t

    def backward(self, dout):
        x = self._x
        b, t, d = x.shape
        h = self.units
        Wx, Wh = self.params["Wx"], self.params["Wh"]
        dWx = np.zeros_like(Wx)
        dWh = np.zeros_like(Wh)
        db = np.zeros_like(self.params["b"])
        dx = np.zeros_like(x)
        dh = dout
        dc = np.zeros((b, h))
        for step in range(t - 1, -1, -1):
            h_prev, c_prev, i_g, f_g, o_g, g, zg, c_t, c_act = self._cache[step]
            do = dh * c_act
            dc = dc + dh * o_g * self._act_grad(c_t, c_act)
            di = dc * g
            df = dc * c_prev
            dg = dc * i_g
            dz = np.concatenate(
                [
                    di * i_g * (1.0 - i_g),
                    df * f_g * (1.0 - f_g),
                    dg * self._act_grad(zg, g),
                    do * o_g * (1.0 - o_g),
                ],
                axis=1,
            )
            dWx += x[:, step].T @ dz
            dWh += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, step] = dz @ Wx.T
            dh = dz @ Wh.T
            dc = dc * f_g
        self.grads["Wx"], self.grads["Wh"], self.grads["b"] = dWx, dWh, db
        return dx


class ResidualBlock(Layer):
    """Residual unit without batch norm: main branch convs plus a skip connection.

    ``kind`` selects the block pattern: "basic" is two 3x3 convs; "bottleneck"
    is 1x1 -> 3x3 -> 1x1 with 4x channel expansion. When the stride or channel
    count changes, the skip becomes a strided 1x1 projection; otherwise it is
    the identity, so a block whose branch weights are all zero passes
    non-negative input through unchanged.
    """

    EXPANSION = {"basic": 1, "bottleneck": 4}

    def __init__(self, channels, stride=1, kind="bottleneck"):
        super().__init__()
        if kind not in self.EXPANSION:
            raise ValueError(f"block kind must be 'basic' or 'bottleneck', got {kind!r}")
        self.channels = channels
        self.stride = stride
        self.kind = kind

    @property
    def out_channels(self):
        return self.channels * self.EXPANSION[self.kind]

    def build(self, input_shape, rng):
        h, w, in_ch = input_shape
        if self.kind == "basic":
            self._branch = [
                Conv2D(self.channels, 3, stride=self.stride),
                ReLU(),
                Conv2D(self.channels, 3),
            ]
        else:
            self._branch = [
                Conv2D(self.channels, 1),
                ReLU(),
                Conv2D(self.channels, 3, stride=self.stride),
                ReLU(),
                Conv2D(self.out_channels, 1),
            ]
        shape = input_shape
        for layer in self._branch:
            shape = layer.build(shape, rng)

        if self.stride != 1 or in_ch != self.out_channels:
            self._projection = Conv2D(self.out_channels, 1, stride=self.stride)
            proj_shape = self._projection.build(input_shape, rng)
            if proj_shape != shape:
                raise ValueError(f"projection shape {proj_shape} != branch shape {shape}")
        else:
            self._projection = None
        self._relu_out = ReLU()
        return shape

    def sublayers(self):
        subs = list(self._branch)
        if self._projection is not None:
            subs.append(self._projection)
        return subs

    def forward(self, x, training=False):
        out = x
        for layer in self._branch:
            out = layer.forward(out, training)
        skip = x if self._projection is None else self._projection.forward(x, training)
        return self._relu_out.forward(out + skip, training)

    def backward(self, dout):
        dsum = self._relu_out.backward(dout)
        dskip = dsum if self._projection is None else self._projection.backward(dsum)
        dmain = dsum
        for layer in reversed(self._branch):
            dmain = layer.backward(dmain)
        return dmain + dskip


def log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    """Mean cross-entropy of integer labels under softmax(logits).

    Returns ``(loss, dlogits)``; the gradient is for the *mean* loss, computed
    jointly with the softmax for numerical stability.
    """
    labels = np.asarray(labels)
    n = len(labels)
    logp = log_softmax(logits)
    loss = -float(logp[np.arange(n), labels].mean())
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    return loss, dlogits / n


class Network:
    """An ordered stack of layers with a shared seeded parameter init."""

    def __init__(self, layers, input_shape, rng):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.build(shape, rng)
        self.output_shape = shape

    def forward(self, x, training=False):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"expected input shape (batch, {self.input_shape}), got {x.shape}")
        context = "training forward" if training else "inference input"
        check_finite(x, "network input", context=context)
        for layer in self.layers:
            x = layer.forward(x, training)
        check_finite(x, "network output", context=context)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        for _, layer, key in self.named_params():
            if not np.all(np.isfinite(layer.grads[key])):
                raise NumericError("non-finite gradient during training step")
        return dout

    def named_params(self):
        for i, layer in enumerate(self.layers):
            yield from layer.named_params(prefix=f"{i}/")

    def parameter_vector(self):
        parts = [layer.params[key].ravel() for _, layer, key in self.named_params()]
        return np.concatenate(parts) if parts else np.empty(0)

    def load_parameter_vector(self, flat):
        flat = np.asarray(flat, dtype=np.float64)
        expected = sum(layer.params[key].size for _, layer, key in self.named_params())
        if flat.size != expected:
            raise ValueError(f"parameter vector has {flat.size} entries, expected {expected}")
        offset = 0
        for _, layer, key in self.named_params():
            size = layer.params[key].size
            layer.params[key] = flat[offset : offset + size].reshape(layer.params[key].shape).copy()
            offset += size

    def sgd_step(self, learning_rate):
        for _, layer, key in self.named_params():
            layer.params[key] = layer.params[key] - learning_rate * layer.grads[key]
