"""Layers with explicit forward/backward passes on (batch, ch, h, w) arrays.

Every layer caches what its backward pass needs during forward.  Trainable
tensors live in ``.params`` with matching gradient slots in ``.grads`` after
a backward pass; persistent non-trainable state (batch-norm running stats)
additionally shows up in ``.state``.
"""

from __future__ import annotations

import numpy as np

from . import kernels


def he_init(shape, fan_in: int, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Zero-mean Gaussian draws with variance 2 / fan_in."""
    if fan_in <= 0:
        raise ValueError("fan_in must be positive")
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


class Conv2d:
    """Valid stride-1 cross-correlation with bias."""

    def __init__(self, in_ch, out_ch, ksize, rng, dtype=np.float32):
        self.ksize = ksize
        self.params = {
            "weight": he_init((out_ch, in_ch, ksize, ksize), ksize * ksize * in_ch, rng, dtype),
            "bias": np.zeros(out_ch, dtype),
        }
        self.grads = {}
        self._x = None

    def forward(self, x, train=False):
        k = self.ksize
        if x.shape[2] < k or x.shape[3] < k:
            raise ValueError(f"kernel {k} larger than input {x.shape[2]}x{x.shape[3]}")
        self._x = x
        y = np.empty((x.shape[0], self.params["weight"].shape[0],
                      x.shape[2] - k + 1, x.shape[3] - k + 1), x.dtype)
        kernels.conv2d_forward(x, self.params["weight"], self.params["bias"], y)
        return y

    def backward(self, dy):
        x, w = self._x, self.params["weight"]
        dw = np.empty_like(w)
        kernels.conv2d_weight_grad(x, dy, dw)
        dx = np.empty_like(x)
        kernels.conv2d_input_grad(dy, w, dx)
        self.grads = {"weight": dw, "bias": dy.sum(axis=(0, 2, 3))}
        return dx


class BatchNorm2d:
    """Per-channel normalization over batch and spatial axes.

    Train mode uses biased batch statistics and folds them into the running
    stats with momentum 0.9; inference mode applies the running stats as a
    fixed per-channel affine map.
    """

    def __init__(self, ch, dtype=np.float32, eps=1e-5, momentum=0.9):
        self.eps = eps
        self.momentum = momentum
        self.params = {"gamma": np.ones(ch, dtype), "beta": np.zeros(ch, dtype)}
        self.state = {"running_mean": np.zeros(ch, dtype), "running_var": np.ones(ch, dtype)}
        self.grads = {}
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[1] != self.params["gamma"].shape[0]:
            raise ValueError("channel count does not match batch-norm parameters")
        g, b = self.params["gamma"], self.params["beta"]
        if train:
            mu = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.state["running_mean"][:] = m * self.state["running_mean"] + (1 - m) * mu
            self.state["running_var"][:] = m * self.state["running_var"] + (1 - m) * var
        else:
            mu = self.state["running_mean"]
            var = self.state["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu[:, None, None]) * inv_std[:, None, None]
        self._cache = (xhat, inv_std.astype(x.dtype), train)
        return g[:, None, None] * xhat + b[:, None, None]

    def backward(self, dy):
        xhat, inv_std, train = self._cache
        g = self.params["gamma"]
        self.grads = {"gamma": (dy * xhat).sum(axis=(0, 2, 3)), "beta": dy.sum(axis=(0, 2, 3))}
        dxhat = dy * g[:, None, None]
        if not train:
            return dxhat * inv_std[:, None, None]
        n = dy.shape[0] * dy.shape[2] * dy.shape[3]
        s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        s2 = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (inv_std[:, None, None] / n) * (n * dxhat - s1 - xhat * s2)


class ReLU:
    params: dict = {}
    grads: dict = {}

    def forward(self, x, train=False):
        self._mask = x > 0
        return np.where(self._mask, x, x.dtype.type(0))

    def backward(self, dy):
        return np.where(self._mask, dy, dy.dtype.type(0))


class MaxPool2:
    """2x2 stride-2 max pooling; a trailing odd row/column is dropped.

    Backward routes the gradient to the first maximal element of each
    window in row-major order.
    """

    params: dict = {}
    grads: dict = {}

    def forward(self, x, train=False):
        B, C, H, W = x.shape
        if H < 2 or W < 2:
            raise ValueError("spatial extent below pooling size")
        H2, W2 = (H - 2) // 2 + 1, (W - 2) // 2 + 1
        xc = x[:, :, : 2 * H2, : 2 * W2]
        y = xc.reshape(B, C, H2, 2, W2, 2).max(axis=(3, 5))
        self._cache = (x.shape, xc, y)
        return y

    def backward(self, dy):
        shape, xc, y = self._cache
        dx = np.zeros(shape, dy.dtype)
        dxc = dx[:, :, : xc.shape[2], : xc.shape[3]]
        taken = np.zeros(y.shape, bool)
        for di in (0, 1):
            for dj in (0, 1):
                hit = (xc[:, :, di::2, dj::2] == y) & ~taken
                view = dxc[:, :, di::2, dj::2]
                view[hit] = dy[hit]
                taken |= hit
        return dx


class Dropout:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""

    params: dict = {}
    grads: dict = {}

    def __init__(self, p, rng):
        if not 0 <= p < 1:
            raise ValueError("dropout probability must be in [0, 1)")
        self.p = p
        self.rng = rng
        self.frozen_mask = None  # set to reuse one mask across forwards

    def forward(self, x, train=False):
        if not train or self.p == 0.0:
            self._mask = None
            return x
        if self.frozen_mask is not None:
            mask = self.frozen_mask
        else:
            mask = self.rng.random(x.shape) >= self.p
        self._mask = mask
        return np.where(mask, x / x.dtype.type(1.0 - self.p), x.dtype.type(0))

    def backward(self, dy):
        if self._mask is None:
            return dy
        return np.where(self._mask, dy / dy.dtype.type(1.0 - self.p), dy.dtype.type(0))


class UpConv2d:
    """2x2 stride-2 transposed convolution; doubles both spatial extents.

    Forward is the exact adjoint of a 2x2 stride-2 valid convolution with
    the same (in_ch, out_ch, 2, 2) weights.
    """

    def __init__(self, in_ch, out_ch, rng, dtype=np.float32):
        self.params = {
            "weight": he_init((in_ch, out_ch, 2, 2), 4 * in_ch, rng, dtype),
            "bias": np.zeros(out_ch, dtype),
        }
        self.grads = {}

    def forward(self, x, train=False):
        w, b = self.params["weight"], self.params["bias"]
        B, C, H, W = x.shape
        self._x = x
        y = np.empty((B, w.shape[1], 2 * H, 2 * W), x.dtype)
        for di in (0, 1):
            for dj in (0, 1):
                y[:, :, di::2, dj::2] = np.einsum("bchw,co->bohw", x, w[:, :, di, dj],
                                                  optimize=True)
        return y + b[:, None, None]

    def backward(self, dy):
        w, x = self.params["weight"], self._x
        dx = np.zeros_like(x)
        dw = np.zeros_like(w)
        for di in (0, 1):
            for dj in (0, 1):
                sl = dy[:, :, di::2, dj::2]
                dx += np.einsum("bohw,co->bchw", sl, w[:, :, di, dj], optimize=True)
                dw[:, :, di, dj] = np.einsum("bchw,bohw->co", x, sl, optimize=True)
        self.grads = {"weight": dw, "bias": dy.sum(axis=(0, 2, 3))}
        return dx


class CropConcat:
    """Center-crop the larger input to the smaller and stack channels
    (cropped input first)."""

    params: dict = {}
    grads: dict = {}

    def forward(self, a, b, train=False):
        dh, dw = a.shape[2] - b.shape[2], a.shape[3] - b.shape[3]
        if dh < 0 or dw < 0 or dh % 2 or dw % 2:
            raise ValueError(f"cannot center-crop {a.shape[2:]} onto {b.shape[2:]}")
        my, mx = dh // 2, dw // 2
        self._cache = (a.shape, (my, mx), a.shape[1])
        ac = a[:, :, my : my + b.shape[2], mx : mx + b.shape[3]]
        return np.concatenate([ac, b], axis=1)

    def backward(self, dy):
        a_shape, (my, mx), ca = self._cache
        da = np.zeros(a_shape, dy.dtype)
        da[:, :, my : my + dy.shape[2], mx : mx + dy.shape[3]] = dy[:, :ca]
        return da, dy[:, ca:]


class Sequential:
    """Straight-line stack of named layers."""

    def __init__(self, named_layers):
        self.layers = list(named_layers)  # (name, layer)

    def forward(self, x, train=False):
        for _, layer in self.layers:
            x = layer.forward(x, train=train)
        return x

    def backward(self, dy):
        for _, layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self):
        out = {}
        for name, layer in self.layers:
            for key, val in layer.params.items():
                out[f"{name}.{key}"] = val
        return out

    def grads(self):
        out = {}
        for name, layer in self.layers:
            for key, val in layer.grads.items():
                out[f"{name}.{key}"] = val
        return out

    def state(self):
        out = {}
        for name, layer in self.layers:
            for key, val in layer.params.items():
                out[f"{name}.{key}"] = val
            for key, val in getattr(layer, "state", {}).items():
                out[f"{name}.{key}"] = val
        return out
