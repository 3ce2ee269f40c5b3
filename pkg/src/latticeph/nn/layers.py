"""Layers with parameters, cached forward state and reverse-mode backward."""

from __future__ import annotations

import math

import numpy as np

from ..lattice import GridLattice, KernelSupport, even_indices
from . import functional as F


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def layer_support(lattice: GridLattice, side: int) -> KernelSupport:
    """Evenly spaced support, shrunk per axis when the lattice is too small."""
    def axis(top):
        s = min(side, top + 1)
        return even_indices(top, s) if s >= 2 else (0,)

    return KernelSupport(axis(lattice.m), axis(lattice.n))


class Layer:
    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def output_shape(self, shape):
        return shape

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def zero_grad(self):
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}

    def describe(self) -> str:
        return self.name


class LatticeConv(Layer):
    """alpha * MeetConv + (1 - alpha) * JoinConv on the layer's own lattice."""

    name = "lattice_conv"

    def __init__(self, in_channels, out_channels, grid, support_side=4, alpha=0.5, rng=None):
        super().__init__()
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must be in [0,1]")
        self.alpha = float(alpha)
        self.lattice = GridLattice.for_shape(*grid)
        self.support = layer_support(self.lattice, support_side)
        sx, sy = self.support.shape
        shape = (out_channels, in_channels, sx, sy)
        rng = rng or np.random.default_rng(0)
        fan_in, fan_out = in_channels * sx * sy, out_channels * sx * sy
        self.params = {
            "meet": glorot_uniform(rng, shape, fan_in, fan_out),
            "join": glorot_uniform(rng, shape, fan_in, fan_out),
            "bias": np.zeros(out_channels),
        }
        self.zero_grad()

    def output_shape(self, shape):
        return (self.params["bias"].size,) + tuple(shape[1:])

    def forward(self, x):
        p = self.params
        out, self._cache = F.mixed_lattice_forward(x, p["meet"], p["join"], self.support, p["bias"], self.alpha)
        return out

    def backward(self, dout):
        dx, dm, dj, db = F.mixed_lattice_backward(dout, self._cache)
        self.grads["meet"] += dm
        self.grads["join"] += dj
        self.grads["bias"] += db
        return dx

    def describe(self):
        return f"{self.name}(alpha={self.alpha}, support={self.support.xs}x{self.support.ys})"


class Conv2d(Layer):
    name = "conv"

    def __init__(self, in_channels, out_channels, kernel=4, rng=None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        shape = (out_channels, in_channels, kernel, kernel)
        self.params = {
            "weight": glorot_uniform(rng, shape, in_channels * kernel**2, out_channels * kernel**2),
            "bias": np.zeros(out_channels),
        }
        self.zero_grad()

    def output_shape(self, shape):
        return (self.params["bias"].size,) + tuple(shape[1:])

    def forward(self, x):
        out, self._cache = F.conv2d_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, dout):
        dx, dw, db = F.conv2d_backward(dout, self._cache)
        self.grads["weight"] += dw
        self.grads["bias"] += db
        return dx


class MaxPool2x2(Layer):
    name = "max_pool"

    def output_shape(self, shape):
        c, h, w = shape
        if h % 2 or w % 2:
            raise ValueError(f"2x2 max-pool needs even spatial dims, got {h}x{w}")
        return (c, h // 2, w // 2)

    def forward(self, x):
        out, self._cache = F.max_pool_forward(x)
        return out

    def backward(self, dout):
        return F.max_pool_backward(dout, self._cache)


class ReLU(Layer):
    name = "relu"

    def forward(self, x):
        out, self._cache = F.relu_forward(x)
        return out

    def backward(self, dout):
        return F.relu_backward(dout, self._cache)


class Flatten(Layer):
    name = "flatten"

    def output_shape(self, shape):
        return (int(np.prod(shape)),)

    def forward(self, x):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._cache)


class Linear(Layer):
    name = "fc"

    def __init__(self, in_features, out_features, rng=None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.params = {
            "weight": glorot_uniform(rng, (out_features, in_features), in_features, out_features),
            "bias": np.zeros(out_features),
        }
        self.zero_grad()

    def output_shape(self, shape):
        (d,) = shape
        if d != self.params["weight"].shape[1]:
            raise ValueError(f"fc layer expects {self.params['weight'].shape[1]} inputs, got {d}")
        return (self.params["bias"].size,)

    def forward(self, x):
        out, self._cache = F.linear_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, dout):
        dx, dw, db = F.linear_backward(dout, self._cache, self.params["weight"])
        self.grads["weight"] += dw
        self.grads["bias"] += db
        return dx
