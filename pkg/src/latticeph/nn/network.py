"""Three-conv, two-FC classifiers in lattice and standard variants."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .functional import check_finite, softmax_cross_entropy
from .layers import Conv2d, Flatten, Layer, LatticeConv, Linear, MaxPool2x2, ReLU

VARIANTS = ("lattice", "standard")


@dataclass(frozen=True)
class NetworkConfig:
    variant: str = "lattice"
    in_channels: int = 4
    classes: int = 10
    grid: tuple[int, int] = (40, 40)
    alpha: float = 0.5
    hidden_channels: int = 16
    final_channels: int = 8
    fc_hidden: int = 32
    kernel: int = 4
    activation: str = "relu"
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        d = dict(d)
        d["grid"] = tuple(d["grid"])
        return cls(**d)


class Network:
    def __init__(self, layers: list[Layer], config: NetworkConfig):
        self.layers = layers
        self.config = config

    @property
    def variant(self) -> str:
        return self.config.variant

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim == 3:
            x = x[None]
        for layer in self.layers:
            x = check_finite(layer.forward(x), f"{layer.name} output")
        return x

    def backward(self, dout: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dout = check_finite(layer.backward(dout), f"{layer.name} gradient")
        return dout

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def loss_and_grad(self, x, labels) -> float:
        """Forward, softmax cross-entropy, backward; gradients accumulate into layers."""
        logits = self.forward(x)
        loss, dlogits = softmax_cross_entropy(logits, labels)
        self.backward(dlogits)
        return loss

    def predict(self, x) -> np.ndarray:
        return self.forward(x).argmax(axis=-1)

    def named_params(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{name}": p
            for i, layer in enumerate(self.layers)
            for name, p in layer.params.items()
        }

    def named_grads(self) -> dict[str, np.ndarray]:
        return {
            f"{i}.{name}": g
            for i, layer in enumerate(self.layers)
            for name, g in layer.grads.items()
        }

    def param_count(self) -> int:
        return sum(p.size for p in self.named_params().values())

    def shape_trace(self, input_shape=None) -> list[tuple[str, tuple[int, ...]]]:
        """Per-sample output shape after each layer."""
        shape = tuple(input_shape or (self.config.in_channels, *self.config.grid))
        trace = []
        for layer in self.layers:
            shape = tuple(layer.output_shape(shape))
            trace.append((layer.name, shape))
        return trace

    def summary(self) -> str:
        lines = []
        for (name, shape), layer in zip(self.shape_trace(), self.layers):
            n = sum(p.size for p in layer.params.values())
            lines.append(f"{layer.describe():<48} {'x'.join(map(str, shape)):>10} {n:>8}")
        return "\n".join(lines)


def build_network(variant: str = "lattice", in_channels: int = 4, classes: int = 10,
                  grid=(40, 40), alpha: float = 0.5, seed: int = 0, **kw) -> Network:
    """conv -> relu -> pool -> conv -> relu -> pool -> conv -> relu -> flatten -> fc -> relu -> fc.

    The lattice variant mixes meet and join convolutions with weight alpha,
    each kernel on an evenly spaced support recomputed on the current
    (pooled) lattice. The standard variant uses same-size 4x4 convolutions.
    """
    config = NetworkConfig(variant=variant, in_channels=in_channels, classes=classes,
                           grid=tuple(grid), alpha=alpha, seed=seed, **kw)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0,1]")
    if config.activation != "relu":
        raise ValueError(f"unsupported activation {config.activation!r}")
    rows, cols = config.grid
    if rows % 4 or cols % 4 or rows < 4 or cols < 4:
        raise ValueError(f"grid {rows}x{cols} must be divisible by 4 for two 2x2 pools")

    rng = np.random.default_rng(seed)
    hidden, final, k = config.hidden_channels, config.final_channels, config.kernel

    def conv(cin, cout, size):
        if variant == "lattice":
            return LatticeConv(cin, cout, size, support_side=k, alpha=alpha, rng=rng)
        return Conv2d(cin, cout, kernel=k, rng=rng)

    layers = [
        conv(in_channels, hidden, (rows, cols)), ReLU(), MaxPool2x2(),
        conv(hidden, hidden, (rows // 2, cols // 2)), ReLU(), MaxPool2x2(),
        conv(hidden, final, (rows // 4, cols // 4)), ReLU(),
        Flatten(),
        Linear(final * (rows // 4) * (cols // 4), config.fc_hidden, rng=rng), ReLU(),
        Linear(config.fc_hidden, classes, rng=rng),
    ]
    return Network(layers, config)
