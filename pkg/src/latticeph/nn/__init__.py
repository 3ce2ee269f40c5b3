"""From-scratch lattice and standard convolutional networks."""

from .functional import (
    NonFiniteError,
    fully_connected,
    join_conv,
    max_pool_2x2,
    meet_conv,
    mixed_lattice_layer,
    softmax_cross_entropy,
    standard_conv,
)
from .network import Network, NetworkConfig, build_network
from .optim import Adam

__all__ = [
    "Adam",
    "Network",
    "NetworkConfig",
    "NonFiniteError",
    "build_network",
    "fully_connected",
    "join_conv",
    "max_pool_2x2",
    "meet_conv",
    "mixed_lattice_layer",
    "softmax_cross_entropy",
    "standard_conv",
]
