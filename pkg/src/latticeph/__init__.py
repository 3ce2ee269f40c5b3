"""Degree-0 two-parameter persistence features and lattice convolutional networks."""

from .lattice import GridLattice, GridPoint, KernelSupport, join, kernel_support, meet
from .mesh_io import Mesh, PointCloud, parse_off, sample_points
from .persistence import (
    BifiltrationInvariants,
    GridScales,
    betti_h0,
    codensity,
    featurize,
    grid_scales,
    hilbert_h0,
    pairwise_distances,
)

__version__ = "0.1.0"
