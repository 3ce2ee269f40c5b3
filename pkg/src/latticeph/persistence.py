"""Degree-0 invariants of the Rips/codensity bifiltration on a grid.

The bifiltration at grid cell (i, j) is the Rips complex at scale
``r_values[i]`` on the points whose codensity is at most ``t_values[j]``.
In degree 0 only its 1-skeleton matters, so every cell is summarized by a
labelling of the included points by connected component. Hilbert function
and multigraded Betti numbers are derived from those labellings.

All homology is taken with GF(2) coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2
from .mesh_io import PointCloud


class DegenerateCodensityError(ValueError):
    pass


# --------------------------------------------------------------------------
# metric and filter


def pairwise_distances(cloud: PointCloud | np.ndarray) -> np.ndarray:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("need a non-empty (N, d) array of points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return d


def check_distance_matrix(d) -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise ValueError("distance matrix entries must be finite and non-negative")
    if np.any(np.diag(d) != 0) or not np.array_equal(d, d.T):
        raise ValueError("distance matrix must be symmetric with zero diagonal")
    return d


def codensity(dmat: np.ndarray, k: int) -> np.ndarray:
    """Inverse mean distance to the k nearest other points.

    Neighbors are the k smallest off-diagonal entries of each row; equal
    distances are taken in point-index order (a stable sort), which only
    matters for which points are named, not for the value.
    """
    d = check_distance_matrix(dmat)
    n = d.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        raise ValueError(f"k must be < point count (k={k}, n={n})")
    others = d.copy()
    np.fill_diagonal(others, np.inf)
    nearest = np.sort(others, axis=1, kind="stable")[:, :k]
    mean = nearest.sum(axis=1) / k
    if np.any(mean == 0):
        bad = int(np.flatnonzero(mean == 0)[0])
        raise DegenerateCodensityError(
            f"degenerate codensity: point {bad} coincides with its {k} nearest neighbors"
        )
    return 1.0 / mean


# --------------------------------------------------------------------------
# grid


@dataclass
class GridScales:
    r_values: np.ndarray
    t_values: np.ndarray

    def __post_init__(self):
        self.r_values = np.asarray(self.r_values, dtype=np.float64)
        self.t_values = np.asarray(self.t_values, dtype=np.float64)
        for name, v in (("r_values", self.r_values), ("t_values", self.t_values)):
            if v.ndim != 1 or v.size < 1 or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be a non-empty finite vector")
            if np.any(np.diff(v) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
        if self.r_values[0] < 0:
            raise ValueError("r_values must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r_values.size, self.t_values.size)


def _span(lo: float, hi: float, bins: int) -> np.ndarray:
    if hi <= lo:
        hi = lo + 4 * bins * float(np.spacing(max(abs(lo), 1.0)))
    return np.linspace(lo, hi, bins)


def grid_scales(dmat: np.ndarray, rho: np.ndarray, bins_r: int, bins_t: int) -> GridScales:
    """Evenly spaced scales: r over [0, diameter], t over [min rho, max rho]."""
    if bins_r < 2 or bins_t < 2:
        raise ValueError("grid needs at least 2 bins per axis")
    d = np.asarray(dmat, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    return GridScales(
        _span(0.0, float(d.max()), bins_r),
        _span(float(rho.min()), float(rho.max()), bins_t),
    )


# --------------------------------------------------------------------------
# connected components per cell


class UnionFind:
    def __init__(self, size: int):
        self.parent = np.arange(size, dtype=np.int64)
        self.rank = np.zeros(size, dtype=np.int8)
        self.components = size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return int(a)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.components -= 1
        return True

    def roots(self) -> np.ndarray:
        """Root of every element, by vectorized pointer jumping."""
        r = self.parent.copy()
        while True:
            nxt = self.parent[r]
            if np.array_equal(nxt, r):
                return r
            r = nxt


def spanning_tree(d: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum spanning tree of the complete graph with weights ``d`` (Prim).

    Returns (u, v, weight) arrays sorted by weight. Thresholding a minimum
    spanning tree at r yields the same components as thresholding the full
    graph, so only these edges ever need to reach the union-find.
    """
    k = d.shape[0]
    if k < 2:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = d[0].copy()
    best[0] = np.inf
    src = np.zeros(k, dtype=np.int64)
    us = np.empty(k - 1, dtype=np.int64)
    vs = np.empty(k - 1, dtype=np.int64)
    ws = np.empty(k - 1)
    for e in range(k - 1):
        v = int(np.argmin(best))
        us[e], vs[e], ws[e] = src[v], v, best[v]
        in_tree[v] = True
        best[v] = np.inf
        row = d[v]
        closer = (row < best) & ~in_tree
        best[closer] = row[closer]
        src[closer] = v
    order = np.argsort(ws, kind="stable")
    return us[order], vs[order], ws[order]


def component_labels(dmat, rho, scales: GridScales) -> np.ndarray:
    """Component label of every point at every grid cell.

    Returns an int array of shape (bins_r, bins_t, n). Labels at a cell are
    0..c-1 for the c components present; excluded points get -1.
    """
    d = check_distance_matrix(dmat)
    rho = np.asarray(rho, dtype=np.float64)
    n = d.shape[0]
    if rho.shape != (n,) or not np.all(np.isfinite(rho)):
        raise ValueError("filter values must be finite and match the point count")
    R, T = scales.shape
    labels = np.full((R, T, n), -1, dtype=np.int64)
    for j, t in enumerate(scales.t_values):
        members = np.flatnonzero(rho <= t)
        if members.size == 0:
            continue
        u, v, w = spanning_tree(d[np.ix_(members, members)])
        uf = UnionFind(members.size)
        e = 0
        for i, r in enumerate(scales.r_values):
            while e < w.size and w[e] <= r:
                uf.union(int(u[e]), int(v[e]))
                e += 1
            _, compact = np.unique(uf.roots(), return_inverse=True)
            labels[i, j, members] = compact
    return labels


def hilbert_from_labels(labels: np.ndarray) -> np.ndarray:
    return labels.max(axis=2) + 1


def hilbert_h0(dmat, rho, scales: GridScales) -> np.ndarray:
    """Number of connected components of the bifiltration at each cell."""
    return hilbert_from_labels(component_labels(dmat, rho, scales))


# --------------------------------------------------------------------------
# multigraded Betti numbers via the Koszul complex


def betti_from_labels(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Koszul homology dimensions at every cell from component labellings.

    At cell a the complex is M(a-e1-e2) -> M(a-e1) + M(a-e2) -> M(a) with
    M(b) spanned by the components at b. The outgoing map sends each
    component to the one containing it, so its columns are unit vectors;
    the incoming map has two nonzeros per column. Both ranks are therefore
    read off combinatorially (see ``gf2``).
    """
    hilb = hilbert_from_labels(labels)
    R, T = hilb.shape
    xi0 = np.zeros((R, T), dtype=np.int64)
    xi1 = np.zeros((R, T), dtype=np.int64)
    xi2 = np.zeros((R, T), dtype=np.int64)

    def dim(i, j):
        return int(hilb[i, j]) if i >= 0 and j >= 0 else 0

    for i in range(R):
        for j in range(T):
            here = labels[i, j]
            hit = []
            if i > 0:
                hit.append(here[labels[i - 1, j] >= 0])
            if j > 0:
                hit.append(here[labels[i, j - 1] >= 0])
            rank_out = gf2.unit_column_rank(np.concatenate(hit)) if hit else 0
            rank_in = 0
            if i > 0 and j > 0:
                corner = labels[i - 1, j - 1] >= 0
                rank_in = gf2.incidence_rank(
                    labels[i - 1, j][corner], labels[i, j - 1][corner],
                    dim(i - 1, j), dim(i, j - 1),
                )
            xi0[i, j] = dim(i, j) - rank_out
            xi2[i, j] = dim(i - 1, j - 1) - rank_in
            xi1[i, j] = dim(i - 1, j) + dim(i, j - 1) - rank_out - rank_in
    return xi0, xi1, xi2


def betti_h0(dmat, rho, scales: GridScales) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return betti_from_labels(component_labels(dmat, rho, scales))


@dataclass
class GridModule:
    """A persistence module on a grid given by explicit GF(2) matrices.

    ``maps_r[i, j]`` is the structure map M(i-1, j) -> M(i, j) and
    ``maps_t[i, j]`` is M(i, j-1) -> M(i, j); each has shape
    (dims[i, j], dims[source]). Missing entries are zero maps.
    """

    dims: np.ndarray
    maps_r: dict = field(default_factory=dict)
    maps_t: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dims = np.asarray(self.dims, dtype=np.int64)
        R, T = self.dims.shape
        for i in range(R):
            for j in range(T):
                if i > 0:
                    self.maps_r[i, j] = self._map(self.maps_r.get((i, j)), (i, j), (i - 1, j))
                if j > 0:
                    self.maps_t[i, j] = self._map(self.maps_t.get((i, j)), (i, j), (i, j - 1))
        for i in range(1, R):
            for j in range(1, T):
                via_r = self.maps_t[i, j] @ self.maps_r[i, j - 1] % 2
                via_t = self.maps_r[i, j] @ self.maps_t[i - 1, j] % 2
                if not np.array_equal(via_r, via_t):
                    raise ValueError(f"structure maps do not commute at {(i, j)}")

    def _map(self, m, target, source):
        shape = (int(self.dims[target]), int(self.dims[source]))
        if m is None:
            return np.zeros(shape, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64) % 2
        if m.shape != shape:
            raise ValueError(f"map {source}->{target} has shape {m.shape}, expected {shape}")
        return m

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "GridModule":
        """Materialize the component maps of a labelling as 0/1 matrices."""
        hilb = hilbert_from_labels(labels)
        R, T = hilb.shape

        def comp_map(src, dst, n_src, n_dst):
            m = np.zeros((n_dst, n_src), dtype=np.int64)
            present = src >= 0
            m[dst[present], src[present]] = 1
            return m

        maps_r = {
            (i, j): comp_map(labels[i - 1, j], labels[i, j], hilb[i - 1, j], hilb[i, j])
            for i in range(1, R) for j in range(T)
        }
        maps_t = {
            (i, j): comp_map(labels[i, j - 1], labels[i, j], hilb[i, j - 1], hilb[i, j])
            for i in range(R) for j in range(1, T)
        }
        return cls(hilb, maps_r, maps_t)


def koszul_betti(module: GridModule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Koszul homology dimensions of an explicit module, by dense GF(2) ranks."""
    dims = module.dims
    R, T = dims.shape
    xi = [np.zeros((R, T), dtype=np.int64) for _ in range(3)]

    def dim(i, j):
        return int(dims[i, j]) if i >= 0 and j >= 0 else 0

    for i in range(R):
        for j in range(T):
            blocks = []
            if i > 0:
                blocks.append(module.maps_r[i, j])
            if j > 0:
                blocks.append(module.maps_t[i, j])
            d1 = np.hstack(blocks) if blocks else np.zeros((dim(i, j), 0), dtype=np.int64)
            rank1 = gf2.matrix_rank(d1)
            rank2 = 0
            if i > 0 and j > 0:
                d2 = np.vstack([module.maps_t[i - 1, j], module.maps_r[i, j - 1]])
                rank2 = gf2.matrix_rank(d2)
            xi[0][i, j] = dim(i, j) - rank1
            xi[1][i, j] = dim(i - 1, j) + dim(i, j - 1) - rank1 - rank2
            xi[2][i, j] = dim(i - 1, j - 1) - rank2
    return xi[0], xi[1], xi[2]


def euler_defect(hilb: np.ndarray) -> np.ndarray:
    """hilb(a) - hilb(a-e1) - hilb(a-e2) + hilb(a-e1-e2), zero off-grid."""
    h = np.pad(np.asarray(hilb, dtype=np.int64), ((1, 0), (1, 0)))
    return h[1:, 1:] - h[:-1, 1:] - h[1:, :-1] + h[:-1, :-1]


# --------------------------------------------------------------------------
# end to end


CHANNELS = ("hilb", "xi0", "xi1", "xi2")


@dataclass
class BifiltrationInvariants:
    hilb: np.ndarray
    xi0: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    scales: GridScales

    def __post_init__(self):
        shape = self.scales.shape
        for name in CHANNELS:
            grid = np.asarray(getattr(self, name), dtype=np.int64)
            if grid.shape != shape:
                raise ValueError(f"{name} has shape {grid.shape}, expected {shape}")
            if np.any(grid < 0):
                raise ValueError(f"{name} has negative entries")
            setattr(self, name, grid)

    @property
    def shape(self) -> tuple[int, int]:
        return self.scales.shape

    def channels(self) -> np.ndarray:
        """Stack as a (4, bins_r, bins_t) integer array."""
        return np.stack([getattr(self, name) for name in CHANNELS])

    def euler_holds(self) -> bool:
        return bool(np.array_equal(self.xi0 - self.xi1 + self.xi2, euler_defect(self.hilb)))

    def __eq__(self, other):
        if not isinstance(other, BifiltrationInvariants):
            return NotImplemented
        return (
            np.array_equal(self.channels(), other.channels())
            and np.array_equal(self.scales.r_values, other.scales.r_values)
            and np.array_equal(self.scales.t_values, other.scales.t_values)
        )


def invariants_from_matrix(dmat, rho, scales: GridScales) -> BifiltrationInvariants:
    labels = component_labels(dmat, rho, scales)
    xi0, xi1, xi2 = betti_from_labels(labels)
    return BifiltrationInvariants(hilbert_from_labels(labels), xi0, xi1, xi2, scales)


def featurize(cloud: PointCloud, k: int = 100, bins_r: int = 40, bins_t: int = 40) -> BifiltrationInvariants:
    """Hilbert function and Betti grids of the Rips/codensity bifiltration."""
    n = len(cloud)
    if k >= n:
        raise ValueError(f"k must be < point count (k={k}, n={n})")
    d = pairwise_distances(cloud)
    rho = codensity(d, k)
    return invariants_from_matrix(d, rho, grid_scales(d, rho, bins_r, bins_t))
