"""The finite product lattice [m] x [n] and kernel supports on it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class GridPoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class GridLattice:
    """Product of chains {0..m} x {0..n}; has (m+1)(n+1) elements."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError(f"lattice bounds must be non-negative, got m={self.m}, n={self.n}")

    @classmethod
    def for_shape(cls, rows: int, cols: int) -> "GridLattice":
        """Lattice indexing a rows x cols grid."""
        return cls(rows - 1, cols - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m + 1, self.n + 1)

    @property
    def bottom(self) -> GridPoint:
        return GridPoint(0, 0)

    @property
    def top(self) -> GridPoint:
        return GridPoint(self.m, self.n)

    def __contains__(self, p) -> bool:
        x, y = p
        return 0 <= x <= self.m and 0 <= y <= self.n

    def points(self):
        for x in range(self.m + 1):
            for y in range(self.n + 1):
                yield GridPoint(x, y)


@dataclass(frozen=True)
class KernelSupport:
    """Sites xs x ys carrying lattice-convolution weights."""

    xs: tuple[int, ...]
    ys: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.xs), len(self.ys))

    def sites(self):
        return [GridPoint(a, b) for a in self.xs for b in self.ys]

    def fits(self, lattice: GridLattice) -> bool:
        return (
            all(0 <= a <= lattice.m for a in self.xs)
            and all(0 <= b <= lattice.n for b in self.ys)
        )


def meet(a: GridPoint, b: GridPoint) -> GridPoint:
    return GridPoint(min(a[0], b[0]), min(a[1], b[1]))


def join(a: GridPoint, b: GridPoint) -> GridPoint:
    return GridPoint(max(a[0], b[0]), max(a[1], b[1]))


def leq(a: GridPoint, b: GridPoint) -> bool:
    return a[0] <= b[0] and a[1] <= b[1]


def even_indices(top: int, s: int) -> tuple[int, ...]:
    """s evenly spaced integers from 0 to top inclusive, deduplicated."""
    # half-up rounding of i * top / (s - 1), in integers: floor((2p + q) / 2q)
    q = s - 1
    idx = {(2 * i * top + q) // (2 * q) for i in range(s)}
    return tuple(sorted(idx))


def kernel_support(lattice: GridLattice, s: int) -> KernelSupport:
    """Evenly spaced s x s sublattice containing both bottom and top.

    Coordinates are ``round(i * m / (s - 1))`` with half-up rounding. If
    rounding ever collides the duplicates are dropped, so the support can be
    smaller than s x s.
    """
    if s < 2:
        raise ValueError(f"support side-count must be >= 2 to hold both endpoints, got {s}")
    if s > min(lattice.m, lattice.n) + 1:
        raise ValueError(
            f"support side-count {s} exceeds lattice size {lattice.m + 1}x{lattice.n + 1}"
        )
    return KernelSupport(even_indices(lattice.m, s), even_indices(lattice.n, s))
