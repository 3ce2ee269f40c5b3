"""Rank computations over GF(2).

``rank`` is plain Gaussian elimination on rows packed into Python ints. The
two structured variants cover the only matrix shapes the degree-0 Koszul
complex produces, where every column has one or two nonzero entries.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np


def pack_rows(matrix) -> list[int]:
    """Pack a dense 0/1 matrix into one int bitmask per row."""
    rows = []
    for row in np.asarray(matrix, dtype=np.uint8) & 1:
        mask = 0
        for j in np.flatnonzero(row):
            mask |= 1 << int(j)
        rows.append(mask)
    return rows


def rank(rows: Iterable[int]) -> int:
    """Rank of a set of bitmask row vectors over GF(2)."""
    # basis keyed by leading bit, kept reduced on insertion
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            lead = r.bit_length() - 1
            pivot = basis.get(lead)
            if pivot is None:
                basis[lead] = r
                break
            r ^= pivot
    return len(basis)


def matrix_rank(matrix) -> int:
    m = np.asarray(matrix)
    if m.size == 0:
        return 0
    return rank(pack_rows(m))


def unit_column_rank(targets) -> int:
    """Rank of a matrix whose columns are unit vectors e_t for t in targets."""
    return int(np.unique(np.asarray(targets, dtype=np.int64)).size)


def incidence_rank(left, right, n_left: int, n_right: int) -> int:
    """Rank of a matrix with columns e_left[c] + e_right[c] on a split basis.

    Such a matrix is the incidence matrix of a bipartite multigraph, and its
    GF(2) rank is the size of a spanning forest: the number of edges that
    join two previously separate trees.
    """
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    if left.size == 0:
        return 0
    if left.max() >= n_left or right.max() >= n_right:
        raise ValueError("incidence endpoint out of range")
    codes = np.unique(left * n_right + right)
    parent = list(range(n_left + n_right))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    forest = 0
    for u, v in zip((codes // n_right).tolist(), (codes % n_right + n_left).tolist()):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            forest += 1
    return forest
