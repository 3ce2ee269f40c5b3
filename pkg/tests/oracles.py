"""Brute-force references, deliberately sharing no code with the package.

Everything here works on raw chain groups: vertices as unit vectors in
GF(2)^n, edges as e_u + e_v, with ranks from dense row reduction.
"""

import itertools

import numpy as np


def gf2_rank_dense(rows) -> int:
    m = np.array(rows, dtype=np.uint8) % 2
    if m.size == 0:
        return 0
    m = m.reshape(len(rows), -1).copy()
    rank = 0
    for col in range(m.shape[1]):
        pivots = np.flatnonzero(m[rank:, col]) + rank
        if pivots.size == 0:
            continue
        p = pivots[0]
        m[[rank, p]] = m[[p, rank]]
        others = np.flatnonzero(m[:, col])
        others = others[others != rank]
        m[others] ^= m[rank]
        rank += 1
        if rank == m.shape[0]:
            break
    return rank


def _unit(n, v):
    e = np.zeros(n, dtype=np.uint8)
    e[v] = 1
    return e


def _cell(d, rho, r, t):
    """(vertex vectors, edge boundary vectors) of the Rips graph at (r, t)."""
    n = len(rho)
    verts = [v for v in range(n) if rho[v] <= t]
    edges = []
    for u, v in itertools.combinations(verts, 2):
        if d[u][v] <= r:
            edges.append(_unit(n, u) ^ _unit(n, v))
    return [_unit(n, v) for v in verts], edges


def hilbert_oracle(d, rho, r_values, t_values):
    """#vertices - rank of the vertex-edge boundary matrix, per cell."""
    out = np.zeros((len(r_values), len(t_values)), dtype=np.int64)
    for i, r in enumerate(r_values):
        for j, t in enumerate(t_values):
            verts, edges = _cell(d, rho, r, t)
            out[i, j] = len(verts) - gf2_rank_dense(edges)
    return out


def betti_oracle(d, rho, r_values, t_values):
    """Koszul homology of H0 computed on chain-level lifts.

    With C(b) the vertex span and B(b) the boundary span at cell b, so that
    M(b) = C(b)/B(b), the three homology groups at a are

      xi0 = C(a) / (B(a) + C(a-e1) + C(a-e2))
      xi1 = {(x, y) in C(a-e1) + C(a-e2): x + y in B(a)} / (diag C(a-e1-e2) + B(a-e1) + B(a-e2))
      xi2 = {z in C(a-e1-e2): z in B(a-e1) and z in B(a-e2)} / B(a-e1-e2)
    """
    n = len(rho)
    R, T = len(r_values), len(t_values)
    zero = np.zeros(n, dtype=np.uint8)

    def cell(i, j):
        if i < 0 or j < 0:
            return [], []
        return _cell(d, rho, r_values[i], t_values[j])

    def rk(vs):
        return gf2_rank_dense(vs) if vs else 0

    xi = np.zeros((3, R, T), dtype=np.int64)
    for i in range(R):
        for j in range(T):
            Ca, Ba = cell(i, j)
            C1, B1 = cell(i - 1, j)
            C2, B2 = cell(i, j - 1)
            C12, B12 = cell(i - 1, j - 1)

            xi[0, i, j] = rk(Ca) - rk(Ba + C1 + C2)

            # dim of {(x, y): x + y in B(a)} = dim(C1 + C2) - rank of (x, y) -> [x + y] in M(a)
            sum_map_rank = rk(C1 + C2 + Ba) - rk(Ba)
            cycles = len(C1) + len(C2) - sum_map_rank
            boundaries = rk(
                [np.concatenate([z, z]) for z in C12]
                + [np.concatenate([b, zero]) for b in B1]
                + [np.concatenate([zero, b]) for b in B2]
            )
            xi[1, i, j] = cycles - boundaries

            # B1 and B2 lie inside C12's span whenever i, j >= 1
            inter = rk(B1) + rk(B2) - rk(B1 + B2) if i > 0 and j > 0 else 0
            xi[2, i, j] = inter - rk(B12)
    return xi


def lattice_conv_oracle(f, g, xs, ys, op):
    """Nested-loop lattice convolution on one sample: f (C,H,W), g (O,C,sx,sy)."""
    C, H, W = f.shape
    O = g.shape[0]
    out = np.zeros((O, H, W))
    for j in range(O):
        for x in range(H):
            for y in range(W):
                s = 0.0
                for i in range(C):
                    for ka, a in enumerate(xs):
                        for kb, b in enumerate(ys):
                            s += f[i, op(x, a), op(y, b)] * g[j, i, ka, kb]
                out[j, x, y] = s
    return out


def conv_oracle(f, w, pad_before):
    """Nested-loop zero-padded cross-correlation, output the size of the input."""
    C, H, W = f.shape
    O, _, kh, kw = w.shape
    out = np.zeros((O, H, W))
    for o in range(O):
        for x in range(H):
            for y in range(W):
                s = 0.0
                for i in range(C):
                    for a in range(kh):
                        for b in range(kw):
                            px, py = x + a - pad_before, y + b - pad_before
                            if 0 <= px < H and 0 <= py < W:
                                s += f[i, px, py] * w[o, i, a, b]
                out[o, x, y] = s
    return out


def central_difference(fn, x, h=1e-5):
    """Gradient of scalar fn at array x (perturbed in place, restored)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        up = fn()
        x[idx] = old - h
        down = fn()
        x[idx] = old
        grad[idx] = (up - down) / (2 * h)
    return grad


def max_relative_error(analytic, numeric, floor=1e-6):
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
