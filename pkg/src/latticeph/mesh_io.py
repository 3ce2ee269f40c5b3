"""OFF mesh parsing and point-cloud sampling.

Sampling uses numpy's PCG64 bit generator (``numpy.random.default_rng``),
whose streams are stable across platforms for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np


class MeshFormatError(ValueError):
    """Malformed OFF or point-cloud text; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SamplingError(ValueError):
    pass


@dataclass
class Mesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64, triangulated

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")


@dataclass
class PointCloud:
    points: np.ndarray  # (N, 3) float64

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("point cloud must be a non-empty (N, d) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud has non-finite coordinates")

    def __len__(self) -> int:
        return self.points.shape[0]

    def normalized(self) -> "PointCloud":
        """Translate to the bounding-box center and scale into the unit box."""
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        extent = float((hi - lo).max())
        centered = self.points - (lo + hi) / 2
        if extent == 0.0:
            return PointCloud(centered)
        return PointCloud(centered / extent)


def _content_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _numbers(tokens, lineno, kind):
    try:
        return [kind(t) for t in tokens]
    except ValueError:
        raise MeshFormatError(f"non-numeric token in {tokens!r}", lineno) from None


def parse_off(text: str) -> Mesh:
    """Parse ASCII OFF text. Polygons with more than three vertices are
    fan-triangulated around their first vertex."""
    lines = iter(_content_lines(text))
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise MeshFormatError("empty input, expected 'OFF' header", 1) from None
    if tokens[0] != "OFF":
        raise MeshFormatError(f"expected 'OFF' header, got {tokens[0]!r}", lineno)
    # some writers put the counts on the header line itself
    rest = tokens[1:]
    if not rest:
        try:
            lineno, rest = next(lines)
        except StopIteration:
            raise MeshFormatError("missing counts line", lineno + 1) from None
    counts = _numbers(rest, lineno, int)
    if len(counts) != 3:
        raise MeshFormatError(f"counts line must be 'V F E', got {len(counts)} values", lineno)
    n_vert, n_face, _ = counts
    if n_vert < 0 or n_face < 0:
        raise MeshFormatError("negative element counts", lineno)

    vertices = np.empty((n_vert, 3), dtype=np.float64)
    for v in range(n_vert):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshFormatError(
                f"counts mismatch: expected {n_vert} vertices, found {v}", lineno
            ) from None
        coords = _numbers(tokens, lineno, float)
        if len(coords) < 3:
            raise MeshFormatError("vertex line needs 3 coordinates", lineno)
        vertices[v] = coords[:3]

    triangles = []
    for f in range(n_face):
        try:
            lineno, tokens = next(lines)
        except StopIteration:
            raise MeshFormatError(
                f"counts mismatch: expected {n_face} faces, found {f}", lineno
            ) from None
        values = _numbers(tokens, lineno, int) if tokens else []
        if not values or values[0] < 3 or len(values) < values[0] + 1:
            raise MeshFormatError("face line must be 'k i1 ... ik' with k >= 3", lineno)
        idx = values[1 : values[0] + 1]
        for i in idx:
            if not 0 <= i < n_vert:
                raise MeshFormatError(f"face index out of range: {i}", lineno)
        for t in range(1, len(idx) - 1):
            triangles.append((idx[0], idx[t], idx[t + 1]))

    extra = next(lines, None)
    if extra is not None:
        raise MeshFormatError("counts mismatch: trailing data after faces", extra[0])
    return Mesh(vertices, np.array(triangles, dtype=np.int64).reshape(-1, 3))


def write_off(mesh: Mesh) -> str:
    out = ["OFF", f"{len(mesh.vertices)} {len(mesh.faces)} 0"]
    out += [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
    out += ["3 " + " ".join(str(int(i)) for i in f) for f in mesh.faces]
    return "\n".join(out) + "\n"


def load_off(path) -> Mesh:
    return parse_off(Path(path).read_text())


def parse_cloud(text: str) -> PointCloud:
    """Whitespace- or comma-separated coordinates, one point per line."""
    rows = []
    for lineno, tokens in _content_lines(text.replace(",", " ")):
        coords = _numbers(tokens, lineno, float)
        if rows and len(coords) != len(rows[0]):
            raise MeshFormatError("inconsistent coordinate count", lineno)
        rows.append(coords)
    if not rows:
        raise MeshFormatError("no points found")
    return PointCloud(np.array(rows, dtype=np.float64))


def load_geometry(path, count: int = 3000, mode: str | None = None, seed: int = 0) -> PointCloud:
    """Load an OFF mesh (sampled to ``count`` points) or a plain point file."""
    text = Path(path).read_text()
    first = next(iter(_content_lines(text)), (0, [""]))[1][0]
    if first.startswith("OFF"):
        mesh = parse_off(text)
        if mode is None:
            mode = "vertices" if len(mesh.vertices) >= count else "surface"
        return sample_points(mesh, count, mode, seed)
    return parse_cloud(text)


def triangle_areas(mesh: Mesh) -> np.ndarray:
    a, b, c = (mesh.vertices[mesh.faces[:, i]] for i in range(3))
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def sample_points(mesh: Mesh, count: int, mode: str = "vertices", seed: int = 0) -> PointCloud:
    """Draw ``count`` points from ``mesh``.

    ``vertices`` samples the vertex set without replacement; ``surface`` picks
    triangles with probability proportional to area and a uniform point in
    each via barycentric coordinates.
    """
    if count < 1:
        raise SamplingError("count must be positive")
    rng = np.random.default_rng(seed)
    if mode == "vertices":
        if len(mesh.vertices) < count:
            raise SamplingError(
                f"not enough vertices: mesh has {len(mesh.vertices)}, need {count}"
            )
        pick = rng.choice(len(mesh.vertices), size=count, replace=False)
        return PointCloud(mesh.vertices[pick].copy())
    if mode == "surface":
        areas = triangle_areas(mesh) if len(mesh.faces) else np.zeros(0)
        total = areas.sum()
        if not total > 0:
            raise SamplingError("degenerate mesh: total surface area is zero")
        tri = rng.choice(len(areas), size=count, p=areas / total)
        bary = barycentric_uniform(rng, count)
        corners = mesh.vertices[mesh.faces[tri]]  # (count, 3, 3)
        return PointCloud(np.einsum("nk,nkd->nd", bary, corners))
    raise SamplingError(f"unknown sampling mode {mode!r}")


def barycentric_uniform(rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform barycentric weights on a triangle (square-root warp)."""
    u = rng.random(count)
    v = rng.random(count)
    su = np.sqrt(u)
    w = np.stack([1 - su, su * (1 - v), su * v], axis=1)
    return w
