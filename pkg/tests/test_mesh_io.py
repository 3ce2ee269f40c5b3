import numpy as np
import pytest

from latticeph.mesh_io import (
    Mesh,
    MeshFormatError,
    PointCloud,
    SamplingError,
    load_geometry,
    parse_cloud,
    parse_off,
    sample_points,
    write_off,
)

TRIANGLE = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n"


def test_parse_minimal():
    mesh = parse_off(TRIANGLE)
    assert mesh.vertices.shape == (3, 3)
    assert mesh.faces.tolist() == [[0, 1, 2]]


def test_face_index_out_of_range_reports_line():
    with pytest.raises(MeshFormatError, match=r"line 6: face index out of range"):
        parse_off(TRIANGLE.replace("3 0 1 2", "3 0 1 9"))


def test_quad_fan_triangulation():
    text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"
    assert parse_off(text).faces.tolist() == [[0, 1, 2], [0, 2, 3]]


def test_comments_and_blank_lines_skipped():
    text = "# exported\nOFF\n\n3 1 0  # counts\n0 0 0\n1 0 0\n\n0 1 0\n3 0 1 2\n"
    assert parse_off(text).faces.shape == (1, 3)


@pytest.mark.parametrize("text,msg", [
    ("PLY\n3 1 0\n", "header"),
    ("OFF\n3 1\n", "counts"),
    ("OFF\n3 1 0\n0 0 0\n1 0 0\n", "counts mismatch"),
    ("OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n", "line 4: non-numeric"),
    (TRIANGLE + "0 0 0\n", "trailing"),
])
def test_malformed_off(text, msg):
    with pytest.raises(MeshFormatError, match=msg):
        parse_off(text)


def test_round_trip_exact():
    rng = np.random.default_rng(0)
    mesh = Mesh(rng.normal(size=(10, 3)), rng.integers(0, 10, size=(6, 3)))
    back = parse_off(write_off(mesh))
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_vertex_sampling_exhausts_set():
    mesh = parse_off(TRIANGLE)
    cloud = sample_points(mesh, 3, "vertices", seed=4)
    assert sorted(map(tuple, cloud.points)) == sorted(map(tuple, mesh.vertices))


def test_vertex_sampling_needs_enough_vertices():
    with pytest.raises(SamplingError, match="not enough vertices"):
        sample_points(parse_off(TRIANGLE), 4, "vertices")


def test_surface_samples_are_convex_combinations():
    mesh = parse_off(TRIANGLE)
    pts = sample_points(mesh, 1000, "surface", seed=9).points
    # on the unit triangle the barycentric weights are (1 - x - y, x, y)
    bary = np.stack([1 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]], axis=1)
    assert np.all(bary >= -1e-12)
    assert np.allclose(bary.sum(axis=1), 1.0, atol=1e-12, rtol=0)
    assert np.all(pts[:, 2] == 0)


def test_surface_samples_lie_on_triangle_planes():
    rng = np.random.default_rng(1)
    mesh = Mesh(rng.normal(size=(8, 3)), [[0, 1, 2], [3, 4, 5], [5, 6, 7]])
    pts = sample_points(mesh, 300, "surface", seed=2).points
    dist = []
    for p in pts:
        best = np.inf
        for f in mesh.faces:
            a, b, c = mesh.vertices[f]
            n = np.cross(b - a, c - a)
            best = min(best, abs(np.dot(p - a, n)) / np.linalg.norm(n))
        dist.append(best)
    assert max(dist) < 1e-9


def test_surface_sampling_degenerate_mesh():
    flat = Mesh([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])
    with pytest.raises(SamplingError, match="zero"):
        sample_points(flat, 5, "surface")


@pytest.mark.parametrize("mode", ["vertices", "surface"])
def test_sampling_deterministic(mode):
    rng = np.random.default_rng(3)
    mesh = Mesh(rng.normal(size=(50, 3)), rng.integers(0, 50, size=(40, 3)))
    a = sample_points(mesh, 20, mode, seed=7).points
    b = sample_points(mesh, 20, mode, seed=7).points
    assert a.tobytes() == b.tobytes()


def test_load_geometry_falls_back_to_surface(tmp_path):
    path = tmp_path / "tri.off"
    path.write_text(TRIANGLE)
    cloud = load_geometry(path, count=50, seed=0)
    assert len(cloud) == 50


def test_parse_cloud_and_normalize():
    cloud = parse_cloud("0 0 0\n2, 0, 0\n# c\n0 4 0\n")
    assert len(cloud) == 3
    norm = cloud.normalized().points
    assert np.ptp(norm, axis=0).max() == 1.0


def test_point_cloud_validation():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        PointCloud([[0.0, np.inf, 0.0]])
