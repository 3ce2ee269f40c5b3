import numpy as np
import pytest

from latticeph.datasets import (
    DatasetError,
    build_dataset,
    load_dataset,
    make_synthetic,
    save_dataset,
    stratified_test_count,
)
from latticeph.persistence import featurize


def test_sphere_without_noise_is_on_unit_sphere():
    pts = make_synthetic("sphere", 200, noise_sigma=0.0, seed=1).points
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) < 1e-12


def test_torus_without_noise_satisfies_implicit_equation():
    pts = make_synthetic("torus", 200, noise_sigma=0.0, seed=2).points
    ring = np.hypot(pts[:, 0], pts[:, 1]) - 1.0
    assert np.allclose(ring**2 + pts[:, 2] ** 2, 0.35**2, atol=1e-12)


def test_clusters_show_three_components():
    cloud = make_synthetic("clusters", 150, seed=3)
    inv = featurize(cloud, 20, 20, 20)
    # smallest nonzero scale, every point present
    assert inv.hilb[1, -1] >= 3
    assert inv.hilb[-1, -1] == 1


@pytest.mark.parametrize("kind", ["sphere", "torus", "clusters", "line"])
def test_generation_is_seeded(kind):
    a = make_synthetic(kind, 50, seed=7).points
    b = make_synthetic(kind, 50, seed=7).points
    c = make_synthetic(kind, 50, seed=8).points
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_unknown_class():
    with pytest.raises(DatasetError, match="unknown class"):
        make_synthetic("cube")


@pytest.mark.parametrize("n,frac,expected", [(20, 0.1, 2), (10, 0.1, 1), (5, 0.1, 1), (4, 0.1, 0), (20, 0.0, 0)])
def test_stratified_count_rounds_half_up(n, frac, expected):
    assert stratified_test_count(n, frac) == expected


@pytest.fixture(scope="module")
def small_ds():
    return build_dataset(["sphere", "torus", "clusters"], 20, k=10, bins=(8, 8), seed=5, n_points=60)


def test_split_sizes(small_ds):
    train, test = small_ds.split("train"), small_ds.split("test")
    assert (len(train), len(test)) == (54, 6)
    assert [sum(it.label == c for it in test) for c in range(3)] == [2, 2, 2]
    assert {it.name for it in train}.isdisjoint({it.name for it in test})


def test_item_shapes(small_ds):
    x, y = small_ds.arrays("train")
    assert x.shape == (54, 4, 8, 8) and y.shape == (54,)
    assert all(it.invariants.euler_holds() for it in small_ds.items)


def test_zero_test_fraction():
    ds = build_dataset(["sphere", "line"], 4, k=5, bins=(4, 4), test_fraction=0.0, n_points=20)
    assert ds.split("test") == []
    x, y = ds.arrays("test")
    assert x.shape == (0, 4, 4, 4) and y.shape == (0,)


def test_build_validation():
    with pytest.raises(DatasetError):
        build_dataset(["sphere"], 1)
    with pytest.raises(DatasetError):
        build_dataset(["sphere"], 4, test_fraction=1.0)


def test_save_load_round_trip(small_ds, tmp_path):
    save_dataset(small_ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back.class_names == small_ds.class_names
    assert back.split_seed == 5
    assert [(it.name, it.label, it.split) for it in back.items] == \
        [(it.name, it.label, it.split) for it in small_ds.items]
    assert all(a.invariants == b.invariants for a, b in zip(back.items, small_ds.items))


def test_manifest_layout(small_ds, tmp_path):
    save_dataset(small_ds, tmp_path)
    lines = (tmp_path / "manifest.txt").read_text().splitlines()
    assert lines[0] == "# classes sphere torus clusters"
    assert lines[2].split()[0] == "sphere_0000.mph"
    assert len(lines) == 62


def test_load_rejects_bad_manifest(tmp_path):
    with pytest.raises(DatasetError, match="manifest"):
        load_dataset(tmp_path)
    (tmp_path / "manifest.txt").write_text("a.mph 0 validation\n")
    with pytest.raises(DatasetError, match="train\\|test"):
        load_dataset(tmp_path)


def test_worker_count_does_not_change_result():
    args = dict(classes=["sphere", "clusters"], per_class=4, k=5, bins=(6, 6), seed=2, n_points=30)
    one = build_dataset(threads=1, **args)
    two = build_dataset(threads=2, **args)
    assert [(it.name, it.split) for it in one.items] == [(it.name, it.split) for it in two.items]
    assert all(a.invariants == b.invariants for a, b in zip(one.items, two.items))
