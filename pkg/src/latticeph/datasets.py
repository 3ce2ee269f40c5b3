"""Synthetic point-cloud classes and featurized, split datasets.

Every item draws from its own PCG64 stream keyed by (seed, class index,
item index), so the dataset does not depend on generation order or on how
many worker processes featurize it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gridfile
from .mesh_io import PointCloud
from .persistence import BifiltrationInvariants, featurize

log = logging.getLogger(__name__)

SYNTHETIC_CLASSES = ("sphere", "torus", "clusters", "line")

TORUS_MAJOR = 1.0
TORUS_MINOR = 0.35
CLUSTER_CENTERS = np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
CLUSTER_WIDTH = 0.15
MANIFEST = "manifest.txt"


class DatasetError(ValueError):
    pass


def make_synthetic(kind: str, n_points: int = 300, noise_sigma: float = 0.05,
                   seed: int | np.random.SeedSequence = 0) -> PointCloud:
    if kind not in SYNTHETIC_CLASSES:
        raise DatasetError(f"unknown class {kind!r}; choose from {', '.join(SYNTHETIC_CLASSES)}")
    if n_points < 16:
        raise DatasetError("n_points must be >= 16")
    rng = np.random.default_rng(seed)
    if kind == "sphere":
        v = rng.normal(size=(n_points, 3))
        pts = v / np.linalg.norm(v, axis=1, keepdims=True)
    elif kind == "torus":
        u, w = rng.uniform(0, 2 * np.pi, size=(2, n_points))
        ring = TORUS_MAJOR + TORUS_MINOR * np.cos(w)
        pts = np.stack([ring * np.cos(u), ring * np.sin(u), TORUS_MINOR * np.sin(w)], axis=1)
    elif kind == "clusters":
        which = np.arange(n_points) % len(CLUSTER_CENTERS)
        pts = CLUSTER_CENTERS[which] + CLUSTER_WIDTH * rng.normal(size=(n_points, 3))
    else:
        t = rng.uniform(-1, 1, size=n_points)
        pts = np.stack([t, np.zeros(n_points), np.zeros(n_points)], axis=1)
    if noise_sigma > 0:
        pts = pts + noise_sigma * rng.normal(size=pts.shape)
    return PointCloud(pts)


@dataclass
class Item:
    invariants: BifiltrationInvariants
    label: int
    split: str  # "train" or "test"
    name: str = ""


@dataclass
class LabeledDataset:
    items: list[Item]
    class_names: list[str]
    split_seed: int = 0
    failures: list[str] = field(default_factory=list)

    def split(self, which: str) -> list[Item]:
        return [it for it in self.items if it.split == which]

    def arrays(self, which: str) -> tuple[np.ndarray, np.ndarray]:
        """Raw (N, 4, R, T) integer channels and labels for one split."""
        items = self.split(which)
        if not items:
            shape = self.items[0].invariants.channels().shape if self.items else (4, 0, 0)
            return np.zeros((0, *shape), dtype=np.int64), np.zeros(0, dtype=np.int64)
        return (
            np.stack([it.invariants.channels() for it in items]),
            np.array([it.label for it in items], dtype=np.int64),
        )

    @property
    def grid(self) -> tuple[int, int]:
        return self.items[0].invariants.shape


def _item_seed(seed: int, label: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(label, index))


def _featurize_item(args):
    kind, label, index, seed, n_points, noise, k, bins = args
    try:
        cloud = make_synthetic(kind, n_points, noise, _item_seed(seed, label, index))
        return featurize(cloud, k, *bins), None
    except (ValueError, FloatingPointError) as exc:
        return None, f"{kind}[{index}] (seed {seed}, spawn key {(label, index)}): {exc}"


def stratified_test_count(n: int, test_fraction: float) -> int:
    # half-up rounding
    return min(n, int(np.floor(n * test_fraction + 0.5)))


def build_dataset(classes, per_class: int, k: int = 20, bins=(20, 20), test_fraction: float = 0.1,
                  seed: int = 0, n_points: int = 300, noise_sigma: float = 0.05,
                  threads: int = 1) -> LabeledDataset:
    """Generate, featurize and split ``per_class`` clouds of every class.

    The test split takes round(per_class * test_fraction) items of each
    class, chosen by a permutation drawn from ``seed``. Items that fail to
    featurize are logged and dropped.
    """
    classes = list(classes)
    for c in classes:
        if c not in SYNTHETIC_CLASSES:
            raise DatasetError(f"unknown class {c!r}; choose from {', '.join(SYNTHETIC_CLASSES)}")
    if per_class < 2:
        raise DatasetError("per_class must be >= 2")
    if not 0.0 <= test_fraction < 1.0:
        raise DatasetError("test_fraction must be in [0, 1)")

    jobs = [
        (kind, label, i, seed, n_points, noise_sigma, k, tuple(bins))
        for label, kind in enumerate(classes)
        for i in range(per_class)
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_featurize_item, jobs, chunksize=4))
    else:
        results = [_featurize_item(job) for job in jobs]

    split_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(len(classes) + 1,)))
    items, failures = [], []
    for label, kind in enumerate(classes):
        test_rank = split_rng.permutation(per_class)
        n_test = stratified_test_count(per_class, test_fraction)
        for i in range(per_class):
            inv, err = results[label * per_class + i]
            if err is not None:
                log.warning("featurization failed: %s", err)
                failures.append(err)
                continue
            split = "test" if test_rank[i] < n_test else "train"
            items.append(Item(inv, label, split, f"{kind}_{i:04d}.mph"))
    return LabeledDataset(items, classes, seed, failures)


def save_dataset(ds: LabeledDataset, directory) -> None:
    """One MPHGRID file per item plus ``manifest.txt``.

    Manifest lines are ``<filename> <label> <split>``; a leading
    ``# classes`` line names the labels in order.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# classes " + " ".join(ds.class_names), f"# split_seed {ds.split_seed}"]
    for it in ds.items:
        gridfile.save(it.invariants, out / it.name)
        lines.append(f"{it.name} {it.label} {it.split}")
    with open(out / MANIFEST, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(directory) -> LabeledDataset:
    root = Path(directory)
    path = root / MANIFEST
    if not path.is_file():
        raise DatasetError(f"no {MANIFEST} in {root}")
    class_names, split_seed, items = None, 0, []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "#":
            if len(tokens) >= 2 and tokens[1] == "classes":
                class_names = tokens[2:]
            elif len(tokens) == 3 and tokens[1] == "split_seed":
                split_seed = int(tokens[2])
            continue
        if len(tokens) != 3 or tokens[2] not in ("train", "test"):
            raise DatasetError(f"{path}:{lineno}: expected '<file> <label> <train|test>'")
        try:
            label = int(tokens[1])
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: label must be an integer") from None
        try:
            inv = gridfile.load(root / tokens[0])
        except (OSError, ValueError) as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
        items.append(Item(inv, label, tokens[2], tokens[0]))
    if not items:
        raise DatasetError(f"{path} lists no items")
    if class_names is None:
        class_names = [str(c) for c in range(max(it.label for it in items) + 1)]
    if any(not 0 <= it.label < len(class_names) for it in items):
        raise DatasetError(f"{path}: label outside the {len(class_names)} named classes")
    if len({it.invariants.shape for it in items}) != 1:
        raise DatasetError(f"{path}: items have differing grid shapes")
    return LabeledDataset(items, class_names, split_seed)
