"""Featurize point clouds into bifiltration grids and train lattice or standard CNNs on them.

Subcommands: featurize, synth, train, eval. Each accepts ``--config FILE``
with ``key=value`` lines; explicit flags override the file, which overrides
built-in defaults. Exit status is 0 on success, 2 on bad input or
configuration, 3 when training produces a non-finite loss.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import gridfile
from .datasets import DatasetError, build_dataset, load_dataset, save_dataset
from .mesh_io import MeshFormatError, SamplingError, load_geometry
from .nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .nn.functional import NonFiniteError
from .nn.network import VARIANTS, build_network
from .nn.optim import Adam
from .nn.train import CSV_HEADER, confusion_matrix, evaluate, preprocess, train
from .persistence import featurize

log = logging.getLogger("latticeph")


class ConfigError(ValueError):
    pass


def parse_bins(text: str) -> tuple[int, int]:
    try:
        r, t = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"bins must look like 40x40, got {text!r}") from None
    if r < 2 or t < 2:
        raise ConfigError("bins must be at least 2x2")
    return r, t


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def parse_list(text) -> list[str]:
    return [c.strip() for c in str(text).split(",") if c.strip()]


@dataclass
class Opt:
    name: str
    type: Callable[[Any], Any] = str
    default: Any = None
    help: str = ""
    required: bool = False
    flag: bool = False

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


OPTIONS: dict[str, list[Opt]] = {
    "featurize": [
        Opt("input", Path, required=True, help="OFF mesh or whitespace-separated xyz point file"),
        Opt("k", int, 100, "codensity neighbor count"),
        Opt("bins", parse_bins, "40x40", "grid size RxT"),
        Opt("out", Path, required=True, help="output MPHGRID file"),
        Opt("normalize", parse_bool, False, "rescale the cloud into the unit box", flag=True),
        Opt("points", int, 3000, "points sampled from an OFF mesh"),
        Opt("mode", str, "auto", "OFF sampling mode: auto, vertices or surface"),
        Opt("seed", int, 0, "sampling seed"),
    ],
    "synth": [
        Opt("classes", parse_list, "sphere,torus,clusters", "comma-separated synthetic classes"),
        Opt("per-class", int, 20, "items per class"),
        Opt("k", int, 20, "codensity neighbor count"),
        Opt("bins", parse_bins, "20x20", "grid size RxT"),
        Opt("seed", int, 0, "generation and split seed"),
        Opt("out", Path, required=True, help="output dataset directory"),
        Opt("test-fraction", float, 0.1, "fraction of each class held out"),
        Opt("points", int, 300, "points per synthetic cloud"),
        Opt("noise", float, 0.05, "Gaussian noise sigma"),
        Opt("threads", int, 1, "featurization worker processes"),
    ],
    "train": [
        Opt("data", Path, required=True, help="dataset directory with manifest.txt"),
        Opt("variant", str, "lattice", "lattice or standard"),
        Opt("alpha", float, 0.5, "meet/join mixing weight"),
        Opt("lr", float, 2e-4, "Adam learning rate"),
        Opt("epochs", int, 300, "training epochs"),
        Opt("batch", int, 16, "minibatch size"),
        Opt("seed", int, 0, "initialization and shuffling seed"),
        Opt("curves", Path, Path("curves.csv"), "learning-curve CSV output"),
        Opt("checkpoint", Path, Path("model.ckpt"), "checkpoint output"),
        Opt("verbose", parse_bool, False, "log every optimizer step", flag=True),
    ],
    "eval": [
        Opt("checkpoint", Path, required=True, help="checkpoint from train"),
        Opt("data", Path, required=True, help="dataset directory with manifest.txt"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticeph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in OPTIONS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", type=Path, help="key=value defaults file")
        for o in opts:
            note = " (required)" if o.required else "" if o.default is None else f" (default {o.default})"
            if o.flag:
                p.add_argument(f"--{o.name}", dest=o.dest, action="store_const", const=True,
                               default=None, help=o.help + note)
            else:
                p.add_argument(f"--{o.name}", dest=o.dest, default=None, help=o.help + note)
    return parser


def read_config(path: Path) -> dict[str, str]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """Merge flags over config file over defaults, converting every value."""
    opts = OPTIONS[command]
    config = read_config(args.config) if args.config else {}
    unknown = set(config) - {o.dest for o in opts}
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    values = {}
    for o in opts:
        raw = getattr(args, o.dest)
        if raw is None:
            raw = config.get(o.dest, o.default)
        if raw is None:
            if o.required:
                raise ConfigError(f"--{o.name} is required")
            values[o.dest] = None
            continue
        try:
            values[o.dest] = o.type(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError):
            raise ConfigError(f"invalid value for --{o.name}: {raw!r}") from None
    return values


# --------------------------------------------------------------------------
# commands


def cmd_featurize(cfg) -> int:
    if cfg["k"] < 1:
        raise ConfigError("k must be positive")
    if cfg["points"] < 1:
        raise ConfigError("points must be positive")
    if cfg["mode"] not in ("auto", "vertices", "surface"):
        raise ConfigError("mode must be auto, vertices or surface")
    mode = None if cfg["mode"] == "auto" else cfg["mode"]
    try:
        cloud = load_geometry(cfg["input"], count=cfg["points"], mode=mode, seed=cfg["seed"])
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg['input']}: {exc.strerror}") from None
    if cfg["normalize"]:
        cloud = cloud.normalized()
    if cfg["k"] >= len(cloud):
        raise ConfigError(f"k must be < point count (k={cfg['k']}, n={len(cloud)})")
    inv = featurize(cloud, cfg["k"], *cfg["bins"])
    gridfile.save(inv, cfg["out"])
    print(f"hilb_max={int(inv.hilb.max())} xi0_sum={int(inv.xi0.sum())} "
          f"xi1_sum={int(inv.xi1.sum())} xi2_sum={int(inv.xi2.sum())}")
    return 0


def cmd_synth(cfg) -> int:
    if not cfg["classes"]:
        raise ConfigError("no classes given")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    ds = build_dataset(cfg["classes"], cfg["per_class"], k=cfg["k"], bins=cfg["bins"],
                       test_fraction=cfg["test_fraction"], seed=cfg["seed"],
                       n_points=cfg["points"], noise_sigma=cfg["noise"], threads=cfg["threads"])
    save_dataset(ds, cfg["out"])
    n_test = len(ds.split("test"))
    print(f"items={len(ds.items)} train={len(ds.items) - n_test} test={n_test} failures={len(ds.failures)}")
    return 0


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def cmd_train(cfg) -> int:
    if cfg["variant"] not in VARIANTS:
        raise ConfigError(f"variant must be one of {', '.join(VARIANTS)}")
    if not 0.0 <= cfg["alpha"] <= 1.0:
        raise ConfigError("alpha must be in [0,1]")
    if not cfg["lr"] > 0:
        raise ConfigError("lr must be positive")
    if cfg["epochs"] < 0:
        raise ConfigError("epochs must be >= 0")
    if cfg["batch"] < 1:
        raise ConfigError("batch must be >= 1")

    ds = load_dataset(cfg["data"])
    raw_train, y_train = ds.arrays("train")
    raw_test, y_test = ds.arrays("test")
    if len(raw_train) == 0:
        raise ConfigError("no training items")
    x_train, scale = preprocess(raw_train)
    x_test, _ = preprocess(raw_test, scale)

    try:
        network = build_network(cfg["variant"], in_channels=x_train.shape[1],
                                classes=len(ds.class_names), grid=ds.grid,
                                alpha=cfg["alpha"], seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    optimizer = Adam(network.named_params(), lr=cfg["lr"])
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"], spawn_key=(1,)))

    if cfg["verbose"]:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    with open(cfg["curves"], "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")

        def write(record):
            fh.write(record.csv_row() + "\n")
            fh.flush()

        history = train(network, optimizer, x_train, y_train, x_test, y_test,
                        epochs=cfg["epochs"], batch_size=cfg["batch"], rng=rng,
                        on_epoch=write, log_steps=cfg["verbose"])

    save_checkpoint(cfg["checkpoint"], network, optimizer, rng, extra={
        "feature_scale": scale.tolist(),
        "class_names": ds.class_names,
        "epochs": cfg["epochs"],
    })
    if history:
        last = history[-1]
        print(f"epoch={last.epoch} train_loss={_fmt(last.train_loss)} "
              f"train_acc={_fmt(last.train_acc)} test_acc={_fmt(last.test_acc)}")
    else:
        print("epoch=0 (untrained checkpoint written)")
    return 0


def cmd_eval(cfg) -> int:
    network, _, _, extra = load_checkpoint(cfg["checkpoint"])
    ds = load_dataset(cfg["data"])
    raw, y = ds.arrays("test")
    if len(raw) == 0:
        raise ConfigError("no test items")
    conf = network.config
    if raw.shape[1:] != (conf.in_channels, *conf.grid):
        raise ConfigError(
            f"data shape {raw.shape[1:]} does not match checkpoint input {(conf.in_channels, *conf.grid)}"
        )
    if len(ds.class_names) != conf.classes:
        raise ConfigError(f"data has {len(ds.class_names)} classes, checkpoint {conf.classes}")
    x, _ = preprocess(raw, np.asarray(extra["feature_scale"]))
    _, acc, pred = evaluate(network, x, y)
    cm = confusion_matrix(y, pred, conf.classes)
    width = max(len(n) for n in ds.class_names)
    print("confusion (rows=true, cols=predicted)")
    print(" " * width + " " + " ".join(f"{i:>4d}" for i in range(conf.classes)))
    for name, row in zip(ds.class_names, cm):
        print(f"{name:>{width}} " + " ".join(f"{v:>4d}" for v in row))
    print(f"test_acc={_fmt(acc)}")
    return 0


COMMANDS = {"featurize": cmd_featurize, "synth": cmd_synth, "train": cmd_train, "eval": cmd_eval}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        # non-finite values are checked explicitly and reported with exit code 3
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](cfg)
    except NonFiniteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DatasetError, MeshFormatError, SamplingError, CheckpointError,
            gridfile.GridFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
