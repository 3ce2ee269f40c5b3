"""Checkpoint files: an uncompressed zip of .npy arrays plus a JSON header.

Entries are written with a fixed timestamp so identical training runs give
byte-identical checkpoints.
"""

from __future__ import annotations

import json
import zipfile

import numpy as np

from .network import Network, NetworkConfig, build_network
from .optim import Adam

FORMAT = "latticeph-checkpoint"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, network: Network, optimizer: Adam, rng: np.random.Generator,
                    extra: dict | None = None) -> None:
    params = network.named_params()
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "network": network.config.to_dict(),
        "shapes": {k: list(p.shape) for k, p in params.items()},
        "adam": optimizer.state(),
        "rng": rng.bit_generator.state,
        "extra": extra or {},
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    for k, p in params.items():
        arrays[f"param/{k}"] = p
        arrays[f"adam_m/{k}"] = optimizer.m[k]
        arrays[f"adam_v/{k}"] = optimizer.v[k]
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arr), allow_pickle=False)


def load_checkpoint(path):
    """Returns (network, optimizer, rng, extra)."""
    try:
        data = np.load(path, allow_pickle=False)
        meta = json.loads(bytes(data["meta"]).decode())
    except (OSError, ValueError, KeyError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if meta.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} file")
    if meta.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {meta.get('version')}, expected {VERSION}")

    config = NetworkConfig.from_dict(meta["network"])
    network = build_network(**{k: v for k, v in config.__dict__.items()})
    params = network.named_params()
    if set(params) != set(meta["shapes"]):
        raise CheckpointError("checkpoint parameters do not match the network layout")
    adam = meta["adam"]
    optimizer = Adam(params, lr=adam["lr"], beta1=adam["beta1"], beta2=adam["beta2"], eps=adam["eps"])
    optimizer.t = adam["t"]
    for k, p in params.items():
        stored = data[f"param/{k}"]
        if stored.shape != p.shape:
            raise CheckpointError(f"shape mismatch for {k}: {stored.shape} vs {p.shape}")
        p[...] = stored
        optimizer.m[k][...] = data[f"adam_m/{k}"]
        optimizer.v[k][...] = data[f"adam_v/{k}"]
    rng = np.random.default_rng()
    rng.bit_generator.state = meta["rng"]
    return network, optimizer, rng, meta["extra"]
