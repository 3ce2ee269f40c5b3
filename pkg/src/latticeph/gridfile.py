"""MPHGRID v1: text serialization of bifiltration invariants.

Layout::

    MPHGRID v1 channels=4 rows=<bins_r> cols=<bins_t>
    r_values <v0> <v1> ...
    t_values <v0> <v1> ...
    <channel 0, row 0 integers>
    ...
    <channel 3, row bins_r-1 integers>

Channels are hilb, xi0, xi1, xi2 in that order. Scale values are written as
shortest round-trip decimal reprs, so files are bit-exact across platforms.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .persistence import CHANNELS, BifiltrationInvariants, GridScales

_HEADER = re.compile(r"^MPHGRID v1 channels=(\d+) rows=(\d+) cols=(\d+)$")


class GridFormatError(ValueError):
    pass


def dumps(inv: BifiltrationInvariants) -> str:
    rows, cols = inv.shape
    lines = [
        f"MPHGRID v1 channels={len(CHANNELS)} rows={rows} cols={cols}",
        "r_values " + " ".join(repr(float(v)) for v in inv.scales.r_values),
        "t_values " + " ".join(repr(float(v)) for v in inv.scales.t_values),
    ]
    for grid in inv.channels():
        lines.extend(" ".join(str(int(v)) for v in row) for row in grid)
    return "\n".join(lines) + "\n"


def loads(text: str) -> BifiltrationInvariants:
    lines = text.splitlines()
    if not lines:
        raise GridFormatError("empty MPHGRID file")
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise GridFormatError(f"bad MPHGRID header: {lines[0]!r}")
    channels, rows, cols = (int(g) for g in m.groups())
    if channels != len(CHANNELS):
        raise GridFormatError(f"expected {len(CHANNELS)} channels, header says {channels}")
    expected = 3 + channels * rows
    if len(lines) != expected:
        raise GridFormatError(f"expected {expected} lines, found {len(lines)}")

    def scale_line(line, name, size):
        tokens = line.split()
        if not tokens or tokens[0] != name or len(tokens) != size + 1:
            raise GridFormatError(f"malformed {name} line")
        return np.array([float(t) for t in tokens[1:]])

    try:
        scales = GridScales(scale_line(lines[1], "r_values", rows), scale_line(lines[2], "t_values", cols))
        grid = np.array([[int(t) for t in line.split()] for line in lines[3:]], dtype=np.int64)
    except ValueError as exc:
        raise GridFormatError(str(exc)) from None
    if grid.shape != (channels * rows, cols):
        raise GridFormatError("grid rows have inconsistent lengths")
    grid = grid.reshape(channels, rows, cols)
    return BifiltrationInvariants(*grid, scales=scales)


def save(inv: BifiltrationInvariants, path) -> None:
    # newline="" keeps "\n" on every platform
    with open(path, "w", newline="") as fh:
        fh.write(dumps(inv))


def load(path) -> BifiltrationInvariants:
    return loads(Path(path).read_text())
