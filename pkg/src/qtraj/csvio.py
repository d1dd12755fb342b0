"""Schema-versioned CSV output and input.

Layout: one comment line ``# schema=<id>``, one header row, then data rows.
``t`` is always the first column; floats carry 17 significant digits so
files round-trip bit-exactly.  Consumers parse by column name, never by
position.
"""

from __future__ import annotations

import io
import os

import numpy as np

__all__ = ["write_csv", "read_csv"]


def write_csv(path, schema: str, columns: dict) -> None:
    """Write named columns (equal-length 1-d arrays) under a schema id."""
    names = list(columns.keys())
    if not names:
        raise ValueError("no columns to write")
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    length = arrays[0].shape[0]
    for n, a in zip(names, arrays):
        if a.shape != (length,):
            raise ValueError(f"column {n!r} has shape {a.shape}, expected ({length},)")
    buf = io.StringIO()
    buf.write(f"# schema={schema}\n")
    buf.write(",".join(names) + "\n")
    for i in range(length):
        buf.write(",".join(f"{a[i]:.17g}" for a in arrays) + "\n")
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())
    os.replace(tmp, path)


def read_csv(path):
    """Read a schema-versioned CSV; returns (schema, {name: array})."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# schema="):
            raise ValueError(f"{path}: missing schema line")
        schema = first[len("# schema="):]
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: missing header row")
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        cols = {n: np.empty(0) for n in names}
    else:
        if data.shape[1] != len(names):
            raise ValueError(f"{path}: {data.shape[1]} columns, header names {len(names)}")
        cols = {n: data[:, i].copy() for i, n in enumerate(names)}
    return schema, cols
