"""Readers for the documented artifact formats.

Only the CSV/JSON files are touched; this package never imports the solver,
so it can render artifacts from any producer that follows the same schemas.
"""

from __future__ import annotations

import json
import os

import numpy as np

DECAY_COLUMNS = ["t", "x_norm", "l1_norm", "min", "max"]


class PlotsError(Exception):
    """Raised for schema mismatches and unusable inputs."""


def _read_rows(path):
    try:
        with open(path) as fh:
            header_line = fh.readline().strip()
            rows = [line.strip().split(",") for line in fh if line.strip()]
    except FileNotFoundError as exc:
        raise PlotsError(f"input not found: {path}") from exc
    if not header_line:
        raise PlotsError(f"empty CSV: {path}")
    header = header_line.split(",")
    if not rows:
        raise PlotsError(f"CSV has a header but no data rows: {path}")
    return header, rows


def read_decay(path):
    """Decay series: columns t,x_norm,l1_norm,min,max with optional bound_rhs."""
    header, rows = _read_rows(path)
    if header != DECAY_COLUMNS and header != DECAY_COLUMNS + ["bound_rhs"]:
        raise PlotsError(f"not a decay series (header {header}): {path}")
    data = np.array([[float(c) for c in row] for row in rows])
    if data.shape[1] != len(header):
        raise PlotsError(f"ragged decay rows in {path}")
    out = {name: data[:, i] for i, name in enumerate(header)}
    return out


def read_snapshot(path):
    """Grid snapshot: x[,y],value plus the JSON sidecar with the geometry."""
    header, rows = _read_rows(path)
    sidecar = str(path) + ".meta.json"
    if not os.path.exists(sidecar):
        raise PlotsError(f"missing snapshot sidecar: {sidecar}")
    with open(sidecar) as fh:
        meta = json.load(fh)
    data = np.array([[float(c) for c in row] for row in rows])
    if header == ["x", "value"]:
        if int(meta.get("dim", 1)) != 1 or data.shape[1] != 2:
            raise PlotsError(f"snapshot header/sidecar mismatch: {path}")
        return {"dim": 1, "x": data[:, 0], "value": data[:, 1], "meta": meta}
    if header == ["x", "y", "value"]:
        shape = tuple(int(n) for n in meta["shape"])
        if data.shape[0] != shape[0] * shape[1]:
            raise PlotsError(f"snapshot row count does not match sidecar shape: {path}")
        return {
            "dim": 2,
            "x": data[:, 0],
            "y": data[:, 1],
            "value": data[:, 2],
            "grid": data[:, 2].reshape(shape),
            "meta": meta,
        }
    raise PlotsError(f"not a grid snapshot (header {header}): {path}")
