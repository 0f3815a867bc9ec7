"""Figure rendering for the three artifact kinds.

Data arrays go onto the axes exactly as read from the CSVs; no resampling or
smoothing, so tests (and readers) can match plotted points against file
contents one to one.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "declaw-plots"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .io import PlotsError, read_decay, read_snapshot

_KINDS = ("decay", "snapshot", "sandwich")
_SPEC_KEYS = {"schema", "kind", "inputs", "scales", "output"}
_EXTENSIONS = (".png", ".svg")

FIGSIZE = (6.4, 4.0)
DPI = 120


def validate_spec(spec: dict) -> dict:
    unknown = set(spec) - _SPEC_KEYS
    if unknown:
        raise PlotsError(f"unknown figure-spec keys: {sorted(unknown)}")
    missing = {"kind", "inputs", "output"} - set(spec)
    if missing:
        raise PlotsError(f"missing figure-spec keys: {sorted(missing)}")
    if spec.get("schema", 1) != 1:
        raise PlotsError(f"unsupported figure-spec schema {spec['schema']!r}")
    if spec["kind"] not in _KINDS:
        raise PlotsError(f"unknown figure kind {spec['kind']!r}; expected one of {_KINDS}")
    inputs = list(spec["inputs"])
    if not inputs:
        raise PlotsError("figure spec needs at least one input CSV")
    if spec["kind"] == "snapshot" and len(inputs) != 1:
        raise PlotsError("snapshot figures take exactly one input")
    if spec["kind"] == "sandwich" and len(inputs) != 3:
        raise PlotsError("sandwich figures take exactly three inputs (lower, middle, upper)")
    ext = os.path.splitext(str(spec["output"]))[1].lower()
    if ext not in _EXTENSIONS:
        raise PlotsError(f"output extension must be one of {_EXTENSIONS}, got {ext!r}")
    scales = dict(spec.get("scales", {}))
    unknown_scales = set(scales) - {"x", "y"}
    if unknown_scales:
        raise PlotsError(f"unknown scale axes: {sorted(unknown_scales)}")
    for axis, value in scales.items():
        if value not in ("linear", "log"):
            raise PlotsError(f"scale for {axis!r} must be 'linear' or 'log'")
    return {"kind": spec["kind"], "inputs": inputs, "output": str(spec["output"]),
            "scales": scales}


def _apply_scales(ax, scales):
    if "x" in scales:
        ax.set_xscale(scales["x"])
    if "y" in scales:
        ax.set_yscale(scales["y"])


def _label(path):
    return os.path.splitext(os.path.basename(str(path)))[0]


def render_decay(ax, inputs, scales):
    for path in inputs:
        series = read_decay(path)
        stem = _label(path)
        ax.plot(series["t"], series["x_norm"], label=f"{stem}: x_norm")
        ax.plot(series["t"], series["l1_norm"], linestyle="--", label=f"{stem}: l1_norm")
        if "bound_rhs" in series:
            ax.plot(series["t"], series["bound_rhs"], linestyle=":",
                    label=f"{stem}: bound_rhs")
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    _apply_scales(ax, scales)


def render_snapshot(fig, ax, path, scales):
    snap = read_snapshot(path)
    if snap["dim"] == 1:
        ax.plot(snap["x"], snap["value"], label=_label(path))
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend(fontsize=8)
        _apply_scales(ax, scales)
    else:
        grid = snap["grid"]
        meta = snap["meta"]
        h = float(meta["cell_size"])
        ox, oy = (float(v) for v in meta["origin"])
        nx, ny = grid.shape
        extent = (ox, ox + nx * h, oy, oy + ny * h)
        im = ax.imshow(grid.T, origin="lower", extent=extent, aspect="equal")
        fig.colorbar(im, ax=ax, label="u")
        ax.set_xlabel("x")
        ax.set_ylabel("y")


def render_sandwich(ax, inputs, scales):
    labels = ("lower", "middle", "upper")
    styles = ({"linestyle": "--"}, {"linestyle": "-"}, {"linestyle": "--"})
    for path, label, style in zip(inputs, labels, styles):
        snap = read_snapshot(path)
        if snap["dim"] != 1:
            raise PlotsError("sandwich overlays are one-dimensional")
        ax.plot(snap["x"], snap["value"], label=f"{label} ({_label(path)})", **style)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(fontsize=8)
    _apply_scales(ax, scales)


def render(spec: dict):
    """Render one figure per the spec; returns (figure, output path).

    Output bytes are deterministic for fixed inputs: no embedded dates, a
    fixed hashsalt for SVG element ids, fixed figure geometry.
    """
    spec = validate_spec(spec)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    try:
        if spec["kind"] == "decay":
            render_decay(ax, spec["inputs"], spec["scales"])
        elif spec["kind"] == "snapshot":
            render_snapshot(fig, ax, spec["inputs"][0], spec["scales"])
        else:
            render_sandwich(ax, spec["inputs"], spec["scales"])
        fig.tight_layout()
        metadata = {"Date": None} if spec["output"].lower().endswith(".svg") else None
        fig.savefig(spec["output"], metadata=metadata)
    except Exception:
        plt.close(fig)
        raise
    return fig, spec["output"]
