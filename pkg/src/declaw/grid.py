"""Uniform-grid cell-average functions, window norms, and lattice utilities.

Grid functions live on 1D or 2D boxes with one cell size for every axis and
either periodic or constant-far-field boundaries.  The sliding-window norms
place window centers at cell centers only (membership by cell-center
distance), so discrete values track the continuum ones to about one cell
volume; tolerance accounting throughout the package budgets exactly that.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    GenerationError,
    ShapeError,
    ValidationError,
)


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class FarField:
    value: float


@dataclass(frozen=True)
class GridFunction:
    """Cell averages on a uniform box grid.

    origin: lower corner of the box; cells are [origin + i*h, origin + (i+1)*h).
    values: shape (n,) in 1D or (nx, ny) in 2D.
    """

    origin: np.ndarray
    cell_size: float
    values: np.ndarray
    bc: object

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).copy()
        if vals.ndim not in (1, 2):
            raise ValidationError("values must be a 1-d or 2-d array")
        if vals.size == 0:
            raise ValidationError("values must be nonempty")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("values must be finite")
        origin = np.atleast_1d(np.asarray(self.origin, dtype=float)).copy()
        if origin.size != vals.ndim:
            raise ValidationError("origin dimension must match values dimension")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ValidationError("cell_size must be positive and finite")
        if not isinstance(self.bc, (Periodic, FarField)):
            raise ValidationError("bc must be Periodic or FarField")
        if isinstance(self.bc, FarField) and not math.isfinite(self.bc.value):
            raise ValidationError("far-field value must be finite")
        vals.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", origin)

    # -- geometry ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    @property
    def cell_volume(self) -> float:
        return self.cell_size ** self.dim

    @property
    def extent(self) -> np.ndarray:
        return self.cell_size * np.asarray(self.shape, dtype=float)

    def axis_centers(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.cell_size

    def mean(self) -> float:
        return float(self.values.mean())

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def far_value(self):
        return self.bc.value if isinstance(self.bc, FarField) else None

    def effective_range(self):
        """Range of values including the far-field constant when present."""
        lo = float(self.values.min())
        hi = float(self.values.max())
        if isinstance(self.bc, FarField):
            lo = min(lo, self.bc.value)
            hi = max(hi, self.bc.value)
        return lo, hi

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.origin, self.cell_size, values, self.bc)

    def same_geometry(self, other: "GridFunction") -> bool:
        return (
            self.dim == other.dim
            and self.shape == other.shape
            and np.allclose(self.origin, other.origin, rtol=0.0, atol=1e-12)
            and abs(self.cell_size - other.cell_size) <= 1e-12 * self.cell_size
        )

    @staticmethod
    def from_callable(origin, cell_size, shape, bc, fn, subsamples: int = 4) -> "GridFunction":
        """Cell averages of ``fn`` by the midpoint rule with ``subsamples``
        points per cell per axis."""
        origin = np.atleast_1d(np.asarray(origin, dtype=float))
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        h = float(cell_size)
        offs = (np.arange(subsamples) + 0.5) / subsamples * h
        if len(shape) == 1:
            base = origin[0] + np.arange(shape[0]) * h
            pts = base[:, None] + offs[None, :]
            vals = np.mean(fn(pts), axis=1)
        else:
            bx = origin[0] + np.arange(shape[0]) * h
            by = origin[1] + np.arange(shape[1]) * h
            px = (bx[:, None] + offs[None, :]).ravel()
            py = (by[:, None] + offs[None, :]).ravel()
            fx = fn(px[:, None], py[None, :])
            fx = fx.reshape(shape[0], subsamples, shape[1], subsamples)
            vals = fx.mean(axis=(1, 3))
        return GridFunction(origin, h, vals, bc)


def constant_like(g: GridFunction, value: float) -> GridFunction:
    return g.with_values(np.full(g.shape, float(value)))


# -- simple integrals --------------------------------------------------------


def l1_plus(u: GridFunction, v: GridFunction) -> float:
    """Integral of the positive part of (u - v) on their common grid."""
    if not u.same_geometry(v):
        raise ShapeError("l1_plus requires identical grids")
    return float(np.maximum(u.values - v.values, 0.0).sum() * u.cell_volume)


def l1_distance(u: GridFunction, v: GridFunction) -> float:
    if not u.same_geometry(v):
        raise ShapeError("l1_distance requires identical grids")
    return float(np.abs(u.values - v.values).sum() * u.cell_volume)


def superlevel_measure(g: GridFunction, level: float) -> float:
    """Cell-counting measure of {|g| > level}; +inf when the far field itself
    exceeds the level (the continuum set has infinite measure)."""
    if not level > 0:
        raise DomainError("level must be positive")
    if isinstance(g.bc, Periodic):
        raise ConfigurationError("superlevel measure applies to far-field grids")
    if abs(g.bc.value) > level:
        return math.inf
    return float(np.count_nonzero(np.abs(g.values) > level) * g.cell_volume)


# -- window norms ------------------------------------------------------------


def _reach(extent: float, h: float) -> int:
    """Largest j >= 0 with j*h strictly inside the window extent."""
    tol = 1e-12 * max(1.0, extent)
    return max(int(math.floor((extent - tol) / h)), 0)


def _moving_sum_1d(padded: np.ndarray, width: int) -> np.ndarray:
    c = np.concatenate(([0.0], np.cumsum(padded)))
    return c[width:] - c[:-width]


def _pad_abs_1d(g: GridFunction, m: int) -> np.ndarray:
    a = np.abs(g.values)
    if m == 0:
        return a
    if isinstance(g.bc, Periodic):
        n = a.size
        if m <= n:
            return np.concatenate((a[-m:], a, a[:m]))
        reps = -(-m // n)
        tiled = np.tile(a, 2 * reps + 1)
        mid = reps * n
        return tiled[mid - m: mid + n + m]
    c = abs(g.bc.value)
    return np.concatenate((np.full(m, c), a, np.full(m, c)))


def _pad_abs_2d(g: GridFunction, m: int) -> np.ndarray:
    a = np.abs(g.values)
    if m == 0:
        return a
    if isinstance(g.bc, Periodic):
        nx, ny = a.shape
        if m <= nx and m <= ny:
            return np.pad(a, m, mode="wrap")
        rx, ry = -(-m // nx), -(-m // ny)
        tiled = np.tile(a, (2 * rx + 1, 2 * ry + 1))
        return tiled[rx * nx - m: (rx + 1) * nx + m, ry * ny - m: (ry + 1) * ny + m]
    c = abs(g.bc.value)
    return np.pad(a, m, mode="constant", constant_values=c)


def _window_sums(g: GridFunction, half_widths) -> tuple:
    """Window sums centered at every cell plus the number of member offsets.

    half_widths: for each row offset dj the half-width of the column span
    (1D: single entry dict {0: m}).  Returns (sums, count).
    """
    if g.dim == 1:
        m = half_widths[0]
        padded = _pad_abs_1d(g, m)
        return _moving_sum_1d(padded, 2 * m + 1), 2 * m + 1
    m = max(abs(dj) for dj in half_widths)
    mk = max(half_widths.values())
    pad = _pad_abs_2d(g, max(m, mk))
    p = max(m, mk)
    nx, ny = g.shape
    csum = np.concatenate((np.zeros((pad.shape[0], 1)), np.cumsum(pad, axis=1)), axis=1)
    total = np.zeros((nx, ny))
    count = 0
    for dj, kj in half_widths.items():
        rows = csum[p + dj: p + dj + nx, :]
        lo = p - kj
        width = 2 * kj + 1
        total += rows[:, lo + width: lo + width + ny] - rows[:, lo: lo + ny]
        count += width
    return total, count


def _ball_half_widths(dim: int, radius: float, h: float) -> dict:
    m = _reach(radius, h)
    if dim == 1:
        return {0: m}
    out = {}
    for dj in range(-m, m + 1):
        rem = radius * radius - (dj * h) ** 2
        if rem <= 0:
            continue
        out[dj] = _reach(math.sqrt(rem), h)
    return out


def _box_half_widths(dim: int, half_extents, h: float) -> dict:
    he = np.atleast_1d(np.asarray(half_extents, dtype=float))
    if he.size == 1 and dim == 2:
        he = np.repeat(he, 2)
    if he.size != dim:
        raise ConfigurationError("one half-extent per axis required")
    if np.any(he < h):
        raise ConfigurationError("window half-extents must be at least one cell")
    if dim == 1:
        return {0: _reach(he[0], h)}
    mx = _reach(he[0], h)
    ky = _reach(he[1], h)
    return {dj: ky for dj in range(-mx, mx + 1)}


def x_norm(g: GridFunction, radius: float = 1.0) -> float:
    """Largest mass of |g| seen by a ball window of the given radius.

    Window centers run over all cell centers; for far-field grids the
    constant far window is also a candidate.
    """
    if radius < g.cell_size:
        raise ConfigurationError("window radius must be at least one cell")
    hw = _ball_half_widths(g.dim, radius, g.cell_size)
    sums, count = _window_sums(g, hw)
    best = float(sums.max())
    if isinstance(g.bc, FarField):
        best = max(best, abs(g.bc.value) * count)
    return best * g.cell_volume


def v_norm(g: GridFunction, half_extents) -> float:
    """Rectangular-window variant of :func:`x_norm` (open box windows)."""
    hw = _box_half_widths(g.dim, half_extents, g.cell_size)
    sums, count = _window_sums(g, hw)
    best = float(sums.max())
    if isinstance(g.bc, FarField):
        best = max(best, abs(g.bc.value) * count)
    return best * g.cell_volume


def window_measure(g: GridFunction, radius: float = 1.0) -> float:
    """Discrete measure of the ball window (count of member cells times volume)."""
    hw = _ball_half_widths(g.dim, radius, g.cell_size)
    count = sum(2 * k + 1 for k in hw.values()) if g.dim == 2 else 2 * hw[0] + 1
    return count * g.cell_volume


# -- window coverings (norm equivalence constants) ---------------------------


def covering_centers(dim: int, outer: str, inner: str) -> np.ndarray:
    """Translate centers such that unit ``inner`` windows cover the closed
    unit ``outer`` window; the count is the equivalence constant."""
    if dim == 1:
        return np.array([[-0.5], [0.5]])
    if outer == "box" and inner == "ball":
        return np.array([[sx * 0.6, sy * 0.6] for sx in (-1, 1) for sy in (-1, 1)])
    return np.array([[sx * 0.5, sy * 0.5] for sx in (-1, 1) for sy in (-1, 1)])


def verify_covering(dim: int, outer: str, inner: str, centers, margin: float = 0.0,
                    samples: int = 301) -> bool:
    """Dense-sample check that the closed unit outer window is covered by the
    inner windows shrunk by ``margin`` (the slack that absorbs snapping of
    centers to the grid)."""
    centers = np.asarray(centers, dtype=float)
    axes = [np.linspace(-1.0, 1.0, samples)] * dim
    if dim == 1:
        pts = axes[0][:, None]
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.stack((gx.ravel(), gy.ravel()), axis=1)
    if outer == "ball":
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
    size = 1.0 - margin
    if size <= 0:
        return False
    covered = np.zeros(len(pts), dtype=bool)
    for c in centers:
        d = pts - c[None, :]
        if inner == "ball":
            covered |= np.linalg.norm(d, axis=1) < size
        else:
            covered |= np.all(np.abs(d) < size, axis=1)
    return bool(covered.all())


# -- lattices ----------------------------------------------------------------


@dataclass(frozen=True)
class LatticeSpec:
    """Period lattice given by basis columns, with the dual basis cached."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).copy()
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] not in (1, 2):
            raise ValidationError("basis must be a 1x1 or 2x2 matrix")
        det = float(np.linalg.det(b))
        if abs(det) <= 1e-10:
            raise ValidationError("lattice basis is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        dual = np.linalg.inv(b).T
        if not np.allclose(dual.T @ b, np.eye(b.shape[0]), rtol=0.0, atol=1e-10):
            raise ValidationError("dual basis inconsistent with basis")
        dual.setflags(write=False)
        object.__setattr__(self, "_dual", dual)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dual(self) -> np.ndarray:
        return self._dual

    def is_axis_aligned(self) -> bool:
        return bool(np.all(self.basis == np.diag(np.diag(self.basis))))


def _subspace_frames(dim: int, subspaces):
    frames = []
    for vs in subspaces:
        v = np.atleast_2d(np.asarray(vs, dtype=float))
        if v.shape[1] != dim:
            raise ValidationError("subspace direction vectors must have the lattice dimension")
        rank = np.linalg.matrix_rank(v)
        if rank >= dim:
            raise ValidationError("subspaces must be proper (dimension < dim)")
        if rank == 0:
            frames.append(np.zeros((dim, 0)))
        else:
            q, _ = np.linalg.qr(v.T)
            frames.append(q[:, :rank])
    return frames


def _integer_vectors(dim: int, bound: int) -> np.ndarray:
    rng = np.arange(-bound, bound + 1)
    if dim == 1:
        xs = rng[rng != 0][:, None]
        return xs.astype(float)
    gx, gy = np.meshgrid(rng, rng, indexing="ij")
    pts = np.stack((gx.ravel(), gy.ravel()), axis=1)
    return pts[np.any(pts != 0, axis=1)].astype(float)


def verify_lattice_basis(basis, subspaces, xi_bound: int, tol: float = 1e-9) -> bool:
    """True iff no nonzero lattice point with coordinates up to ``xi_bound``
    lies within ``tol`` of any of the subspaces."""
    basis = np.asarray(basis, dtype=float)
    dim = basis.shape[0]
    frames = _subspace_frames(dim, subspaces)
    xs = _integer_vectors(dim, xi_bound)
    pts = xs @ basis.T
    for q in frames:
        if q.shape[1] == 0:
            dist = np.linalg.norm(pts, axis=1)
        else:
            proj = pts @ q
            dist2 = np.einsum("ij,ij->i", pts, pts) - np.einsum("ij,ij->i", proj, proj)
            dist = np.sqrt(np.maximum(dist2, 0.0))
        if np.any(dist <= tol):
            return False
    return True


def make_lattice(dim: int, subspaces, xi_bound: int = 50, seed: int = 0) -> LatticeSpec:
    """Draw a seeded random basis whose lattice avoids the given proper
    subspaces for all integer coordinates up to ``xi_bound``.

    The finite coordinate bound approximates the countable quantifier; it is
    recorded on the result as ``verified_xi_bound``.
    """
    if dim == 1 and not subspaces:
        lattice = LatticeSpec(np.array([[1.0]]))
        object.__setattr__(lattice, "verified_xi_bound", xi_bound)
        return lattice
    rng = np.random.default_rng(seed)
    for _ in range(100):
        basis = rng.normal(size=(dim, dim))
        if abs(np.linalg.det(basis)) <= 1e-6:
            continue
        if verify_lattice_basis(basis, subspaces, xi_bound):
            lattice = LatticeSpec(basis)
            object.__setattr__(lattice, "verified_xi_bound", xi_bound)
            return lattice
    raise GenerationError("no admissible lattice basis found in 100 draws")


# -- periodization -----------------------------------------------------------


def snap_period(lattice: LatticeSpec, r: float, cell_size: float) -> tuple:
    """Snap ``r`` so every period r*basis[i,i] is a whole number of cells.

    Returns (snapped r, cell counts per axis).  The lattice must be
    axis-aligned with positive diagonal for a box fundamental cell.
    """
    if not lattice.is_axis_aligned():
        raise ConfigurationError("periodization requires an axis-aligned lattice basis")
    diag = np.diag(lattice.basis)
    if np.any(diag <= 0):
        raise ConfigurationError("lattice basis diagonal must be positive")
    k0 = round(r * diag[0] / cell_size)
    if k0 < 1:
        raise ConfigurationError("period must be at least one cell")
    r_snapped = k0 * cell_size / diag[0]
    counts = []
    for d in diag:
        k = r_snapped * d / cell_size
        k_int = round(k)
        if k_int < 1 or abs(k - k_int) > 1e-9:
            raise ConfigurationError(
                f"period {r_snapped * d!r} is not a whole number of cells after snapping"
            )
        counts.append(int(k_int))
    return float(r_snapped), tuple(counts)


def _periodize(u0: GridFunction, lattice: LatticeSpec, r: float, reduce_at) -> GridFunction:
    if not isinstance(u0.bc, FarField) or u0.bc.value != 0.0:
        raise ConfigurationError("periodization requires far-field-zero data")
    _, counts = snap_period(lattice, r, u0.cell_size)
    out = np.zeros(counts)
    if u0.dim == 1:
        idx = np.arange(u0.shape[0]) % counts[0]
        reduce_at(out, idx, u0.values)
    else:
        ix = np.arange(u0.shape[0]) % counts[0]
        iy = np.arange(u0.shape[1]) % counts[1]
        reduce_at(out, (ix[:, None], iy[None, :]), u0.values)
    return GridFunction(u0.origin, u0.cell_size, out, Periodic())


def periodize_sup(u0: GridFunction, lattice: LatticeSpec, r: float) -> GridFunction:
    """Periodic upper hull: at each point the max of u0 over all lattice
    translates (the zero far field contributes, so the result is >= 0)."""
    return _periodize(u0, lattice, r, np.maximum.at)


def periodize_inf(u0: GridFunction, lattice: LatticeSpec, r: float) -> GridFunction:
    """Periodic lower hull, symmetric to :func:`periodize_sup`."""
    return _periodize(u0, lattice, r, np.minimum.at)


def shift_mean(g: GridFunction, target: float) -> GridFunction:
    """Add the constant that moves the mean to ``target`` (to 1e-12)."""
    if not isinstance(g.bc, Periodic):
        raise ConfigurationError("shift_mean applies to periodic grids")
    out = g.values + (target - g.mean())
    out = out + (target - float(out.mean()))
    return g.with_values(out)


# -- serialization -----------------------------------------------------------


def _bc_to_dict(bc) -> dict:
    if isinstance(bc, Periodic):
        return {"kind": "periodic"}
    return {"kind": "farfield", "value": repr(bc.value)}


def _bc_from_dict(d: dict):
    if d["kind"] == "periodic":
        return Periodic()
    if d["kind"] == "farfield":
        return FarField(float(d["value"]))
    raise ValidationError(f"unknown bc kind {d['kind']!r}")


def sidecar_path(csv_path) -> str:
    return str(csv_path) + ".meta.json"


def save_grid(g: GridFunction, csv_path) -> None:
    """Write the snapshot CSV (header x[,y],value) and its JSON sidecar."""
    lines = []
    if g.dim == 1:
        lines.append("x,value")
        xs = g.axis_centers(0)
        for x, v in zip(xs, g.values):
            lines.append(f"{float(x)!r},{float(v)!r}")
    else:
        lines.append("x,y,value")
        xs = g.axis_centers(0)
        ys = g.axis_centers(1)
        for i in range(g.shape[0]):
            for j in range(g.shape[1]):
                lines.append(f"{float(xs[i])!r},{float(ys[j])!r},{float(g.values[i, j])!r}")
    with open(csv_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    meta = {
        "schema": 1,
        "dim": g.dim,
        "origin": [repr(float(o)) for o in g.origin],
        "cell_size": repr(g.cell_size),
        "shape": list(g.shape),
        "bc": _bc_to_dict(g.bc),
    }
    with open(sidecar_path(csv_path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_grid(csv_path) -> GridFunction:
    with open(sidecar_path(csv_path)) as fh:
        meta = json.load(fh)
    origin = np.array([float(x) for x in meta["origin"]])
    h = float(meta["cell_size"])
    shape = tuple(int(n) for n in meta["shape"])
    bc = _bc_from_dict(meta["bc"])
    with open(csv_path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    ncols = len(header)
    if meta["dim"] == 1:
        if header != ["x", "value"]:
            raise ValidationError(f"unexpected snapshot header {header}")
        data = np.array([[float(c) for c in row] for row in rows])
        if data.shape[0] != shape[0]:
            raise ValidationError("snapshot row count does not match shape")
        values = data[:, 1]
        xs = origin[0] + (np.arange(shape[0]) + 0.5) * h
        if not np.allclose(data[:, 0], xs, rtol=0.0, atol=1e-9 * max(1.0, abs(xs[-1]))):
            raise ValidationError("snapshot cell centers inconsistent with sidecar")
    else:
        if header != ["x", "y", "value"]:
            raise ValidationError(f"unexpected snapshot header {header}")
        data = np.array([[float(c) for c in row] for row in rows])
        if data.shape[0] != shape[0] * shape[1]:
            raise ValidationError("snapshot row count does not match shape")
        values = data[:, 2].reshape(shape)
        xs = origin[0] + (np.arange(shape[0]) + 0.5) * h
        ys = origin[1] + (np.arange(shape[1]) + 0.5) * h
        scale = max(1.0, abs(xs[-1]), abs(ys[-1]))
        if not (np.allclose(data[:, 0].reshape(shape), xs[:, None], rtol=0.0,
                            atol=1e-9 * scale)
                and np.allclose(data[:, 1].reshape(shape), ys[None, :], rtol=0.0,
                                atol=1e-9 * scale)):
            raise ValidationError("snapshot cell centers inconsistent with sidecar")
    return GridFunction(origin, h, values, bc)
