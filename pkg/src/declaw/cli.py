"""Command-line front door: validated JSON experiment configs in, CSV/JSON
artifacts plus a manifest out.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 invalid
configuration or inputs, 3 internal fault.  Outputs are written atomically
and contain no timestamps, so identical configs and inputs produce
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import (
    AnalysisError,
    ConfigurationError,
    DeclawError,
    DomainError,
    ShapeError,
    StabilityError,
    ValidationError,
)
from .grid import FarField, GridFunction, LatticeSpec, Periodic, load_grid, save_grid
from .harness import (
    DecaySeries,
    PropertyReport,
    bump_initial,
    check_dyadic_blocks,
    check_truncation_convergence,
    dyadic_blocks_initial,
    run_contraction_suite,
    run_kplus_suite,
    run_maxmin_suite,
    run_periodic_decay,
    run_sandwich_decay,
)
from .model import check_gn, load_model
from .solver import SolverConfig, solve, truncation_sequence

KINDS = ("solve", "properties", "gn-check", "periodic-decay", "sandwich", "example1", "extremal")


# -- config validation (fail closed) ------------------------------------------


_GRID_KEYS = {"domain", "cells", "bc"}
_SOLVER_KEYS = {"cfl", "t_end", "snapshot_times", "lipschitz_samples"}
_INITIAL_KEYS = {"family", "params", "snapshot"}

_ALLOWED = {
    "solve": {"schema", "kind", "seed", "model", "initial", "grid", "solver"},
    "properties": {"schema", "kind", "seed", "suite", "cases", "pairs"},
    "gn-check": {"schema", "kind", "seed", "model"},
    "periodic-decay": {"schema", "kind", "seed", "model", "initial", "grid", "solver",
                       "lattice", "fraction", "xi_bound", "radius"},
    "sandwich": {"schema", "kind", "seed", "model", "initial", "grid", "solver",
                 "lattice", "r", "radius"},
    "example1": {"schema", "kind", "seed", "n_blocks", "cells", "t_max", "threshold",
                 "domain", "cfl", "snapshot_count"},
    "extremal": {"schema", "kind", "seed", "model", "initial", "grid", "solver",
                 "b_list", "radius_list", "inner_half_width"},
}


def _fail_closed(obj: dict, allowed, where: str):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown {where} keys: {sorted(unknown)}")


def _require(obj: dict, keys, where: str):
    missing = set(keys) - set(obj)
    if missing:
        raise ValidationError(f"missing {where} keys: {sorted(missing)}")


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    _require(cfg, {"schema", "kind"}, "config")
    if cfg["schema"] != 1:
        raise ValidationError(f"unsupported config schema {cfg['schema']!r}")
    if cfg["kind"] not in KINDS:
        raise ValidationError(f"unknown kind {cfg['kind']!r}; expected one of {KINDS}")
    _fail_closed(cfg, _ALLOWED[cfg["kind"]], "config")
    return cfg


def _parse_grid(spec: dict):
    _fail_closed(spec, _GRID_KEYS, "grid")
    _require(spec, {"domain", "cells", "bc"}, "grid")
    domain = spec["domain"]
    if isinstance(domain[0], (int, float)):
        domain = [domain]
    cells = spec["cells"]
    if isinstance(cells, int):
        cells = [cells]
    if len(domain) != len(cells) or len(domain) not in (1, 2):
        raise ValidationError("grid domain/cells must describe one or two axes")
    hs = [(float(hi) - float(lo)) / int(n) for (lo, hi), n in zip(domain, cells)]
    if any(h <= 0 for h in hs):
        raise ValidationError("grid domain must have positive extent")
    if len(hs) == 2 and abs(hs[0] - hs[1]) > 1e-12 * hs[0]:
        raise ValidationError("cell size must be equal on both axes")
    bc_spec = spec["bc"]
    _fail_closed(bc_spec, {"kind", "value"}, "grid.bc")
    if bc_spec["kind"] == "periodic":
        bc = Periodic()
    elif bc_spec["kind"] == "farfield":
        bc = FarField(float(bc_spec.get("value", 0.0)))
    else:
        raise ValidationError(f"unknown bc kind {bc_spec['kind']!r}")
    origin = [float(lo) for lo, _ in domain]
    shape = tuple(int(n) for n in cells)
    return origin, hs[0], shape, bc


def _parse_solver(spec: dict) -> SolverConfig:
    _fail_closed(spec, _SOLVER_KEYS, "solver")
    _require(spec, {"t_end"}, "solver")
    return SolverConfig(
        cfl=float(spec.get("cfl", 0.45)),
        t_end=float(spec["t_end"]),
        snapshot_times=tuple(float(t) for t in spec.get("snapshot_times", ())),
        lipschitz_samples=int(spec.get("lipschitz_samples", 256)),
    )


def _parse_lattice(spec: dict) -> LatticeSpec:
    _fail_closed(spec, {"basis"}, "lattice")
    _require(spec, {"basis"}, "lattice")
    return LatticeSpec(np.asarray(spec["basis"], dtype=float))


def build_initial(spec: dict, origin, cell_size, shape, bc, seed=None) -> GridFunction:
    """Analytic initial-data families sampled as cell averages (midpoint rule
    with 4 subsamples per cell per axis), or a snapshot file."""
    _fail_closed(spec, _INITIAL_KEYS, "initial")
    if "snapshot" in spec:
        if "family" in spec:
            raise ValidationError("give either an initial family or a snapshot, not both")
        try:
            return load_grid(spec["snapshot"])
        except FileNotFoundError as exc:
            raise ValidationError(f"snapshot file not found: {spec['snapshot']}") from exc
    _require(spec, {"family"}, "initial")
    family = spec["family"]
    params = dict(spec.get("params", {}))
    dim = len(shape)

    def sample(fn):
        return GridFunction.from_callable(origin, cell_size, shape, bc, fn, subsamples=4)

    if family == "constant":
        _fail_closed(params, {"value"}, "initial.params")
        value = float(params.get("value", 0.0))
        if dim == 1:
            return sample(lambda x: np.full_like(x, value))
        return sample(lambda x, y: np.full(np.broadcast(x, y).shape, value))
    if family == "box":
        _fail_closed(params, {"a", "b", "height", "base"}, "initial.params")
        a, b = float(params["a"]), float(params["b"])
        height = float(params.get("height", 1.0))
        base = float(params.get("base", 0.0))
        if dim == 1:
            return sample(lambda x: base + (height - base) * ((x >= a) & (x <= b)))
        return sample(lambda x, y: base + (height - base) * ((x >= a) & (x <= b) & (y >= a) & (y <= b)))
    if family == "sine":
        if dim != 1:
            raise ValidationError("the sine family is one-dimensional")
        _fail_closed(params, {"amplitude", "mean", "periods"}, "initial.params")
        amp = float(params.get("amplitude", 0.5))
        mean = float(params.get("mean", 0.0))
        periods = float(params.get("periods", 1.0))
        extent = cell_size * shape[0]
        x0 = origin[0]
        return sample(lambda x: mean + amp * np.sin(2.0 * np.pi * periods * (x - x0) / extent))
    if family == "bump":
        if dim != 1:
            raise ValidationError("the bump family is one-dimensional")
        _fail_closed(params, {"mass", "half_width", "center"}, "initial.params")
        if not isinstance(bc, FarField):
            raise ValidationError("the bump family needs a far-field grid")
        return bump_initial(origin[0], cell_size, shape[0],
                            mass=float(params.get("mass", 1.0)),
                            half_width=float(params.get("half_width", 1.0)),
                            center=float(params.get("center", 0.0)),
                            bc_value=bc.value)
    if family == "blocks":
        if dim != 1:
            raise ValidationError("the blocks family is one-dimensional")
        _fail_closed(params, {"n_blocks"}, "initial.params")
        domain = (origin[0], origin[0] + cell_size * shape[0])
        return dyadic_blocks_initial(int(params.get("n_blocks", 3)), domain, shape[0])
    if family == "random":
        _fail_closed(params, {"levels"}, "initial.params")
        if seed is None:
            raise ValidationError("the random family requires a seed")
        from .harness import seeded_initial

        rng = np.random.default_rng(int(seed))
        return seeded_initial(rng, origin, cell_size, shape, bc,
                              levels=int(params.get("levels", 6)))
    raise ValidationError(f"unknown initial family {family!r}")


# -- artifact plumbing ---------------------------------------------------------


def _atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


class Emitter:
    """Collects artifact files under the output directory and writes the
    manifest last, with hashes of everything emitted."""

    def __init__(self, out_dir, config, quiet=False):
        self.out = os.path.abspath(out_dir)
        os.makedirs(self.out, exist_ok=True)
        self.config = config
        self.quiet = quiet
        self.artifacts = []
        self.inputs = {}
        self.run_info = {}

    def path(self, name):
        return os.path.join(self.out, name)

    def note_input(self, label, path):
        self.inputs[label] = _sha256(path)
        return self.inputs[label]

    def emit_text(self, name, text):
        _atomic_write(self.path(name), text)
        self.artifacts.append(name)

    def emit_grid(self, name, grid):
        save_grid(grid, self.path(name))
        self.artifacts.append(name)
        self.artifacts.append(name + ".meta.json")

    def emit_series(self, name, series: DecaySeries):
        series.to_csv(self.path(name))
        self.artifacts.append(name)

    def emit_report(self, name, report: PropertyReport):
        report.save(self.path(name))
        self.artifacts.append(name)
        if not self.quiet:
            for line in report.summary_lines():
                print(line)

    def finish(self):
        manifest = {
            "schema": 1,
            "tool": {"name": "declaw", "version": __version__},
            "config": self.config,
            "inputs": self.inputs,
            "artifacts": {
                name: _sha256(self.path(name)) for name in sorted(set(self.artifacts))
            },
        }
        if self.run_info:
            manifest["run"] = self.run_info
        _atomic_write(self.path("manifest.json"),
                      json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- subcommand runners ----------------------------------------------------------


def _load_model_input(cfg, emitter):
    path = cfg["model"]
    try:
        model = load_model(path)
    except FileNotFoundError as exc:
        raise ValidationError(f"model file not found: {path}") from exc
    emitter.note_input("model", path)
    return model


def _initial_from_cfg(cfg, emitter, seed):
    origin, h, shape, bc = _parse_grid(cfg["grid"])
    g = build_initial(cfg["initial"], origin, h, shape, bc, seed=seed)
    if "snapshot" in cfg["initial"]:
        emitter.note_input("initial_snapshot", cfg["initial"]["snapshot"])
    return g


def _snapshot_name(index, t):
    return f"snapshot_{index:03d}_t{t:g}.csv"


def run_solve(cfg, emitter, seed):
    model = _load_model_input(cfg, emitter)
    config = _parse_solver(cfg["solver"])
    g = _initial_from_cfg(cfg, emitter, seed)
    traj = solve(g, model, config)
    for i, (t, snap) in enumerate(traj.snapshots):
        emitter.emit_grid(_snapshot_name(i, t), snap)
    emitter.run_info = {
        "model_hash": model.content_hash(),
        "scheme": traj.meta.get("scheme"),
        "step_history": [repr(float(dt)) for dt in traj.dt_history],
    }
    return 0


def run_properties(cfg, emitter, seed):
    if seed is None:
        raise ValidationError("properties runs require a seed")
    suite = cfg.get("suite", "all")
    if suite not in ("maxmin", "contraction", "kplus", "all"):
        raise ValidationError(f"unknown suite {suite!r}")
    report = PropertyReport()
    if suite in ("maxmin", "all"):
        report = report.merged(run_maxmin_suite(cases=int(cfg.get("cases", 50)), seed=seed))
    if suite in ("contraction", "all"):
        report = report.merged(run_contraction_suite(pairs=int(cfg.get("pairs", 25)), seed=seed))
    if suite in ("kplus", "all"):
        report = report.merged(run_kplus_suite(cases=int(cfg.get("cases", 25)), seed=seed))
    emitter.emit_report("report.json", report)
    return 0 if report.passed else 1


def run_gn_check(cfg, emitter, seed):
    model = _load_model_input(cfg, emitter)
    gn = check_gn(model)
    payload = {
        "schema": 1,
        "holds": gn.holds,
        "witness": list(gn.witness) if gn.witness else None,
        "degenerate": [list(iv) for iv in gn.degenerate],
        "active_set": [list(iv) for iv in gn.active_set],
        "sup_active_minus": repr(gn.sup_active_minus),
        "inf_active_plus": repr(gn.inf_active_plus),
        "urange": list(gn.urange),
    }
    emitter.emit_text("report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if not emitter.quiet:
        state = "PASS" if gn.holds else "FAIL"
        print(f"[{state}] nonlinearity-diffusivity condition"
              + ("" if gn.holds else f"; witness interval {gn.witness}"))
    return 0 if gn.holds else 1


def run_periodic_decay_cmd(cfg, emitter, seed):
    model = _load_model_input(cfg, emitter)
    config = _parse_solver(cfg["solver"])
    g = _initial_from_cfg(cfg, emitter, seed)
    lattice = _parse_lattice(cfg["lattice"])
    series, report = run_periodic_decay(
        model, g, lattice, config,
        fraction=float(cfg.get("fraction", 0.05)),
        xi_bound=int(cfg.get("xi_bound", 50)),
        radius=float(cfg.get("radius", 1.0)),
    )
    report.inputs.update(emitter.inputs)
    emitter.emit_series("decay.csv", series)
    emitter.emit_report("report.json", report)
    return 0 if report.passed else 1


def run_sandwich_cmd(cfg, emitter, seed):
    model = _load_model_input(cfg, emitter)
    config = _parse_solver(cfg["solver"])
    g = _initial_from_cfg(cfg, emitter, seed)
    lattice = _parse_lattice(cfg["lattice"])
    radius = float(cfg.get("radius", 1.0))
    series, report = run_sandwich_decay(g, model, lattice, float(cfg["r"]), config,
                                        radius=radius)
    report.inputs.update(emitter.inputs)
    emitter.emit_series("decay_whole.csv", series["whole"])
    emitter.emit_series("decay_upper.csv", series["upper"])
    emitter.emit_series("decay_lower.csv", series["lower"])
    for name, grid in series["final_snapshots"].items():
        emitter.emit_grid(f"sandwich_{name}.csv", grid)
    emitter.emit_report("report.json", report)
    return 0 if report.passed else 1


def run_example1(cfg, emitter, seed):
    report, series, traj = check_dyadic_blocks(
        n_blocks=int(cfg["n_blocks"]),
        cells=int(cfg["cells"]),
        t_max=float(cfg["t_max"]),
        threshold=float(cfg["threshold"]),
        domain=tuple(cfg["domain"]) if "domain" in cfg else None,
        cfl=float(cfg.get("cfl", 0.45)),
        snapshot_count=int(cfg.get("snapshot_count", 12)),
    )
    emitter.emit_series("decay.csv", series)
    emitter.emit_grid("final.csv", traj.snapshots[-1][1])
    emitter.emit_report("report.json", report)
    return 0 if report.passed else 1


def run_extremal(cfg, emitter, seed):
    model = _load_model_input(cfg, emitter)
    config = _parse_solver(cfg["solver"])
    g = _initial_from_cfg(cfg, emitter, seed)
    trajs = truncation_sequence(g, model, config,
                                [float(b) for b in cfg["b_list"]],
                                [float(r) for r in cfg["radius_list"]])
    report = check_truncation_convergence(
        trajs, inner_half_width=float(cfg.get("inner_half_width", 2.0)))
    report.inputs.update(emitter.inputs)
    for i, traj in enumerate(trajs):
        emitter.emit_grid(f"extremal_{i}.csv", traj.snapshots[-1][1])
    emitter.emit_report("report.json", report)
    return 0 if report.passed else 1


_RUNNERS = {
    "solve": run_solve,
    "properties": run_properties,
    "gn-check": run_gn_check,
    "periodic-decay": run_periodic_decay_cmd,
    "sandwich": run_sandwich_cmd,
    "example1": run_example1,
    "extremal": run_extremal,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="declaw",
        description="Simulate scalar degenerate convection-diffusion laws and "
                    "check their structural properties.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", help="suppress check lines")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if cfg["kind"] != args.command:
            raise ValidationError(
                f"config kind {cfg['kind']!r} does not match subcommand {args.command!r}"
            )
        seed = args.seed if args.seed is not None else cfg.get("seed")
        emitter = Emitter(args.out, cfg, quiet=args.quiet)
        status = _RUNNERS[args.command](cfg, emitter, seed)
        emitter.finish()
        return status
    except (ValidationError, ConfigurationError, AnalysisError, DomainError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StabilityError, DeclawError) as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal fault: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
