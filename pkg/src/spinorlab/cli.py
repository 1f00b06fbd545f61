"""Command-line driver.

    spinorlab simulate --config run.yaml [--seed 3] [--out DIR]
    spinorlab verify --suite all [--seed 0] [--out DIR]
    spinorlab sweep --config sweep.yaml [--jobs 4] [--out DIR]
    spinorlab reconstruct-curve --config curve.yaml [--out DIR]
    spinorlab report --out DIR

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import geomflow as gf
from .algebra import make_generator
from .errors import SpinorLabError
from .grid import PeriodicGrid
from .initial import FAMILIES, build_state
from .integrator import SCHEMES, SYSTEMS, EvolutionConfig, Trajectory, conservation_report, evolve
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    system: str
    grid: dict
    evolution: dict
    initial: dict
    J: dict = field(default_factory=lambda: {"theta": 0.0, "psi": 0.0})
    chi: float = 1.0
    output: str = "out"
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(d) - {"system", "grid", "evolution", "initial", "J", "chi", "output", "seed", "sweep"}
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        for key in ("system", "grid", "evolution", "initial"):
            if key not in d:
                raise ConfigError(f"missing key {key!r}")
        ev = dict(d["evolution"])
        ev_full = {"dt": None, "t_final": None, "snapshot_stride": 1, "scheme": "ifrk4",
                   "mean_policy": "project", "dealias": True, "check_resolution": True}
        bad = set(ev) - set(ev_full)
        if bad:
            raise ConfigError(f"unknown evolution keys: {sorted(bad)}")
        ev_full.update(ev)
        grid = {"N": d["grid"].get("N"), "L": float(d["grid"].get("L", 2.0 * np.pi))}
        J = {"theta": 0.0, "psi": 0.0}
        J.update(d.get("J") or {})
        cfg = cls(system=d["system"], grid=grid, evolution=ev_full, initial=dict(d["initial"]),
                  J={k: float(v) for k, v in J.items()}, chi=float(d.get("chi", 1.0)),
                  output=str(d.get("output", "out")), seed=int(d.get("seed", 0)))
        cfg.validate()
        return cfg

    def validate(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}")
        try:
            PeriodicGrid(self.grid["N"], self.grid["L"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.evolution["scheme"] not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        try:
            EvolutionConfig(**self.evolution)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"evolution: {exc}") from None
        fam = self.initial.get("family")
        if fam not in FAMILIES:
            raise ConfigError(f"initial.family must be one of {FAMILIES}")
        if fam == "file" and not Path(self.initial.get("path", "")).is_file():
            raise ConfigError(f"initial snapshot file not found: {self.initial.get('path')}")
        if set(self.J) != {"theta", "psi"}:
            raise ConfigError("J takes exactly theta and psi")

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def generator(self):
        return make_generator(self.J["theta"], self.J["psi"])


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    return data


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True))


def _error_exit(out, kind, message, code, extra=None):
    payload = {"kind": kind, "message": message, "exit_code": code}
    if extra:
        payload.update(extra)
    if out is not None:
        _write_json(Path(out) / "error.json", payload)
    print(f"error: {message}", file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def run_simulation(cfg: RunConfig, out_dir=None):
    """Evolve one configuration; returns (trajectory, report).  Raises SpinorLabError."""
    grid = PeriodicGrid(cfg.grid["N"], cfg.grid["L"])
    J = None if cfg.system == "nls" else cfg.generator()
    state = build_state(cfg.system, grid, cfg.initial, J, cfg.seed)
    traj = evolve(cfg.system, state, J, EvolutionConfig(**cfg.evolution), grid, cfg.chi)
    report = conservation_report(traj)
    if out_dir is not None:
        traj.save(out_dir)
        (Path(out_dir) / "config.yaml").write_text(cfg.dump())
        _write_json(Path(out_dir) / "report.json", report)
    return traj, report


def cmd_simulate(args) -> int:
    try:
        raw = load_config(args.config)
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["output"] = args.out
        cfg = RunConfig.from_dict(raw)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        return _error_exit(args.out, "config", str(exc), EXIT_CONFIG)
    out = Path(cfg.output)
    try:
        _, report = run_simulation(cfg, out)
    except SpinorLabError as exc:
        return _error_exit(out, exc.kind, str(exc), EXIT_NUMERIC, exc.to_dict())
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    suite = args.suite or "all"
    if suite not in SUITES + ("all",):
        return _error_exit(args.out, "config", f"unknown suite {suite!r}", EXIT_CONFIG)
    checks = run_suite(suite, args.seed or 0)
    report = {"suite": suite, "seed": args.seed or 0, "checks": checks,
              "passed": all(c["passed"] for c in checks)}
    if args.out:
        _write_json(Path(args.out) / "verify_report.json", report)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _set_path(d, dotted, value):
    keys = dotted.split(".")
    for k in keys[:-1]:
        d = d.setdefault(k, {})
    d[keys[-1]] = value


def expand_sweep(raw: dict):
    """Cartesian product of ``sweep.parameters`` applied to the template."""
    spec = raw.get("sweep") or {}
    params = spec.get("parameters") or {}
    names = list(params)
    template = {k: v for k, v in raw.items() if k != "sweep"}
    if not names or any(len(params[n]) == 0 for n in names):
        return names, []
    rows = []
    for combo in itertools.product(*(params[n] for n in names)):
        d = copy.deepcopy(template)
        for n, val in zip(names, combo):
            _set_path(d, n, val)
        rows.append((dict(zip(names, combo)), d))
    return names, rows


def _sweep_row(item):
    params, raw = item
    row = dict(params)
    try:
        cfg = RunConfig.from_dict(raw)
        _, rep = run_simulation(cfg)
        row.update(status="ok", H_drift=rep.get("H"), mass_drift=rep.get("mass"),
                   max_mean_removed=rep.get("max_mean_removed"), error="")
    except ConfigError as exc:
        row.update(status="config_error", error=str(exc))
    except SpinorLabError as exc:
        row.update(status=exc.kind, error=str(exc))
    return row


def cmd_sweep(args) -> int:
    try:
        raw = load_config(args.config)
        if args.seed is not None:
            raw["seed"] = args.seed
        names, rows = expand_sweep(raw)
    except (ConfigError, TypeError, AttributeError) as exc:
        return _error_exit(args.out, "config", str(exc), EXIT_CONFIG)
    out = Path(args.out or raw.get("output", "sweep_out"))
    out.mkdir(parents=True, exist_ok=True)
    jobs = max(1, int(args.jobs or 1))
    if jobs == 1 or len(rows) <= 1:
        results = [_sweep_row(r) for r in rows]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_row, rows))
    cols = names + ["status", "H_drift", "mass_drift", "max_mean_removed", "error"]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in results:
            w.writerow({k: r.get(k, "") for k in cols})
    n_ok = sum(r["status"] == "ok" for r in results)
    print(f"{len(results)} rows, {n_ok} ok")
    return EXIT_OK if (n_ok > 0 or not results) else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# reconstruct-curve
# ---------------------------------------------------------------------------

CURVE_KINDS = ("circle", "helix", "perturbed_circle", "planar_circle", "bump", "random")


def build_curve(spec: dict, seed: int = 0) -> gf.CurveState:
    kind = spec.get("kind")
    n = int(spec.get("N", 64))
    dim = int(spec.get("dimension", 3))
    rng = np.random.default_rng(seed)
    if kind == "circle":
        return gf.circle(n, spec.get("radius", 1.0))
    if kind == "helix":
        return gf.helix(n, spec.get("a", 1.0), spec.get("b", 0.5))
    if kind == "perturbed_circle":
        return gf.perturbed_circle(n, spec.get("radius", 1.0), spec.get("eps", 0.1), spec.get("mode", 2))
    if kind == "planar_circle":
        return gf.planar_circle(n, dim, spec.get("radius", 1.0))
    if kind == "bump":
        return gf.bump_curve(n, dim, spec.get("length", 20.0), spec.get("angle", 0.6),
                             spec.get("width", 1.5), rng)
    if kind == "random":
        return gf.random_tangent_curve(n, dim, rng)
    raise ConfigError(f"curve.kind must be one of {CURVE_KINDS}")


def cmd_reconstruct_curve(args) -> int:
    try:
        raw = load_config(args.config)
        spec = raw["curve"]
        seed = int(args.seed if args.seed is not None else raw.get("seed", 0))
        curve = build_curve(spec, seed)
        flow = raw.get("flow") or {}
        J = make_generator(**(raw.get("J") or {"theta": 0.0, "psi": 0.0}))
        case = raw.get("case", {5: "su4sp2", 6: "so6u3"}.get(curve.dimension))
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        return _error_exit(args.out, "config", str(exc), EXIT_CONFIG)
    out = Path(args.out or raw.get("output", "curve_out"))
    out.mkdir(parents=True, exist_ok=True)
    summary = {"dimension": curve.dimension, "length": curve.grid.length,
               "speed_defect": curve.speed_defect()}
    try:
        if curve.dimension == 3:
            fr = gf.frenet_frame(curve)
            summary.update(kappa_min=float(fr.kappa.min()), kappa_max=float(fr.kappa.max()),
                           frame_defect=fr.orthonormality_defect())
            if flow:
                traj = gf.evolve_filament(curve, float(flow["dt"]), float(flow["t_final"]),
                                          int(flow.get("stride", 1)))
                traj.save(out)
                summary["max_arclength_drift"] = float(max(traj.arclength_drift))
            else:
                curve.save_csv(out / "curve.csv")
                u = gf.hasimoto_map(curve)
                np.savetxt(out / "hasimoto.csv", np.column_stack([curve.grid.x, u.real, u.imag]),
                           delimiter=",", header="x,re,im", comments="")
        else:
            S = gf.build_normal_structure(curve, case, J)
            S.save(out / "structure", curve.grid)
            summary.update(case=case, seam_defect=S.seam_defect, **S.residuals())
            if flow and curve.dimension == 5:
                traj = gf.evolve_su2_binormal(curve, float(flow["dt"]), float(flow["t_final"]), case, J,
                                              int(flow.get("stride", 1)))
                traj.save(out)
                summary["max_arclength_drift"] = float(max(traj.arclength_drift))
            else:
                curve.save_csv(out / "curve.csv")
    except SpinorLabError as exc:
        return _error_exit(out, exc.kind, str(exc), EXIT_NUMERIC, exc.to_dict())
    except ValueError as exc:
        return _error_exit(out, "config", str(exc), EXIT_CONFIG)
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    out = Path(args.out or ".")
    if not (out / "meta.json").is_file():
        return _error_exit(None, "config", f"no trajectory in {out}", EXIT_CONFIG)
    traj = Trajectory.load(out)
    rep = {"system": traj.system, "snapshots": len(traj.snapshots),
           "t_final": traj.times[-1] if traj.times else 0.0, "drift": conservation_report(traj)}
    _write_json(out / "report.json", rep)
    print(json.dumps(rep, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="spinorlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_config in (("simulate", True), ("verify", False), ("sweep", True),
                               ("reconstruct-curve", True), ("report", False)):
        s = sub.add_parser(name)
        s.add_argument("--config", required=needs_config)
        s.add_argument("--seed", type=int)
        s.add_argument("--out")
        s.add_argument("--suite")
        s.add_argument("--jobs", type=int, default=1)
    return p


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "sweep": cmd_sweep,
            "reconstruct-curve": cmd_reconstruct_curve, "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
