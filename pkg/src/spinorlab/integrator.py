"""Fixed-step time integration with conserved-quantity monitors.

The default scheme is the integrating-factor (Lawson) RK4: the dispersive
term is propagated exactly in Fourier space and classical RK4 is applied to
the remainder.  For the spinor systems the linear part ``u_xx J`` has the
per-mode propagator ``exp(-k^2 J t) = cos(k^2 t) I - sin(k^2 t) J`` because
``J^2 = -I``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .algebra import SU2Generator, as_matrix, make_generator
from .errors import BlowupError, ResolutionError
from .grid import Field, MeanPolicy, PeriodicGrid
from .systems import (StateNLS, StateSys1, StateSys2, hamiltonian_nls, hamiltonian_sys1,
                      hamiltonian_sys2, nonlinear_nls, nonlinear_sys1, nonlinear_sys2)

SYSTEMS = ("nls", "sys1", "sys2")
SCHEMES = ("ifrk4", "rk4")
BLOWUP_THRESHOLD = 1e8
TAIL_LIMIT = 1e-3
INITIAL_TAIL_LIMIT = 1e-8


@dataclass
class EvolutionConfig:
    dt: float
    t_final: float
    snapshot_stride: int = 1
    scheme: str = "ifrk4"
    mean_policy: str = "project"
    dealias: bool = True
    check_resolution: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if int(self.snapshot_stride) < 1:
            raise ValueError("snapshot_stride must be >= 1")
        self.snapshot_stride = int(self.snapshot_stride)
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.mean_policy = MeanPolicy(self.mean_policy).value

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


@dataclass
class Trajectory:
    system: str
    grid: PeriodicGrid
    config: EvolutionConfig
    J: SU2Generator | None
    chi: float
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)        # tuples of arrays
    monitors: dict = field(default_factory=dict)

    def states(self):
        return [make_state(self.system, self.grid, s) for s in self.snapshots]

    # -- serialisation -----------------------------------------------------
    def save(self, out_dir):
        out = Path(out_dir)
        (out / "snapshots").mkdir(parents=True, exist_ok=True)
        meta = {
            "system": self.system,
            "config": asdict(self.config),
            "J": None if self.J is None else {"theta": self.J.theta, "psi": self.J.psi},
            "chi": self.chi,
            "grid": {"N": self.grid.n_points, "L": self.grid.length},
            "times": [float(t) for t in self.times],
        }
        (out / "meta.json").write_text(json.dumps(meta, indent=2))
        write_monitors(out / "monitors.csv", self.times, self.monitors)
        for i, snap in enumerate(self.snapshots):
            Field(self.grid, pack_state(self.system, snap)).save_binary(out / "snapshots" / f"{i:04d}.bin")

    @classmethod
    def load(cls, out_dir) -> "Trajectory":
        out = Path(out_dir)
        meta = json.loads((out / "meta.json").read_text())
        grid = PeriodicGrid(meta["grid"]["N"], meta["grid"]["L"])
        J = None if meta["J"] is None else make_generator(meta["J"]["theta"], meta["J"]["psi"])
        traj = cls(meta["system"], grid, EvolutionConfig(**meta["config"]), J, meta["chi"])
        traj.times = list(meta["times"])
        for p in sorted((out / "snapshots").glob("*.bin")):
            traj.snapshots.append(unpack_state(meta["system"], Field.load_binary(p).values))
        traj.monitors = read_monitors(out / "monitors.csv")
        return traj


MONITOR_KEYS = ("H", "mass", "v_integral", "mean_removed")


def write_monitors(path, times, monitors):
    keys = [k for k in MONITOR_KEYS if k in monitors]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + keys)
        for i, t in enumerate(times):
            w.writerow([repr(float(t))] + [repr(float(monitors[k][i])) for k in keys])


def read_monitors(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    cols = {k: [float(r[i]) for r in rows[1:]] for i, k in enumerate(head)}
    cols.pop("t", None)
    return cols


# ---------------------------------------------------------------------------
# State plumbing
# ---------------------------------------------------------------------------

def make_state(system, grid, snap):
    if system == "nls":
        return StateNLS(grid, snap[0])
    if system == "sys1":
        return StateSys1(grid, snap[0])
    return StateSys2(grid, snap[0], snap[1])


def as_tuple(system, state):
    if isinstance(state, (StateNLS, StateSys1)):
        return (np.array(state.u, dtype=complex),)
    if isinstance(state, StateSys2):
        return (np.array(state.v, dtype=float), np.array(state.u, dtype=complex))
    if system == "sys2":
        v, u = state
        return (np.asarray(v, dtype=float).copy(), np.asarray(u, dtype=complex).copy())
    return (np.asarray(state, dtype=complex).copy(),)


def pack_state(system, snap):
    if system == "sys2":
        return np.concatenate([snap[0][:, None].astype(complex), snap[1]], axis=1)
    return snap[0]


def unpack_state(system, values):
    if system == "sys2":
        return (values[:, 0].real.copy(), values[:, 1:].copy())
    if system == "sys1" and values.ndim == 1:
        values = values[:, None]
    return (values.copy(),)


# ---------------------------------------------------------------------------
# System operators
# ---------------------------------------------------------------------------

class _Ops:
    def __init__(self, system, grid, J, config):
        self.system = system
        self.grid = grid
        self.M = None if J is None else as_matrix(J)
        self.policy = MeanPolicy(config.mean_policy)
        self.dealias = config.dealias
        self.k2 = grid.k ** 2
        self.mean_log = []

    def propagate(self, snap, tau):
        if self.system == "nls":
            F = np.fft.fft(snap[0])
            return (np.fft.ifft(np.exp(-1j * self.k2 * tau) * F),)
        c = np.cos(self.k2 * tau)[:, None]
        s = np.sin(self.k2 * tau)[:, None]
        F = np.fft.fft(snap[-1], axis=0)
        u = np.fft.ifft(c * F - s * (F @ self.M), axis=0)
        return (u,) if self.system == "sys1" else (snap[0], u)

    def linear(self, snap):
        g = self.grid
        if self.system == "nls":
            return (1j * g.dx(snap[0], 2),)
        ulin = g.dx(snap[-1], 2) @ self.M
        return (ulin,) if self.system == "sys1" else (np.zeros_like(snap[0]), ulin)

    def nonlinear(self, snap):
        g = self.grid
        if self.system == "nls":
            return (nonlinear_nls(g, snap[0], self.dealias),)
        if self.system == "sys1":
            return (nonlinear_sys1(g, snap[0], self.M, self.policy, self.mean_log, self.dealias),)
        vt, ut = nonlinear_sys2(g, snap[0], snap[1], self.M, self.policy, self.mean_log, self.dealias)
        return (np.real(vt), ut)

    def monitors(self, snap):
        g = self.grid
        st = make_state(self.system, g, snap)
        u = snap[-1]
        out = {"mass": float(g.integrate(np.sum(np.abs(u.reshape(len(u), -1)) ** 2, axis=1)))}
        if self.system == "nls":
            out["H"] = hamiltonian_nls(st)
        elif self.system == "sys1":
            out["H"] = hamiltonian_sys1(st, self.M)
        else:
            out["H"] = hamiltonian_sys2(st, self.M)
            out["v_integral"] = float(g.integrate(snap[0]))
        out["mean_removed"] = max(self.mean_log) if self.mean_log else 0.0
        self.mean_log.clear()
        return out


def _axpy(a, x, y):
    """y + a x, component-wise on tuples."""
    return tuple(yi + a * xi for xi, yi in zip(x, y))


def _scale(a, x):
    return tuple(a * xi for xi in x)


def ifrk4_step(ops, u, h):
    E2 = lambda s: ops.propagate(s, 0.5 * h)     # noqa: E731
    E = lambda s: ops.propagate(s, h)            # noqa: E731
    k1 = ops.nonlinear(u)
    a = E2(_axpy(0.5 * h, k1, u))
    k2 = ops.nonlinear(a)
    Eu2 = E2(u)
    b = _axpy(0.5 * h, k2, Eu2)
    k3 = ops.nonlinear(b)
    c = _axpy(h, E2(k3), E(u))
    k4 = ops.nonlinear(c)
    mid = E2(tuple(x + y for x, y in zip(k2, k3)))
    incr = tuple(e1 + 2.0 * m + e4 for e1, m, e4 in zip(E(k1), mid, k4))
    return _axpy(h / 6.0, incr, E(u))


def rk4_step(ops, u, h):
    f = lambda s: _axpy(1.0, ops.linear(s), ops.nonlinear(s))   # noqa: E731
    k1 = f(u)
    k2 = f(_axpy(0.5 * h, k1, u))
    k3 = f(_axpy(0.5 * h, k2, u))
    k4 = f(_axpy(h, k3, u))
    incr = tuple(a + 2.0 * b + 2.0 * c + d for a, b, c, d in zip(k1, k2, k3, k4))
    return _axpy(h / 6.0, incr, u)


def _max_abs(snap):
    return max(float(np.max(np.abs(x))) if x.size else 0.0 for x in snap)


def _tail(grid, snap):
    return max(grid.tail_ratio(x) for x in snap)


def evolve(system, initial, J, config: EvolutionConfig, grid: PeriodicGrid | None = None,
           chi: float = 1.0) -> Trajectory:
    """Integrate ``system`` from ``initial`` (a state object or raw arrays)."""
    if system not in SYSTEMS:
        raise ValueError(f"system must be one of {SYSTEMS}")
    if grid is None:
        grid = initial.grid
    if system != "nls" and J is None:
        raise ValueError("the SU(2) systems need a generator J")
    if J is not None and not isinstance(J, SU2Generator):
        raise TypeError("J must be an SU2Generator")
    snap = as_tuple(system, initial)
    ops = _Ops(system, grid, J, config)
    step = ifrk4_step if config.scheme == "ifrk4" else rk4_step
    traj = Trajectory(system, grid, config, J, float(chi))
    traj.monitors = {k: [] for k in MONITOR_KEYS if system == "sys2" or k != "v_integral"}

    if config.check_resolution and _tail(grid, snap) > INITIAL_TAIL_LIMIT:
        raise ResolutionError(0.0, _tail(grid, snap))

    def record(t, s):
        traj.times.append(t)
        traj.snapshots.append(tuple(np.array(x, copy=True) for x in s))
        for k, val in ops.monitors(s).items():
            traj.monitors[k].append(val)

    record(0.0, snap)
    n = config.n_steps
    for i in range(1, n + 1):
        with np.errstate(over="ignore", invalid="ignore"):   # blowup is reported below
            snap = step(ops, snap, config.dt)
        if system == "sys2":
            snap = (np.real(snap[0]), snap[1])
        t = i * config.dt
        m = _max_abs(snap)
        if not np.isfinite(m) or m > BLOWUP_THRESHOLD:
            raise BlowupError(t, m)
        if i % config.snapshot_stride == 0 or i == n:
            if config.check_resolution:
                r = _tail(grid, snap)
                if r > TAIL_LIMIT:
                    raise ResolutionError(t, r)
            record(t, snap)
    return traj


def conservation_report(traj: Trajectory) -> dict:
    """Maximum drift of every monitored functional relative to its initial value."""
    if len(traj.times) < 2:
        raise ValueError("need at least two snapshots")
    out = {}
    for k, series in traj.monitors.items():
        if k == "mean_removed":
            out["max_mean_removed"] = float(max(series))
            continue
        s = np.asarray(series)
        ref = abs(s[0])
        drift = float(np.max(np.abs(s - s[0])))
        out[k] = drift / ref if ref > 1e-14 else drift
    return out
