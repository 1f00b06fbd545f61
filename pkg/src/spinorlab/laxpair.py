"""Lax pairs, auxiliary potentials, zero-curvature residuals and the
Hamiltonian/symplectic operators of the three systems."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import (as_matrix, hermitian_dot, membership_residual, outer,
                      proj_so, proj_su, row_times, trace_free)
from .grid import MeanPolicy, PeriodicGrid
from .systems import (GaugeConstants, StateNLS, StateSys1, StateSys2, hamiltonian_nls,
                      hamiltonian_sys1, hamiltonian_sys2, im_uJ, local_gauge_offset,
                      nonlocal_potential, rhs_nls, rhs_sys1, rhs_sys2)

TAGS = {"nls": "so(4)", "sys1": "su(4)", "sys2": "so(6)"}


@dataclass
class LaxField:
    U: np.ndarray
    V: np.ndarray
    algebra_tag: str
    chi: float
    t: float = 0.0

    def membership(self) -> float:
        return max(membership_residual(self.U, self.algebra_tag),
                   membership_residual(self.V, self.algebra_tag))


@dataclass
class AuxiliaryPotentials:
    h_par: float
    w: np.ndarray
    w_par: np.ndarray
    W_par: np.ndarray
    W: np.ndarray | None = None
    H_perp: np.ndarray | None = None
    W2_par: np.ndarray | None = None


@dataclass
class ZeroCurvatureReport:
    residual_l2: float
    residual_max: float
    dt: float
    order_estimate: float | None = None
    system: str = ""
    chi: float = 0.0
    grid: dict = field(default_factory=dict)
    per_entry_max: float = 0.0

    @property
    def residual_norm(self):
        return self.residual_l2

    @property
    def dt_used(self):
        return self.dt

    @property
    def convergence_order_estimate(self):
        return self.order_estimate

    def to_json(self) -> str:
        d = asdict(self)
        d.pop("per_entry_max")
        return json.dumps(d, indent=2)


def _stack(rows):
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


# ---------------------------------------------------------------------------
# NLS: so(4)
# ---------------------------------------------------------------------------

def lax_nls(grid: PeriodicGrid, u, chi: float) -> LaxField:
    u = np.asarray(u, dtype=complex)
    n = grid.n_points
    Z = np.zeros(n)
    c = np.full(n, float(chi))
    U = _stack([[Z, c, Z, Z], [-c, Z, u.real, u.imag], [Z, -u.real, Z, Z], [Z, -u.imag, Z, Z]])
    h = 1j * u
    w = 1j * grid.dx(u)
    q = 0.5 * np.abs(u) ** 2 - chi ** 2
    h1, h2, w1, w2 = h.real, h.imag, w.real, w.imag
    V = _stack([[Z, Z, -chi * h1, -chi * h2],
                [Z, Z, w1, w2],
                [chi * h1, -w1, Z, q],
                [chi * h2, -w2, -q, Z]])
    return LaxField(U, V, "so(4)", chi)


# ---------------------------------------------------------------------------
# First system: su(4)
# ---------------------------------------------------------------------------

def compute_aux_sys1(grid, u, J, chi, gauge: GaugeConstants | None = None,
                     policy=MeanPolicy.PROJECT, mean_log=None) -> AuxiliaryPotentials:
    """Auxiliary potentials in the normalisation before the time rescaling by 4."""
    gauge = gauge or GaugeConstants()
    M = as_matrix(J)
    u = np.asarray(u, dtype=complex)
    ux = grid.dx(u)
    w = 0.25 * ux @ M + gauge.c1 * u
    W_par = 0.25 * im_uJ(u, M) + gauge.C1
    A = outer(u, u)
    W2 = 0.25 * (A @ M - M.T @ A) + gauge.CC1
    P = nonlocal_potential(grid, u, M, policy=policy, mean_log=mean_log)
    w_par = 0.5 * P + gauge.cc2(M, chi)
    return AuxiliaryPotentials(h_par=gauge.c1, w=w, w_par=w_par, W_par=W_par, W2_par=W2)


def lax_sys1(grid, u, J, chi, gauge=None, policy=MeanPolicy.PROJECT, mean_log=None) -> LaxField:
    M = as_matrix(J)
    u = np.asarray(u, dtype=complex)
    aux = compute_aux_sys1(grid, u, M, chi, gauge, policy, mean_log)
    n = grid.n_points
    u1, u2 = u[:, 0], u[:, 1]
    Z = np.zeros(n, dtype=complex)
    c = np.full(n, 1j * chi)
    U = _stack([[c, u1, Z, np.conj(u2)],
                [-np.conj(u1), -c, np.conj(u2), Z],
                [Z, -u2, c, np.conj(u1)],
                [-u2, Z, -u1, -c]])
    # display scaling: every auxiliary quantity enters V multiplied by 4
    uJ = u @ M
    p = 4.0 * aux.w - 4.0 * aux.h_par * u          # u_x J
    pb, ub = np.conj(p), np.conj(uJ)
    Wp = 4.0 * aux.w_par
    w1 = 1j * Wp[:, 0, 0]
    w2 = Wp[:, 1, 0]
    W2 = np.conj(4.0 * aux.W2_par[:, 0, 1])
    d = 4.0j * aux.W_par
    k = 2j * chi
    V = _stack([[1j * w1, -k * uJ[:, 0] + p[:, 0], w2, -k * ub[:, 1] + pb[:, 1]],
                [-k * ub[:, 0] - pb[:, 0], d, k * ub[:, 1] + pb[:, 1], W2],
                [-np.conj(w2), k * uJ[:, 1] - p[:, 1], -1j * w1, -k * ub[:, 0] + pb[:, 0]],
                [-k * uJ[:, 1] - p[:, 1], -np.conj(W2), -k * uJ[:, 0] - p[:, 0], -d]])
    return LaxField(U, V, "su(4)", chi)


# ---------------------------------------------------------------------------
# Second system: so(6)
# ---------------------------------------------------------------------------

def compute_aux_sys2(grid, v, u, J, chi, gauge: GaugeConstants | None = None,
                     policy=MeanPolicy.PROJECT, mean_log=None) -> AuxiliaryPotentials:
    gauge = gauge or GaugeConstants()
    M = as_matrix(J)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=float)
    im = im_uJ(u, M)
    W = 0.5 * im + gauge.c1 * v
    w = grid.dx(u) @ M - 1j * v[:, None] * (u @ M) + gauge.c1 * u
    W_par = im + gauge.C1
    P = nonlocal_potential(grid, u, M, v=v, policy=policy, mean_log=mean_log)
    w_par = P + gauge.cc2(M, chi)
    return AuxiliaryPotentials(h_par=gauge.c1, w=w, w_par=w_par, W_par=W_par, W=W,
                               H_perp=np.zeros(grid.n_points))


def lax_sys2(grid, v, u, J, chi, gauge=None, policy=MeanPolicy.PROJECT, mean_log=None) -> LaxField:
    M = as_matrix(J)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=float)
    aux = compute_aux_sys2(grid, v, u, M, chi, gauge, policy, mean_log)
    n = grid.n_points
    Z = np.zeros(n, dtype=complex)
    iv = 1j * v
    UU = _stack([[iv, Z, u[:, 0]], [Z, iv, u[:, 1]], [-np.conj(u[:, 0]), -np.conj(u[:, 1]), Z]])
    E = np.array([[0.0, chi, 0.0], [-chi, 0.0, 0.0], [0.0, 0.0, 0.0]])
    U = np.concatenate([np.concatenate([E + UU.real, UU.imag], -1),
                        np.concatenate([-UU.imag, -E + UU.real], -1)], -2)
    h = u @ M
    HH = _stack([[Z, Z, -chi * h[:, 1]], [Z, Z, chi * h[:, 0]], [chi * h[:, 1], -chi * h[:, 0], Z]])
    w = aux.w
    w1 = 1j * aux.w_par[:, 0, 0]
    w2 = -aux.w_par[:, 1, 0]
    W = aux.W
    WW = _stack([[1j * W + 1j * w1, w2, w[:, 0]],
                 [-np.conj(w2), 1j * W - 1j * w1, w[:, 1]],
                 [-np.conj(w[:, 0]), -np.conj(w[:, 1]), 1j * aux.W_par]])
    P, Q = HH + WW, HH - WW
    V = np.concatenate([np.concatenate([P.real, P.imag], -1),
                        np.concatenate([Q.imag, -Q.real], -1)], -2)
    return LaxField(U, V, "so(6)", chi)


# ---------------------------------------------------------------------------
# Snapshot sequences and residuals
# ---------------------------------------------------------------------------

def build_lax_nls(grid, u_snapshots, chi, times=None):
    times = _times(times, len(u_snapshots))
    out = []
    for t, u in zip(times, u_snapshots):
        L = lax_nls(grid, u, chi)
        L.t = t
        out.append(L)
    return out


def build_lax_sys1(grid, u_snapshots, J, chi, times=None, **kw):
    times = _times(times, len(u_snapshots))
    out = []
    for t, u in zip(times, u_snapshots):
        L = lax_sys1(grid, u, J, chi, **kw)
        L.t = t
        out.append(L)
    return out


def build_lax_sys2(grid, state_snapshots, J, chi, times=None, **kw):
    times = _times(times, len(state_snapshots))
    out = []
    for t, (v, u) in zip(times, state_snapshots):
        L = lax_sys2(grid, v, u, J, chi, **kw)
        L.t = t
        out.append(L)
    return out


def _times(times, n):
    return [0.0] * n if times is None else list(times)


def residual_fields(grid: PeriodicGrid, lax, dt: float):
    """R = D_t U - D_x V - [U, V] at every interior snapshot (centred D_t)."""
    if len(lax) < 3:
        raise ValueError("at least three snapshots are required for a centred time derivative")
    out = []
    for n in range(1, len(lax) - 1):
        Ut = (lax[n + 1].U - lax[n - 1].U) / (2.0 * dt)
        U, V = lax[n].U, lax[n].V
        out.append(Ut - grid.dx(V) - (U @ V - V @ U))
    return out


def zero_curvature_residual(grid, lax, dt, system="", chi=None, reference=None) -> ZeroCurvatureReport:
    """Max over interior snapshots of the L2-in-x residual norm.

    With ``reference`` (a report from a coarser dt) the observed order is filled in.
    """
    R = residual_fields(grid, lax, dt)
    l2 = max(float(np.sqrt(grid.integrate(np.sum(np.abs(r) ** 2, axis=(1, 2))))) for r in R)
    mx = max(float(np.max(np.abs(r))) for r in R)
    rep = ZeroCurvatureReport(residual_l2=l2, residual_max=mx, dt=float(dt),
                              system=system, chi=float(lax[0].chi if chi is None else chi),
                              grid={"N": grid.n_points, "L": grid.length}, per_entry_max=mx)
    if reference is not None:
        rep.order_estimate = convergence_order(reference, rep)
    return rep


def convergence_order(coarse: ZeroCurvatureReport, fine: ZeroCurvatureReport) -> float:
    return float(np.log(coarse.residual_l2 / fine.residual_l2) / np.log(coarse.dt / fine.dt))


def inject_fault(lax, rel: float = 0.01, entry=None):
    """Copy of ``lax`` with one V entry scaled by (1 + rel) at every snapshot.

    The default entry is the one of largest magnitude, so the perturbation is
    never applied to a structurally zero slot.
    """
    if entry is None:
        mag = np.max(np.abs(lax[len(lax) // 2].V), axis=0)
        entry = np.unravel_index(int(np.argmax(mag)), mag.shape)
    i, j = entry
    out = []
    for L in lax:
        V = L.V.copy()
        V[:, i, j] *= 1.0 + rel
        out.append(LaxField(L.U, V, L.algebra_tag, L.chi, L.t))
    return out, (int(i), int(j))


# ---------------------------------------------------------------------------
# Hamiltonian and symplectic operators
# ---------------------------------------------------------------------------

def _D(grid, f, policy):
    return grid.dx_inv(f, policy=policy)


def hop_nls(grid, f, u, policy=MeanPolicy.PROJECT):
    return grid.dx(f) + 1j * u * _D(grid, np.imag(np.conj(u) * f), policy)


def jop_nls(grid, f, u, policy=MeanPolicy.PROJECT):
    return grid.dx(f) + u * _D(grid, np.real(np.conj(u) * f), policy)


def hop_sys1(grid, f, u, policy=MeanPolicy.PROJECT):
    im = np.imag(hermitian_dot(u, f))
    return (grid.dx(f)
            + 2j * u * _D(grid, im, policy)[:, None]
            + 4.0 * row_times(u, _D(grid, proj_su(outer(np.conj(u), f)), policy))
            + 4.0 * row_times(np.conj(u), _D(grid, proj_so(outer(u, f)), policy)))


def jop_sys1(grid, f, u, policy=MeanPolicy.PROJECT):
    re = np.real(hermitian_dot(u, f))
    return grid.dx(f) - 4.0 * u * _D(grid, re, policy)[:, None]


def recursion_sys1(grid, f, u, policy=MeanPolicy.PROJECT):
    return hop_sys1(grid, jop_sys1(grid, f, u, policy), u, policy)


def hop_sys2(grid, f, state, policy=MeanPolicy.PROJECT):
    fv, fu = f
    v, u = state
    im = np.imag(hermitian_dot(u, fu))
    out_v = grid.dx(fv) + im
    out_u = (-1j * u * fv[:, None] + grid.dx(fu) + 1j * v[:, None] * fu
             + 2j * u * _D(grid, im, policy)[:, None]
             + 2.0 * row_times(u, _D(grid, proj_su(outer(np.conj(u), fu)), policy)))
    return out_v, out_u


def jop_sys2(grid, f, state, policy=MeanPolicy.PROJECT):
    fv, fu = f
    v, u = state
    re = np.real(hermitian_dot(u, fu))
    im = np.imag(hermitian_dot(u, fu))
    Dvf = _D(grid, v * fv, policy)
    Dre = _D(grid, re, policy)
    out_v = 0.25 * grid.dx(fv) + v * Dvf + 0.5 * im + v * Dre
    out_u = (-0.5j * u * fv[:, None] + u * Dvf[:, None] + grid.dx(fu)
             - 1j * v[:, None] * fu + u * Dre[:, None])
    return out_v, out_u


def recursion_sys2(grid, f, state, policy=MeanPolicy.PROJECT):
    return hop_sys2(grid, jop_sys2(grid, f, state, policy), state, policy)


def pairing(grid, f, g) -> float:
    """Real L2 pairing; tuples pair component-wise and add."""
    if isinstance(f, tuple):
        return sum(pairing(grid, a, b) for a, b in zip(f, g))
    return grid.inner(f, g)


def skew_residual(grid, op, f, g):
    """|<f, op g> + <op f, g>| for a linear operator ``op``."""
    return abs(pairing(grid, f, op(g)) + pairing(grid, op(f), g))


# ---------------------------------------------------------------------------
# Hamiltonian form
# ---------------------------------------------------------------------------

def variational_derivative_fd(grid, H, fields, h):
    """Central-difference d H / d conj(field) per grid point.

    The derivative is normalised so that  dH = int 2 Re(conj(grad) . delta) dx
    for every component; real fields get the same factor 1/2.
    """
    grads = []
    w = 2.0 * grid.spacing
    for i, f in enumerate(fields):
        f = np.asarray(f)
        real = not np.iscomplexobj(f)
        g = np.zeros(f.shape, dtype=float if real else complex)
        flat_g = g.reshape(-1)
        steps = (1.0,) if real else (1.0, 1j)
        for idx in range(f.size):
            for s in steps:
                plus = [np.array(x, copy=True) for x in fields]
                minus = [np.array(x, copy=True) for x in fields]
                plus[i].reshape(-1)[idx] += h * s
                minus[i].reshape(-1)[idx] -= h * s
                dH = (H(*plus) - H(*minus)) / (2.0 * h) / w
                flat_g[idx] += dH * s
        grads.append(g)
    return grads


def check_hamiltonian_form(system, state, J=None, h_rel=1e-6, policy=MeanPolicy.PROJECT) -> float:
    """Relative mismatch between Hop applied to the FD gradient of H and the flow.

    The flow is compared after removing the x-constant-coefficient offset that
    zero-mean D^-1 inside Hop introduces (``systems.local_gauge_offset``).
    """
    grid = state.grid
    if system in ("nls", 0):
        u = state.u
        scale = max(1.0, float(np.max(np.abs(u))))
        if not np.any(u):
            return 0.0
        (g,) = variational_derivative_fd(grid, lambda uu: hamiltonian_nls(StateNLS(grid, uu)),
                                         [u], h_rel * scale)
        flow = rhs_nls(state, dealias=False) - local_gauge_offset("nls", grid, u, None)
        out = hop_nls(grid, g, u, policy)
        return _rel(out - flow, rhs_nls(state, dealias=False))
    M = as_matrix(J)
    if system in ("sys1", 1):
        u = state.u
        if not np.any(u):
            return 0.0
        scale = max(1.0, float(np.max(np.abs(u))))
        (g,) = variational_derivative_fd(grid, lambda uu: hamiltonian_sys1(StateSys1(grid, uu), M),
                                         [u], h_rel * scale)
        rhs = rhs_sys1(state, M, policy=policy, dealias=False)
        flow = rhs - local_gauge_offset("sys1", grid, u, M)
        return _rel(hop_sys1(grid, g, u, policy) - flow, rhs)
    if system in ("sys2", 2):
        v, u = state.v, state.u
        if not (np.any(u) or np.any(v)):
            return 0.0
        scale = max(1.0, float(np.max(np.abs(u))), float(np.max(np.abs(v))))
        gv, gu = variational_derivative_fd(
            grid, lambda vv, uu: hamiltonian_sys2(StateSys2(grid, vv, uu), M), [v, u], h_rel * scale)
        vt, ut = rhs_sys2(state, M, policy=policy, dealias=False)
        ov, ou = hop_sys2(grid, (gv, gu), (v, u), policy)
        flow_u = ut - local_gauge_offset("sys2", grid, u, M, v)
        num = np.sqrt(np.sum(np.abs(ov - vt) ** 2) + np.sum(np.abs(ou - flow_u) ** 2))
        den = np.sqrt(np.sum(np.abs(vt) ** 2) + np.sum(np.abs(ut) ** 2))
        return float(num / den) if den > 0 else float(num)
    raise ValueError(f"unknown system {system!r}")


def _rel(diff, ref):
    den = np.linalg.norm(ref)
    return float(np.linalg.norm(diff) / den) if den > 0 else float(np.linalg.norm(diff))


# ---------------------------------------------------------------------------
# Defining relations of the auxiliary potentials
# ---------------------------------------------------------------------------

def aux_relation_residuals(system, grid, u, aux: AuxiliaryPotentials, v=None) -> dict:
    """Differentiated defining relations; derivatives are compared modulo their means."""
    u = np.asarray(u, dtype=complex)
    w = aux.w
    wb = np.conj(w)

    def dev(lhs, rhs):
        r = rhs - grid.mean(rhs)
        return float(np.max(np.abs(grid.dx(lhs) - r)))

    out = {}
    if system == "sys1":
        out["W2_par"] = dev(aux.W2_par, 2.0 * (outer(u, w) - outer(w, u)))
        out["W_par"] = dev(aux.W_par, 2.0 * np.imag(hermitian_dot(u, w)))
        out["w_par"] = dev(aux.w_par, 2.0 * trace_free(outer(np.conj(u), w) - outer(wb, u)))
    elif system == "sys2":
        out["W_par"] = dev(aux.W_par, 2.0 * np.imag(hermitian_dot(u, w)))
        out["w_par"] = dev(aux.w_par, trace_free(outer(np.conj(u), w) - outer(wb, u)))
    else:
        raise ValueError(system)
    return out

