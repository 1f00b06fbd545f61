"""Curve flows: the R^3 vortex filament and the SU(2) bi-normal flows in R^5 / R^6.

A curve is stored as ``r(x) = c x + p(x)`` with ``p`` periodic and ``c`` a
constant drift vector.  Closed curves have ``c = 0``.  Open-periodic curves
(a straight line carrying a localized bump, a helix) keep the unit tangent
periodic so every spectral operator still applies.

The normal complex structure ``J_r`` of the SU(2) flows is built from a
reference matrix ``A`` (the isotropy action of the su(2) generator on the
symmetric-space tangent ``m``, written in an orthonormal basis) via
``J_r = g A g^t``, where ``g`` is the parallel-transport frame carrying the
reference direction ``e`` onto the tangent ``T``.  In R^6 the transport is
unitary for the complex structure ``K`` induced by the hermitian element.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .algebra import SU2Generator, as_matrix, make_generator
from .errors import BlowupError, FrameDegeneracyError, ResolutionError
from .grid import Field, PeriodicGrid

CASES = ("su4sp2", "so6u3")
CASE_DIM = {"su4sp2": 5, "so6u3": 6}
UNIT_SPEED_TOL = 1e-6
KAPPA_MIN = 1e-8


# ---------------------------------------------------------------------------
# Curve state
# ---------------------------------------------------------------------------

@dataclass
class CurveState:
    grid: PeriodicGrid
    p: np.ndarray
    drift: np.ndarray = None
    closed: bool = True

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.ndim != 2 or self.p.shape[0] != self.grid.n_points:
            raise ValueError("curve samples must have shape (N, dimension)")
        if self.p.shape[1] not in (3, 5, 6):
            raise ValueError(f"curve dimension must be 3, 5 or 6, got {self.p.shape[1]}")
        d = np.zeros(self.dimension) if self.drift is None else np.asarray(self.drift, dtype=float)
        if d.shape != (self.dimension,):
            raise ValueError("drift must be a vector of the curve dimension")
        self.drift = d
        if self.closed and np.any(d != 0):
            raise ValueError("a closed curve has zero drift")

    @property
    def dimension(self) -> int:
        return self.p.shape[1]

    @property
    def r(self):
        return self.grid.x[:, None] * self.drift + self.p

    def tangent(self):
        return self.drift + self.grid.dx(self.p)

    def speed_defect(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.tangent(), axis=1) - 1.0)))

    def is_unit_speed(self, tol=UNIT_SPEED_TOL) -> bool:
        return self.speed_defect() <= tol

    def copy_with(self, p):
        return CurveState(self.grid, p, self.drift.copy(), self.closed)

    @classmethod
    def from_tangent(cls, grid, T, origin=None):
        """Integrate a periodic tangent field; the drift is its mean."""
        T = np.asarray(T, dtype=float)
        c = T.mean(axis=0)
        p = grid.dx_inv(T)
        p = p - p[0] + (0.0 if origin is None else np.asarray(origin, dtype=float))
        closed = bool(np.all(np.abs(c) < 1e-14))
        return cls(grid, p, None if closed else c, closed)

    # -- serialisation -----------------------------------------------------
    def save_csv(self, path):
        r = self.r
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"r{i}" for i in range(self.dimension)])
            for xi, ri in zip(self.grid.x, r):
                w.writerow([repr(float(xi))] + [repr(float(v)) for v in ri])

    @classmethod
    def load_csv(cls, path, length=None, drift=None):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        n = data.shape[0]
        if length is None:
            length = n * (data[1, 0] - data[0, 0])
        grid = PeriodicGrid(n, length)
        r = data[:, 1:]
        if drift is None:
            return cls(grid, r)
        drift = np.asarray(drift, dtype=float)
        return cls(grid, r - grid.x[:, None] * drift, drift, closed=False)


def _trig_eval(grid, f, pts):
    """Evaluate the trigonometric interpolant of samples ``f`` at points ``pts``."""
    F = np.fft.fft(f, axis=0) / grid.n_points
    F[grid.n_points // 2] = 0.0
    E = np.exp(1j * np.outer(pts, grid.k))
    out = E @ F.reshape(grid.n_points, -1)
    return out.real.reshape((len(pts),) + np.shape(f)[1:])


def reparametrize(curve: CurveState, newton_iters: int = 50, tol: float = 1e-14) -> CurveState:
    """Resample a curve at equal arclength; the new period is the curve length."""
    g = curve.grid
    T = curve.tangent()
    sigma = np.linalg.norm(T, axis=1)
    if np.min(sigma) <= 0:
        raise FrameDegeneracyError("curve has a stationary point")
    lam = g.integrate(sigma)
    sm = sigma.mean()
    S = g.dx_inv(sigma - sm)
    s_of = lambda th: sm * th + _trig_eval(g, S, th) - _trig_eval(g, S, np.zeros(1))[0]  # noqa: E731
    s_new = np.arange(g.n_points) * lam / g.n_points
    th = s_new / sm
    for _ in range(newton_iters):
        step = (s_of(th) - s_new) / _trig_eval(g, sigma, th)
        th = th - step
        if np.max(np.abs(step)) < tol:
            break
    grid = PeriodicGrid(g.n_points, lam)
    r = curve.drift * th[:, None] + _trig_eval(g, curve.p, th)
    c = curve.drift * g.length / lam
    return CurveState(grid, r - grid.x[:, None] * c, None if curve.closed else c, curve.closed)


# -- analytic curves -------------------------------------------------------

def circle(n: int, radius: float = 1.0) -> CurveState:
    grid = PeriodicGrid(n, 2.0 * np.pi * radius)
    s = grid.x / radius
    return CurveState(grid, np.stack([radius * np.cos(s), radius * np.sin(s), 0.0 * s], axis=1))


def helix(n: int, a: float, b: float) -> CurveState:
    """Unit-speed helix of radius ``a`` and pitch parameter ``b`` (one turn per period)."""
    c = np.hypot(a, b)
    grid = PeriodicGrid(n, 2.0 * np.pi * c)
    s = grid.x / c
    p = np.stack([a * np.cos(s), a * np.sin(s), 0.0 * s], axis=1)
    return CurveState(grid, p, np.array([0.0, 0.0, b / c]), closed=False)


def helix_constants(a, b):
    c2 = a * a + b * b
    return a / c2, b / c2


def perturbed_circle(n: int, radius: float = 1.0, eps: float = 0.1, mode: int = 2) -> CurveState:
    """The curve (R cos t, R sin t, eps cos(mode t)) resampled at unit speed."""
    grid = PeriodicGrid(n, 2.0 * np.pi)
    t = grid.x
    p = np.stack([radius * np.cos(t), radius * np.sin(t), eps * np.cos(mode * t)], axis=1)
    return reparametrize(CurveState(grid, p))


def planar_circle(n: int, dim: int, radius: float = 1.0, plane=(0, 1)) -> CurveState:
    grid = PeriodicGrid(n, 2.0 * np.pi * radius)
    s = grid.x / radius
    p = np.zeros((n, dim))
    p[:, plane[0]] = radius * np.cos(s)
    p[:, plane[1]] = radius * np.sin(s)
    return CurveState(grid, p)


def bump_curve(n: int, dim: int, length: float = 20.0, angle: float = 0.6, width: float = 1.5,
               rng=None, axis=None) -> CurveState:
    """Straight line along ``axis`` carrying a localized Gaussian bend.

    The tangent equals ``axis`` to machine precision near the seam, so the
    transported structure is continuous there even when the loop has holonomy.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    grid = PeriodicGrid(n, length)
    x = grid.x
    e = np.zeros(dim)
    e[0] = 1.0
    e = e if axis is None else np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    basis = np.linalg.qr(np.column_stack([e, rng.normal(size=(dim, dim - 1))]))[0][:, 1:]
    w = rng.normal(size=(3, dim - 1))
    ph = 2.0 * np.pi * x / length
    nv = (w[0] + np.outer(np.cos(ph), w[1]) * 0.5 + np.outer(np.sin(ph), w[2]) * 0.5) @ basis.T
    nv /= np.linalg.norm(nv, axis=1, keepdims=True)
    phi = angle * np.exp(-((x - length / 2.0) / width) ** 2)
    T = np.cos(phi)[:, None] * e + np.sin(phi)[:, None] * nv
    return CurveState.from_tangent(grid, T)


def random_tangent_curve(n: int, dim: int, rng, length: float = 2.0 * np.pi, kmax: int = 3,
                         amp: float = 0.5) -> CurveState:
    """Curve whose unit tangent is a random band-limited direction field."""
    grid = PeriodicGrid(n, length)
    ph = 2.0 * np.pi * grid.x / length
    base = rng.normal(size=dim)
    T = np.tile(2.0 * base / np.linalg.norm(base), (n, 1))
    for m in range(1, kmax + 1):
        T += np.outer(np.cos(m * ph), rng.normal(size=dim)) * amp / m
        T += np.outer(np.sin(m * ph), rng.normal(size=dim)) * amp / m
    T /= np.linalg.norm(T, axis=1, keepdims=True)
    return CurveState.from_tangent(grid, T)


# ---------------------------------------------------------------------------
# R^3: Frenet frame, bi-normal flow, Hasimoto map
# ---------------------------------------------------------------------------

@dataclass
class FrenetFrame:
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray

    def orthonormality_defect(self) -> float:
        F = np.stack([self.T, self.N, self.B], axis=1)
        G = np.einsum("nij,nkj->nik", F, F)
        return float(np.max(np.abs(G - np.eye(3))))


def _require(curve, dims, check_speed=True):
    if curve.dimension not in dims:
        raise ValueError(f"curve dimension {curve.dimension} not in {dims}")
    if check_speed and not curve.is_unit_speed():
        raise ValueError(f"curve is not unit speed (defect {curve.speed_defect():.3e})")


def frenet_frame(curve: CurveState, kappa_min: float = KAPPA_MIN) -> FrenetFrame:
    _require(curve, (3,))
    g = curve.grid
    T = curve.tangent()
    Tx = g.dx(curve.p, 2)
    Txx = g.dx(curve.p, 3)
    kappa = np.linalg.norm(Tx, axis=1)
    if np.min(kappa) < kappa_min:
        raise FrameDegeneracyError(f"curvature {np.min(kappa):.3e} below {kappa_min:g}")
    N = Tx / kappa[:, None]
    B = np.cross(T, N)
    tau = np.einsum("ni,ni->n", np.cross(T, Tx), Txx) / kappa ** 2
    return FrenetFrame(T, N, B, kappa, tau)


def binormal_rhs_r3(curve: CurveState, dealias: bool = True):
    _require(curve, (3,))
    g = curve.grid
    v = np.cross(curve.tangent(), g.dx(curve.p, 2))
    return g.dealias(v) if dealias else v


def hasimoto_map(curve: CurveState, kappa_min: float = KAPPA_MIN):
    """u = kappa exp(i int_0^x tau), phase zero at the first sample."""
    fr = frenet_frame(curve, kappa_min)
    g = curve.grid
    tm = fr.tau.mean()
    phase = tm * g.x + g.dx_inv(fr.tau - tm)
    phase = phase - phase[0]
    return fr.kappa * np.exp(1j * phase)


def gauge_invariants(grid, u):
    """|u| and the phase gradient Im(conj(u) u_x)/|u|^2."""
    a2 = np.abs(u) ** 2
    return np.sqrt(a2), np.imag(np.conj(u) * grid.dx(u)) / a2


# ---------------------------------------------------------------------------
# Reference structures for the SU(2) bi-normal flows
# ---------------------------------------------------------------------------

def _m4(a, al, be):
    A = np.array([[1j * a, al], [-np.conj(al), -1j * a]])
    B = np.array([[0, be], [-be, 0]])
    return np.block([[A, B], [np.conj(B), -np.conj(A)]])


def _m6(Ac):
    return np.block([[Ac.real, Ac.imag], [Ac.imag, -Ac.real]])


def _h6(B):
    return np.block([[B.real, B.imag], [-B.imag, B.real]])


def m_basis(case: str):
    """Orthonormal basis of m for the form -Re tr(XY)."""
    if case == "su4sp2":
        raw = [_m4(1, 0, 0), _m4(0, 1, 0), _m4(0, 1j, 0), _m4(0, 0, 1), _m4(0, 0, 1j)]
    elif case == "so6u3":
        raw = []
        for i, j in ((0, 1), (0, 2), (1, 2)):
            for z in (1.0, 1j):
                Ac = np.zeros((3, 3), dtype=complex)
                Ac[i, j], Ac[j, i] = z, -z
                raw.append(_m6(Ac))
    else:
        raise ValueError(f"unknown case {case!r}")
    return [b / np.sqrt(-np.real(np.trace(b @ b))) for b in raw]


def isotropy_generator(case: str, J=None):
    """The matrix in h whose adjoint action realises u -> u J on m."""
    M = as_matrix(make_generator(0.0, 0.0) if J is None else J)
    j00, j01 = M[0, 0], M[0, 1]
    if case == "su4sp2":
        d = lambda z: np.diag([z, 0.0])    # noqa: E731
        return np.block([[d(j00), d(np.conj(j01))], [-d(j01), d(np.conj(j00))]])
    if case == "so6u3":
        B = np.array([[j00, -np.conj(j01), 0], [j01, np.conj(j00), 0], [0, 0, 0]])
        return _h6(B)
    raise ValueError(f"unknown case {case!r}")


def hermitian_element():
    """The u(3)-central element i I_3 in the real 6x6 representation."""
    return _h6(1j * np.eye(3))


def _ad_matrix(X, basis):
    co = lambda Y: np.array([-np.real(np.trace(Y @ b)) for b in basis])   # noqa: E731
    return np.array([co(X @ b - b @ X) for b in basis]).T


def reference_structure(case: str, J=None):
    """(A, e_hat, K): the reference action, the unit Cartan direction, and the
    complex structure of the R^6 case (None in R^5)."""
    basis = m_basis(case)
    A = _ad_matrix(isotropy_generator(case, J), basis)
    e = np.zeros(len(basis))
    e[0] = 1.0
    K = 0.5 * _ad_matrix(hermitian_element(), basis) if case == "so6u3" else None
    return A, e, K


def _complex_frame(K, e):
    """Orthonormal Q = [e1 e2 e3 | K e1 K e2 K e3] with e1 = e."""
    es = [e]
    for v in np.eye(6):
        span = np.column_stack(es + [K @ w for w in es])
        v = v - span @ (span.T @ v)
        if np.linalg.norm(v) > 1e-6:
            es.append(v / np.linalg.norm(v))
        if len(es) == 3:
            break
    return np.column_stack(es + [K @ w for w in es])


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------

def _shifted(grid, f, refine, delta):
    """Samples of the trig interpolant of ``f`` at ``x_fine + delta``."""
    n = grid.n_points
    m = refine * n
    F = np.fft.fft(f, axis=0)
    F[n // 2] = 0.0
    G = np.zeros((m,) + F.shape[1:], dtype=complex)
    G[: n // 2] = F[: n // 2]
    G[m - n // 2 + 1:] = F[n // 2 + 1:]
    kf = 2.0 * np.pi / grid.length * np.fft.fftfreq(m, 1.0 / m)
    G *= np.exp(1j * kf * delta).reshape((-1,) + (1,) * (F.ndim - 1))
    return np.fft.ifft(G, axis=0).real * refine


def _prefix_products(P):
    """Out[k] = P[k] @ ... @ P[0], by doubling."""
    out = P.copy()
    s = 1
    while s < len(out):
        out[s:] = out[s:] @ out[:-s]
        s *= 2
    return out


def _rodrigues(a, b):
    """Rotation taking unit a to unit b inside span(a, b), per sample."""
    c = np.einsum("ni,ni->n", a, b)
    if np.min(c) <= -1.0 + 1e-12:
        raise FrameDegeneracyError("antipodal tangents cannot be aligned by a minimal rotation")
    S = b[:, :, None] * a[:, None, :] - a[:, :, None] * b[:, None, :]
    d = a.shape[1]
    return np.eye(d) + S + (S @ S) / (1.0 + c)[:, None, None]


def _unitary_align(a, b):
    """Unitary map taking complex unit a to b, identity off span_C(a, b)."""
    ip = np.einsum("ni,ni->n", np.conj(a), b)
    ph = np.exp(1j * np.angle(ip))
    bp = b / ph[:, None]
    c = np.abs(ip)
    if np.min(c) <= 1e-12 - 1.0:
        raise FrameDegeneracyError("cannot align tangents")
    S = bp[:, :, None] * np.conj(a)[:, None, :] - a[:, :, None] * np.conj(bp)[:, None, :]
    d = a.shape[1]
    R = np.eye(d) + S + (S @ S) / (1.0 + c)[:, None, None]
    Pb = b[:, :, None] * np.conj(b)[:, None, :]
    return (np.eye(d) + (ph - 1.0)[:, None, None] * Pb) @ R


def _connection_real(T, Tx):
    return Tx[:, :, None] * T[:, None, :] - T[:, :, None] * Tx[:, None, :]


def _connection_unitary(Z, Zx):
    O = Zx[:, :, None] * np.conj(Z)[:, None, :] - Z[:, :, None] * np.conj(Zx)[:, None, :]
    s = np.einsum("ni,ni->n", np.conj(Zx), Z)
    return O + s[:, None, None] * Z[:, :, None] * np.conj(Z)[:, None, :]


def _magnus_transport(grid, T, conn, to_vec, refine):
    """Frames g_j (j = 0..N) solving g_x = Omega g by 4th-order Magnus steps on a
    grid refined ``refine`` times, starting from the identity."""
    m = refine * grid.n_points
    h = grid.length / m
    r3 = np.sqrt(3.0) / 6.0
    Tx = grid.dx(T)
    A1 = conn(to_vec(_shifted(grid, T, refine, h * (0.5 - r3))), to_vec(_shifted(grid, Tx, refine, h * (0.5 - r3))))
    A2 = conn(to_vec(_shifted(grid, T, refine, h * (0.5 + r3))), to_vec(_shifted(grid, Tx, refine, h * (0.5 + r3))))
    theta = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) / 12.0) * h * h * (A2 @ A1 - A1 @ A2)
    G = _prefix_products(expm(theta))
    eye = np.eye(G.shape[1], dtype=G.dtype)[None]
    return np.concatenate([eye, G[refine - 1::refine]], axis=0)


@dataclass
class NormalComplexStructure:
    J_r: np.ndarray
    case: str
    sign_choice: int = 1
    tangent: np.ndarray = field(default=None, repr=False)
    K: np.ndarray | None = field(default=None, repr=False)
    seam_defect: float = 0.0
    frames: np.ndarray | None = field(default=None, repr=False)

    def normal_projector(self):
        T = self.tangent
        d = T.shape[1]
        P = np.eye(d) - T[:, :, None] * T[:, None, :]
        if self.K is not None:
            KT = T @ self.K.T
            P = P - KT[:, :, None] * KT[:, None, :]
        return P

    def residuals(self) -> dict:
        T = self.tangent
        out = {"annihilates_tangent": float(np.max(np.abs(np.einsum("nij,nj->ni", self.J_r, T)))),
               "square_is_minus_projector": float(np.max(np.abs(self.J_r @ self.J_r + self.normal_projector())))}
        if self.K is not None:
            KT = T @ self.K.T
            out["annihilates_hermitian_image"] = float(np.max(np.abs(np.einsum("nij,nj->ni", self.J_r, KT))))
        return out

    def apply(self, v):
        return np.einsum("nij,nj->ni", self.J_r, v)

    def save(self, out_dir, grid):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        d = self.J_r.shape[1]
        Field(grid, self.J_r.reshape(len(self.J_r), d * d)).save_binary(out / "structure.bin")
        meta = {"case": self.case, "sign_choice": self.sign_choice, "dimension": d,
                "seam_defect": self.seam_defect}
        (out / "meta.json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, out_dir):
        out = Path(out_dir)
        meta = json.loads((out / "meta.json").read_text())
        d = meta["dimension"]
        f = Field.load_binary(out / "structure.bin")
        return cls(f.values.real.reshape(-1, d, d), meta["case"], meta["sign_choice"],
                   seam_defect=meta["seam_defect"]), f.grid


def build_normal_structure(curve: CurveState, case: str = "su4sp2", J=None, sign_choice: int = 1,
                           refine: int = 4, check_speed: bool = True) -> NormalComplexStructure:
    """J_r = g A g^t with g the parallel (R^5) or unitary (R^6) transport frame."""
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    if sign_choice not in (1, -1):
        raise ValueError("sign_choice must be +1 or -1")
    if J is not None and not isinstance(J, SU2Generator):
        raise TypeError("J must be an SU2Generator")
    _require(curve, (CASE_DIM[case],), check_speed)
    g = curve.grid
    T = curve.tangent()
    nrm = np.linalg.norm(T, axis=1)
    if np.min(nrm) < 1e-8:
        raise FrameDegeneracyError("degenerate tangent data")
    That = T / nrm[:, None]
    A, e, K = reference_structure(case, J)
    A = sign_choice * A
    if K is None:
        base = _rodrigues(e[None], That[:1])[0]
        G = _magnus_transport(g, That, _connection_real, lambda v: v, refine)
        G = G @ base
        fix = _rodrigues(np.einsum("nij,j->ni", G[:-1], e), That)
        frames = fix @ G[:-1]
        end = G[-1]
    else:
        Q = _complex_frame(K, e)
        to_c = lambda v: v @ Q[:, :3] + 1j * (v @ Q[:, 3:])   # noqa: E731
        Z = to_c(That)
        ez = np.array([1.0, 0.0, 0.0], dtype=complex)
        base = _unitary_align(ez[None], Z[:1])[0]
        Gc = _magnus_transport(g, That, _connection_unitary, to_c, refine) @ base
        fix = _unitary_align(np.einsum("nij,j->ni", Gc[:-1], ez), Z)
        Gc_fix = fix @ Gc[:-1]
        real = lambda M: Q @ np.block([[M.real, -M.imag], [M.imag, M.real]]) @ Q.T  # noqa: E731
        frames = np.stack([real(M) for M in Gc_fix])
        end = real(Gc[-1])
    Jr = frames @ A @ np.swapaxes(frames, 1, 2)
    seam = float(np.max(np.abs(end @ A @ end.T - Jr[0])))
    return NormalComplexStructure(Jr, case, sign_choice, That, K, seam, frames)


def su2_binormal_rhs(curve: CurveState, structure: NormalComplexStructure, dealias: bool = True):
    v = structure.apply(curve.grid.dx(curve.p, 2))
    return curve.grid.dealias(v) if dealias else v


# ---------------------------------------------------------------------------
# Time evolution of curves
# ---------------------------------------------------------------------------

@dataclass
class CurveTrajectory:
    times: list = field(default_factory=list)
    curves: list = field(default_factory=list)
    arclength_drift: list = field(default_factory=list)
    hasimoto: list = field(default_factory=list)
    seam_defect: list = field(default_factory=list)
    reparametrizations: int = 0

    def tangents(self):
        return [c.tangent() for c in self.curves]

    def save(self, out_dir):
        out = Path(out_dir)
        (out / "curves").mkdir(parents=True, exist_ok=True)
        for i, c in enumerate(self.curves):
            c.save_csv(out / "curves" / f"{i:04d}.csv")
        meta = {"times": self.times, "arclength_drift": self.arclength_drift,
                "seam_defect": self.seam_defect, "reparametrizations": self.reparametrizations,
                "dimension": self.curves[0].dimension, "length": self.curves[0].grid.length,
                "drift": self.curves[0].drift.tolist()}
        (out / "meta.json").write_text(json.dumps(meta, indent=2))


def _evolve_curve(curve, velocity, dt, t_final, stride, on_record, reparam_tol):
    if not dt > 0 or not t_final > 0 or stride < 1:
        raise ValueError("dt and t_final must be positive and stride >= 1")
    if curve.grid.tail_ratio(curve.p) > 1e-8 and curve.grid.tail_ratio(curve.grid.dx(curve.p)) > 1e-8:
        raise ResolutionError(0.0, curve.grid.tail_ratio(curve.grid.dx(curve.p)))
    traj = CurveTrajectory()
    n = int(round(t_final / dt))
    p = curve.p.copy()
    c = curve

    def rec(t, c):
        traj.times.append(t)
        traj.curves.append(c)
        traj.arclength_drift.append(c.speed_defect())
        on_record(traj, c)

    rec(0.0, c)
    for i in range(1, n + 1):
        k1 = velocity(c.copy_with(p))
        k2 = velocity(c.copy_with(p + 0.5 * dt * k1))
        k3 = velocity(c.copy_with(p + 0.5 * dt * k2))
        k4 = velocity(c.copy_with(p + dt * k3))
        p = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = i * dt
        m = float(np.max(np.abs(p)))
        if not np.isfinite(m) or m > 1e8:
            raise BlowupError(t, m)
        c = c.copy_with(p)
        if reparam_tol is not None and c.speed_defect() > reparam_tol:
            c = reparametrize(c)
            p = c.p.copy()
            traj.reparametrizations += 1
        if i % stride == 0 or i == n:
            r = c.grid.tail_ratio(c.grid.dx(p))
            if r > 1e-3:
                raise ResolutionError(t, r)
            rec(t, c)
    return traj


def evolve_filament(curve: CurveState, dt: float, t_final: float, stride: int = 1,
                    record_hasimoto: bool = True, reparam_tol: float | None = None) -> CurveTrajectory:
    """RK4 integration of r_t = r_x x r_xx.

    The step must satisfy dt * k_max^2 < 2.8 with k_max the largest kept
    wavenumber.  With ``reparam_tol`` set, the curve is resampled at unit
    speed whenever the speed defect exceeds it.
    """
    _require(curve, (3,))

    def rec(traj, c):
        if not record_hasimoto:
            return
        try:
            traj.hasimoto.append(hasimoto_map(c))
        except FrameDegeneracyError:
            traj.hasimoto.append(None)

    return _evolve_curve(curve, binormal_rhs_r3, dt, t_final, stride, rec, reparam_tol)


def evolve_su2_binormal(curve: CurveState, dt: float, t_final: float, case: str = "su4sp2", J=None,
                        stride: int = 1, refine: int = 4) -> CurveTrajectory:
    """RK4 integration of r_t = J_r(r_xx) with J_r rebuilt at every stage."""
    _require(curve, (CASE_DIM[case],))

    def vel(c):
        return su2_binormal_rhs(c, build_normal_structure(c, case, J, refine=refine, check_speed=False))

    def rec(traj, c):
        traj.seam_defect.append(build_normal_structure(c, case, J, refine=refine, check_speed=False).seam_defect)

    return _evolve_curve(curve, vel, dt, t_final, stride, rec, None)


# ---------------------------------------------------------------------------
# Schrodinger maps
# ---------------------------------------------------------------------------

def schrodinger_map_residual(grid, gammas, dt: float, case: str = "s2", J=None, refine: int = 4) -> float:
    """max_n || gamma_t - J_gamma(grad_x gamma_x) ||_L2 with centred gamma_t.

    ``case`` is ``s2`` (J_gamma = gamma x), ``s4`` or ``s5`` (the transported
    structures of the R^5 and R^6 flows).
    """
    if len(gammas) < 3:
        raise ValueError("at least three snapshots are required")
    worst = 0.0
    for n in range(1, len(gammas) - 1):
        gam = gammas[n]
        gt = (gammas[n + 1] - gammas[n - 1]) / (2.0 * dt)
        gxx = grid.dx(gam, 2)
        cov = gxx - np.einsum("ni,ni->n", gam, gxx)[:, None] * gam
        if case == "s2":
            rhs = np.cross(gam, cov)
        else:
            mcase = {"s4": "su4sp2", "s5": "so6u3"}[case]
            curve = CurveState.from_tangent(grid, gam)
            rhs = build_normal_structure(curve, mcase, J, refine=refine, check_speed=False).apply(cov)
        err = float(np.sqrt(grid.integrate(np.sum((gt - rhs) ** 2, axis=1))))
        worst = max(worst, err)
    return worst
