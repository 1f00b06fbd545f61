"""Right-hand sides and Hamiltonians of the NLS equation and the two SU(2) systems.

Conventions
-----------
* ``u`` is a spinor field of shape ``(N, 2)``; ``v`` a real field ``(N,)``.
* ``A = conj(u)^t u``, ``a = conj(u)^t u_x``, ``b = conj(u_x)^t u``.
* The nonlocal integrand ``(a J + J b)_0`` splits as
  ``1/2 [a - b, J] + 1/2 D_x(|u|^2) J``.  The exact-derivative half is
  integrated pointwise; only ``[a - b, J]`` (and the ``v`` coupling of the
  second system) goes through the zero-mean ``D_x^{-1}``.  This fixes the
  integration constant of the potential to ``1/2 mean|u|^2 J`` and makes the
  ``u2 = 0`` reduction exactly ``i(u_xx + 2|u|^2 u)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (as_matrix, commutator, generator_to_quaternion, hermitian_dot, outer,
                      proj_su, qcomm, qconj, qmul, row_times)
from .grid import MeanPolicy, PeriodicGrid


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@dataclass
class StateNLS:
    grid: PeriodicGrid
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)


@dataclass
class StateSys1:
    grid: PeriodicGrid
    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)


@dataclass
class StateSys2:
    grid: PeriodicGrid
    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v)
        if np.iscomplexobj(v):
            if np.max(np.abs(v.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(v))):
                raise ValueError("v must be real-valued")
            v = v.real
        self.v = v.astype(float)
        self.u = np.asarray(self.u, dtype=complex)


@dataclass
class GaugeConstants:
    """Integration constants of the auxiliary potentials.

    ``CC2 = None`` means the canonical ``-chi^2 J``.
    """

    c1: float = 0.0
    C1: float = 0.0
    CC1: np.ndarray = field(default_factory=lambda: np.zeros((2, 2), dtype=complex))
    CC2: np.ndarray | None = None

    def __post_init__(self):
        self.CC1 = np.asarray(self.CC1, dtype=complex)
        if np.max(np.abs(self.CC1 + self.CC1.T)) > 1e-12:
            raise ValueError("CC1 must be antisymmetric")
        if self.CC2 is not None:
            self.CC2 = np.asarray(self.CC2, dtype=complex)
            if np.max(np.abs(self.CC2 + self.CC2.conj().T)) > 1e-12 or abs(np.trace(self.CC2)) > 1e-12:
                raise ValueError("CC2 must be anti-Hermitian and trace-free")

    def cc2(self, J, chi):
        return -chi ** 2 * as_matrix(J) if self.CC2 is None else self.CC2


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------

def _maybe_dealias(grid, f, dealias):
    return grid.dealias(f) if dealias else f


def norm2(u):
    return np.sum(np.abs(u) ** 2, axis=-1)


def im_uJ(u, M):
    """Im(conj(u) . (u J)) per sample."""
    return np.imag(hermitian_dot(u, u @ M))


def nonlocal_potential(grid, u, J, v=None, policy=MeanPolicy.PROJECT, mean_log=None):
    """su(2)-valued potential  1/2 D^-1[a - b, J] + 1/2 |u|^2 J (+ D^-1(i v [J, A]))."""
    M = as_matrix(J)
    ux = grid.dx(u)
    a = outer(np.conj(u), ux)
    b = outer(np.conj(ux), u)
    integrand = 0.5 * commutator(a - b, M)
    if v is not None:
        integrand = integrand + 1j * v[:, None, None] * commutator(M, outer(np.conj(u), u))
    P = proj_su(grid.dx_inv(integrand, policy=policy, mean_log=mean_log))
    return P + 0.5 * norm2(u)[:, None, None] * M


# ---------------------------------------------------------------------------
# NLS
# ---------------------------------------------------------------------------

def nls_linear_symbol(grid):
    """Fourier multiplier of the linear part  i u_xx."""
    return -1j * grid.k ** 2


def nonlinear_nls(grid, u, dealias=True):
    return _maybe_dealias(grid, 0.5j * np.abs(u) ** 2 * u, dealias)


def rhs_nls(s: StateNLS, dealias=True):
    g, u = s.grid, s.u
    return 1j * g.dx(u, 2) + nonlinear_nls(g, u, dealias)


def hamiltonian_nls(s: StateNLS) -> float:
    return float(np.real(s.grid.integrate(np.imag(np.conj(s.grid.dx(s.u)) * s.u))))


# ---------------------------------------------------------------------------
# First SU(2) system
# ---------------------------------------------------------------------------

def nonlinear_sys1(grid, u, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    M = as_matrix(J)
    P = nonlocal_potential(grid, u, M, policy=policy, mean_log=mean_log)
    out = norm2(u)[:, None] * (u @ M) + 2.0 * row_times(u, P)
    return _maybe_dealias(grid, out, dealias)


def rhs_sys1(s: StateSys1, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    M = as_matrix(J)
    return s.grid.dx(s.u, 2) @ M + nonlinear_sys1(s.grid, s.u, M, policy, mean_log, dealias)


def rhs_sys1_alt(s: StateSys1, J, variant: int, policy=MeanPolicy.PROJECT, mean_log=None):
    """The three rewritten forms, each with zero-mean D^-1 on its own integrand."""
    g, u, M = s.grid, s.u, as_matrix(J)
    ux = g.dx(u)
    a = outer(np.conj(u), ux)
    b = outer(np.conj(ux), u)
    uJ = u @ M
    n2 = norm2(u)[:, None]
    im = im_uJ(u, M)[:, None]
    lin = g.dx(u, 2) @ M
    D = lambda X: g.dx_inv(X, policy=policy, mean_log=mean_log)   # noqa: E731
    if variant == 1:
        rest = n2 * uJ + 1j * im * u + 2.0 * row_times(u, D(commutator(a, M)))
    elif variant == 2:
        rest = 3.0 * n2 * uJ - 1j * im * u - 2.0 * row_times(u, D(commutator(b, M)))
    elif variant == 3:
        rest = 2.0 * n2 * uJ + row_times(u, D(commutator(a - b, M)))
    else:
        raise ValueError(f"variant must be 1, 2 or 3, got {variant}")
    return lin + rest


def rhs_sys1_quaternion(s: StateSys1, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    """Quaternion form, evaluated on u1 + u2 j and returned as a spinor."""
    g = s.grid
    uq = s.u
    q = np.broadcast_to(generator_to_quaternion(J).to_pair(), uq.shape)
    uxq = g.dx(uq)
    ub, uxb = qconj(uq), qconj(uxq)
    integrand = qmul(qmul(ub, uxq), q) + qmul(q, qmul(uxb, uq))
    pot = g.dx_inv(integrand, policy=policy, mean_log=mean_log)
    pot[:, 0] = 1j * pot[:, 0].imag                # keep it an imaginary quaternion
    n2 = norm2(uq)[:, None]
    uqq = qmul(uq, q)
    nonlin = n2 * uqq + qmul(uq, pot) + np.mean(n2) * uqq
    return qmul(g.dx(uq, 2), q) + _maybe_dealias(g, nonlin, dealias)


def hamiltonian_sys1(s: StateSys1, J) -> float:
    M = as_matrix(J)
    dens = np.real(hermitian_dot(s.u, s.grid.dx(s.u) @ M))
    return float(s.grid.integrate(dens))


# ---------------------------------------------------------------------------
# Second SU(2) system
# ---------------------------------------------------------------------------

def nonlinear_sys2(grid, v, u, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    M = as_matrix(J)
    ux = grid.dx(u)
    uJ = u @ M
    vt = 2.0 * np.imag(hermitian_dot(ux, uJ))
    vx = grid.dx(v)
    P = nonlocal_potential(grid, u, M, v=v, policy=policy, mean_log=mean_log)
    ut = (-1j * vx[:, None] * uJ + (v ** 2)[:, None] * uJ
          + 0.5j * im_uJ(u, M)[:, None] * u + row_times(u, P))
    return _maybe_dealias(grid, vt, dealias), _maybe_dealias(grid, ut, dealias)


def rhs_sys2(s: StateSys2, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    M = as_matrix(J)
    vt, ut = nonlinear_sys2(s.grid, s.v, s.u, M, policy, mean_log, dealias)
    return vt, s.grid.dx(s.u, 2) @ M + ut


def rhs_sys2_alt(s: StateSys2, J, variant: int, policy=MeanPolicy.PROJECT, mean_log=None):
    g, u, v, M = s.grid, s.u, s.v, as_matrix(J)
    ux = g.dx(u)
    a = outer(np.conj(u), ux)
    b = outer(np.conj(ux), u)
    A = outer(np.conj(u), u)
    uJ = u @ M
    n2 = norm2(u)[:, None]
    im = im_uJ(u, M)[:, None]
    D = lambda X: g.dx_inv(X, policy=policy, mean_log=mean_log)   # noqa: E731
    base = g.dx(u, 2) @ M - 1j * g.dx(v)[:, None] * uJ + (v ** 2)[:, None] * uJ
    coupling = 1j * row_times(u, D(v[:, None, None] * commutator(M, A)))
    if variant == 1:
        rest = 1j * im * u + row_times(u, D(commutator(a, M)))
    elif variant == 2:
        rest = n2 * uJ - row_times(u, D(commutator(b, M)))
    elif variant == 3:
        rest = 0.5 * n2 * uJ + 0.5j * im * u + 0.5 * row_times(u, D(commutator(a - b, M)))
    else:
        raise ValueError(f"variant must be 1, 2 or 3, got {variant}")
    return base + rest + coupling


def rhs_sys2_quaternion(s: StateSys2, J, policy=MeanPolicy.PROJECT, mean_log=None, dealias=True):
    g, v = s.grid, s.v
    uq = s.u
    q = np.broadcast_to(generator_to_quaternion(J).to_pair(), uq.shape)
    uxq = g.dx(uq)
    ub, uxb = qconj(uq), qconj(uxq)
    iu = 1j * uq                                   # left multiplication by the complex unit
    # Im(.) of a quaternion means its i-component; u q conj(u_x) carries
    # conj(u_x) . (u J) in its complex part
    vt = 2.0 * np.imag(qmul(qmul(uq, q), uxb)[:, 0])
    local = 0.5 * np.imag(qmul(qmul(uq, q), ub)[:, 0])[:, None] * iu
    integrand = 0.5 * (qmul(qmul(ub, uxq), q) + qmul(q, qmul(uxb, uq)))
    integrand = integrand + 0.5 * v[:, None] * qcomm(q, qmul(ub, iu))
    pot = g.dx_inv(integrand, policy=policy, mean_log=mean_log)
    pot[:, 0] = 1j * pot[:, 0].imag
    n2 = norm2(uq)[:, None]
    uqq = qmul(uq, q)
    ut = (-1j * g.dx(v)[:, None] * uqq + (v ** 2)[:, None] * uqq + local
          + qmul(uq, pot) + 0.5 * np.mean(n2) * uqq)
    return (_maybe_dealias(g, vt, dealias),
            qmul(g.dx(uq, 2), q) + _maybe_dealias(g, ut, dealias))


def hamiltonian_sys2(s: StateSys2, J) -> float:
    M = as_matrix(J)
    dens = np.real(hermitian_dot(s.u, s.grid.dx(s.u) @ M)) + s.v * im_uJ(s.u, M)
    return float(s.grid.integrate(dens))


# ---------------------------------------------------------------------------
# Symmetry and reductions
# ---------------------------------------------------------------------------

def su2_rotation(J, phi):
    """exp(phi J) = cos(phi) I + sin(phi) J, valid because J^2 = -I."""
    return np.cos(phi) * np.eye(2) + np.sin(phi) * as_matrix(J)


def embed_scalar(u1):
    """Spinor (u1, 0) used for the reduction to a scalar equation."""
    u1 = np.asarray(u1, dtype=complex)
    return np.stack([u1, np.zeros_like(u1)], axis=-1)


def local_gauge_offset(system, grid, u, J, v=None):
    """x-constant-coefficient term separating Hop(dH/d conj u) from the evaluators.

    With zero-mean D^-1 inside the Hamiltonian operators, the flow they
    produce equals the evaluator right-hand side minus this term, which is
    assembled from spatial means only.
    """
    M = as_matrix(J) if J is not None else None
    if system == "nls":
        return 0.5j * np.mean(np.abs(u) ** 2) * u
    m1 = np.mean(im_uJ(u, M))
    m2 = np.mean(norm2(u))
    if system == "sys1":
        A = outer(u, u)
        W = A @ M - M.T @ A
        return 1j * m1 * u + m2 * (u @ M) + row_times(np.conj(u), np.broadcast_to(W.mean(axis=0), W.shape))
    if system == "sys2":
        return 1j * m1 * u + 0.5 * m2 * (u @ M)
    raise ValueError(f"unknown system {system!r}")

