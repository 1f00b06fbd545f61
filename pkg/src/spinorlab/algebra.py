"""Complex, quaternion and small-matrix algebra.

Spinors are row vectors ``u = (u1, u2)`` stored with the component index
last, so a spinor field has shape ``(N, 2)`` and a matrix field ``(N, n, n)``.

Quaternions in vectorised code use the complex-pair form ``a + b j`` with
the rule ``z j = j conj(z)``.  Under this encoding the spinor ``(u1, u2)``
*is* the quaternion ``u1 + u2 j``, and right multiplication ``u -> u J`` by
an su(2) matrix is right multiplication by the quaternion ``J00 + J01 j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TagMismatchError

TWO_PI = 2.0 * np.pi

ALGEBRA_TAGS = ("su(2)", "su(4)", "so(4)", "so(6)", "so(2,C)", "s(2,C)", "generic")

# Killing-form scale per algebra, calibrated so that K(e, e) reproduces
# -2 chi^2 for the so(4) Cartan element and -4 chi^2 for the su(4) one.
KILLING_SCALE = {"so(4)": 1.0, "su(4)": 1.0, "so(6)": 1.0, "su(2)": 1.0}


# ---------------------------------------------------------------------------
# su(2) generator
# ---------------------------------------------------------------------------

def generator_matrix(theta, psi):
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * psi)
    return np.array([[1j * c, e * s], [-np.conj(e) * s, -1j * c]])


@dataclass(frozen=True)
class SU2Generator:
    """Normalised su(2) element with J @ J = -I."""

    theta: float
    psi: float
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def quaternion(self) -> "Quaternion":
        return generator_to_quaternion(self)


def make_generator(theta: float, psi: float) -> SU2Generator:
    theta = float(np.mod(theta, TWO_PI))
    psi = float(np.mod(psi, TWO_PI))
    return SU2Generator(theta, psi, generator_matrix(theta, psi))


def as_matrix(J) -> np.ndarray:
    """Accept either an SU2Generator or a raw 2x2 array."""
    return J.matrix if isinstance(J, SU2Generator) else np.asarray(J, dtype=complex)


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quaternion:
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def from_pair(cls, a, b) -> "Quaternion":
        a, b = complex(a), complex(b)
        return cls(a.real, a.imag, b.real, b.imag)

    def to_pair(self) -> np.ndarray:
        return np.array([self.w + 1j * self.x, self.y + 1j * self.z])

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return float(np.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2))


def qmul(p, q):
    """Product of quaternion pair arrays of shape (..., 2)."""
    a, b = p[..., 0], p[..., 1]
    c, d = q[..., 0], q[..., 1]
    return np.stack([a * c - b * np.conj(d), a * d + b * np.conj(c)], axis=-1)


def qconj(p):
    return np.stack([np.conj(p[..., 0]), -p[..., 1]], axis=-1)


def qcomm(p, q):
    return qmul(p, q) - qmul(q, p)


def qscalar(z, shape=()):
    """Complex number z = a + i b as the quaternion pair (z, 0)."""
    out = np.zeros(tuple(shape) + (2,), dtype=complex)
    out[..., 0] = z
    return out


def spinor_to_quaternion(u) -> Quaternion:
    u = np.asarray(u, dtype=complex)
    return Quaternion.from_pair(u[0], u[1])


def quaternion_to_spinor(q: Quaternion) -> np.ndarray:
    return q.to_pair()


def su2_to_pair(M):
    """Quaternion m with u M = u m for M in su(2); works on (..., 2, 2)."""
    M = np.asarray(M)
    return np.stack([M[..., 0, 0], M[..., 0, 1]], axis=-1)


def pair_to_su2(p):
    a, b = p[..., 0], p[..., 1]
    row0 = np.stack([a, b], axis=-1)
    row1 = np.stack([-np.conj(b), np.conj(a)], axis=-1)
    return np.stack([row0, row1], axis=-2)


def generator_to_quaternion(J) -> Quaternion:
    M = as_matrix(J)
    q = Quaternion.from_pair(M[0, 0], M[0, 1])
    # drop round-off in the real part; the image is purely imaginary
    return Quaternion(0.0, q.x, q.y, q.z)


def check_spinor_quaternion_dictionary(u, J) -> float:
    u = np.asarray(u, dtype=complex)
    M = as_matrix(J)
    q = generator_to_quaternion(J).to_pair()
    lhs = u @ M
    rhs = qmul(u, np.broadcast_to(q, u.shape))
    return float(np.max(np.abs(lhs - rhs))) if u.size else 0.0


# ---------------------------------------------------------------------------
# Matrix helpers (all act on the trailing two axes)
# ---------------------------------------------------------------------------

def dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def transpose(M):
    return np.swapaxes(M, -1, -2)


def trace_free(M):
    M = np.asarray(M)
    n = M.shape[-1]
    tr = np.trace(M, axis1=-2, axis2=-1)
    return M - (tr / n)[..., None, None] * np.eye(n)


def proj_su(M):
    return trace_free(0.5 * (M - dagger(M)))


def proj_so(M):
    return 0.5 * (M - transpose(M))


def commutator(A, B):
    return A @ B - B @ A


def anticommutator(A, B):
    return A @ B + B @ A


def outer(a, b):
    """Column-times-row product a^t b of row vectors, broadcast over samples."""
    return a[..., :, None] * b[..., None, :]


def row_times(u, M):
    """Row vector(s) u times matrix field M, sample by sample."""
    return np.einsum("...i,...ij->...j", u, M)


def hermitian_dot(u, w):
    """The sesquilinear product conj(u) . w summed over components."""
    return np.sum(np.conj(u) * w, axis=-1)


def rewrite_identity_residuals(u, J):
    """Residuals of the two rewriting identities for the trace-free products."""
    u = np.asarray(u, dtype=complex)
    M = as_matrix(J)
    A = outer(np.conj(u), u)
    uJ = u @ M
    im = np.imag(hermitian_dot(u, uJ))
    norm2 = np.sum(np.abs(u) ** 2, axis=-1)
    r1 = row_times(u, trace_free(M @ A)) - 0.5j * im[..., None] * u
    r2 = row_times(u, trace_free(A @ M)) - norm2[..., None] * uJ + 0.5j * im[..., None] * u
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


# ---------------------------------------------------------------------------
# Tagged small matrices
# ---------------------------------------------------------------------------

def membership_residual(M, tag: str) -> float:
    """Largest violation of the defining predicate of ``tag`` (pointwise max)."""
    M = np.asarray(M)
    if tag in ("su(2)", "su(4)"):
        tr = np.trace(M, axis1=-2, axis2=-1)
        return float(max(np.max(np.abs(M + dagger(M))), np.max(np.abs(tr))))
    if tag in ("so(4)", "so(6)"):
        return float(max(np.max(np.abs(M + transpose(M))), np.max(np.abs(np.imag(M)))))
    if tag == "so(2,C)":
        return float(np.max(np.abs(M + transpose(M))))
    if tag == "s(2,C)":
        return float(np.max(np.abs(M - transpose(M))))
    if tag == "generic":
        return 0.0
    raise ValueError(f"unknown algebra tag {tag!r}")


def is_member(M, tag: str, tol: float = 1e-12) -> bool:
    return membership_residual(M, tag) <= tol


@dataclass(frozen=True)
class SmallMatrix:
    entries: np.ndarray
    algebra_tag: str = "generic"

    def __post_init__(self):
        if self.algebra_tag not in ALGEBRA_TAGS:
            raise ValueError(f"unknown algebra tag {self.algebra_tag!r}")

    def check(self, tol: float = 1e-12) -> bool:
        return is_member(self.entries, self.algebra_tag, tol)


def cartan_killing(X: SmallMatrix, Y: SmallMatrix) -> float:
    if X.algebra_tag != Y.algebra_tag:
        raise TagMismatchError(f"{X.algebra_tag} vs {Y.algebra_tag}")
    c = KILLING_SCALE.get(X.algebra_tag)
    if c is None:
        raise TagMismatchError(f"no Killing normalisation for {X.algebra_tag}")
    return c * float(np.real(np.trace(X.entries @ Y.entries)))


def cartan_element(tag: str, chi: float) -> SmallMatrix:
    """The constant element e of the x-part of each Lax pair."""
    if tag == "so(4)":
        e = np.zeros((4, 4))
        e[0, 1], e[1, 0] = chi, -chi
    elif tag == "su(4)":
        e = 1j * chi * np.diag([1.0, -1.0, 1.0, -1.0])
    elif tag == "so(6)":
        e = np.zeros((6, 6))
        e[0, 1], e[1, 0] = chi, -chi
        e[3, 4], e[4, 3] = -chi, chi
    else:
        raise ValueError(f"no Cartan element for {tag!r}")
    return SmallMatrix(e, tag)
