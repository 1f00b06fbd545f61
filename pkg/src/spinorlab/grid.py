"""Periodic spectral grid: derivatives, zero-mean antiderivative, quadrature.

All operators act along axis 0 so the same code handles scalar ``(N,)``,
spinor ``(N, 2)`` and matrix ``(N, n, n)`` fields.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import NonzeroMeanError


class MeanPolicy(str, Enum):
    STRICT = "strict"
    PROJECT = "project"


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class PeriodicGrid:
    def __init__(self, n_points: int, length: float = 2.0 * np.pi):
        n_points = int(n_points)
        if n_points < 8 or not _is_pow2(n_points):
            raise ValueError(f"grid size must be a power of two >= 8, got {n_points}")
        if not length > 0:
            raise ValueError(f"grid length must be positive, got {length}")
        self.n_points = n_points
        self.length = float(length)
        self.spacing = self.length / n_points
        self.points = np.arange(n_points) * self.spacing
        self.modes = np.fft.fftfreq(n_points, 1.0 / n_points)        # integer mode numbers
        self.k = 2.0 * np.pi / self.length * self.modes
        self._ik = 1j * self.k
        self._ik[n_points // 2] = 0.0                                  # Nyquist: odd derivative
        inv = np.zeros(n_points, dtype=complex)
        nz = self.k != 0
        inv[nz] = 1.0 / (1j * self.k[nz])
        inv[n_points // 2] = 0.0
        self._inv_ik = inv
        self._keep = np.abs(self.modes) < n_points / 3.0

    @property
    def x(self):
        return self.points

    def __repr__(self):
        return f"PeriodicGrid(N={self.n_points}, L={self.length:g})"

    def __eq__(self, other):
        return (isinstance(other, PeriodicGrid) and other.n_points == self.n_points
                and other.length == self.length)

    def __hash__(self):
        return hash((self.n_points, self.length))

    # -- spectral helpers ---------------------------------------------------
    def _shape(self, f, arr):
        return arr.reshape((-1,) + (1,) * (np.ndim(f) - 1))

    def _apply(self, f, mult):
        f = np.asarray(f)
        out = np.fft.ifft(self._shape(f, mult) * np.fft.fft(f, axis=0), axis=0)
        return out.real if np.isrealobj(f) else out

    def dx(self, f, order: int = 1):
        f = np.asarray(f)
        if order == 1:
            return self._apply(f, self._ik)
        return self._apply(f, (1j * self.k) ** order)

    def mean(self, f):
        return np.mean(np.asarray(f), axis=0)

    def dx_inv(self, f, policy=MeanPolicy.PROJECT, tol=None, mean_log=None):
        """Zero-mean periodic antiderivative of ``f - mean(f)``.

        Under the strict policy a mean larger than ``tol`` (default
        ``1e-10 * rms(f)``) raises NonzeroMeanError.  The removed mean norm is
        appended to ``mean_log`` when a list is supplied.
        """
        f = np.asarray(f)
        m = self.mean(f)
        m_abs = float(np.sqrt(np.sum(np.abs(m) ** 2)))
        if MeanPolicy(policy) is MeanPolicy.STRICT:
            if tol is None:
                tol = 1e-10 * float(np.sqrt(np.mean(np.sum(np.abs(f.reshape(len(f), -1)) ** 2, axis=1))))
            if m_abs > tol:
                raise NonzeroMeanError(m_abs, tol)
        if mean_log is not None:
            mean_log.append(m_abs)
        return self._apply(f, self._inv_ik)

    def integrate(self, f):
        return self.spacing * np.sum(np.asarray(f), axis=0)

    def inner(self, f, g):
        """Real L2 pairing  int Re(conj(f) . g) dx  summed over components."""
        return float(self.spacing * np.sum(np.real(np.conj(f) * g)))

    def dealias(self, f):
        f = np.asarray(f)
        return self._apply(f, self._keep.astype(float))

    def tail_ratio(self, f, fraction: float = 1.0 / 3.0):
        """Largest Fourier magnitude in the top ``fraction`` of modes over the peak."""
        F = np.abs(np.fft.fft(np.asarray(f), axis=0)).reshape(self.n_points, -1).max(axis=1)
        peak = F.max()
        if peak == 0:
            return 0.0
        hi = np.abs(self.modes) >= (0.5 - fraction / 2.0) * self.n_points
        return float(F[hi].max() / peak)

    def fourier_energy(self, f):
        F = np.fft.fft(np.asarray(f), axis=0)
        return float(self.length / self.n_points ** 2 * np.sum(np.abs(F) ** 2))


# ---------------------------------------------------------------------------
# Field snapshots
# ---------------------------------------------------------------------------

_MAGIC = b"SPNF"
_HEADER = struct.Struct("<4sIdI")   # magic, N, L, component_count


@dataclass
class Field:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape[0] != self.grid.n_points:
            raise ValueError("sample count does not match grid size")

    @property
    def component_count(self) -> int:
        return int(np.prod(self.values.shape[1:], dtype=int)) if self.values.ndim > 1 else 1

    def _columns(self):
        return np.asarray(self.values, dtype=complex).reshape(self.grid.n_points, -1)

    def to_bytes(self) -> bytes:
        cols = self._columns()
        inter = np.empty((cols.shape[0], cols.shape[1], 2))
        inter[..., 0], inter[..., 1] = cols.real, cols.imag
        head = _HEADER.pack(_MAGIC, self.grid.n_points, self.grid.length, cols.shape[1])
        return head + inter.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, shape=None) -> "Field":
        magic, n, length, m = _HEADER.unpack_from(data)
        if magic != _MAGIC:
            raise ValueError("not a field snapshot")
        raw = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, m, 2)
        vals = raw[..., 0] + 1j * raw[..., 1]
        if shape is not None:
            vals = vals.reshape((n,) + tuple(shape))
        elif m == 1:
            vals = vals[:, 0]
        return cls(PeriodicGrid(n, length), vals)

    def save_binary(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load_binary(cls, path, shape=None) -> "Field":
        return cls.from_bytes(Path(path).read_bytes(), shape)

    def save_csv(self, path):
        cols = self._columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            head = ["x"]
            for c in range(cols.shape[1]):
                head += [f"re{c}", f"im{c}"]
            w.writerow(head)
            for i, xi in enumerate(self.grid.points):
                row = [repr(float(xi))]
                for c in range(cols.shape[1]):
                    row += [repr(float(cols[i, c].real)), repr(float(cols[i, c].imag))]
                w.writerow(row)

    @classmethod
    def load_csv(cls, path, length=None, shape=None) -> "Field":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        n = data.shape[0]
        if length is None:
            length = n * (data[1, 0] - data[0, 0])
        vals = data[:, 1::2] + 1j * data[:, 2::2]
        if shape is not None:
            vals = vals.reshape((n,) + tuple(shape))
        elif vals.shape[1] == 1:
            vals = vals[:, 0]
        return cls(PeriodicGrid(n, length), vals)
