"""Initial-condition families for the three systems."""
from __future__ import annotations

import numpy as np

from .algebra import make_generator
from .grid import Field, PeriodicGrid
from .systems import StateNLS, StateSys1, StateSys2, embed_scalar, su2_rotation

FAMILIES = ("plane_wave", "gaussian_rotation", "scalar_embedding", "random", "file")


def plane_wave(grid: PeriodicGrid, amplitude=1.0, mode=1, direction=(1.0, 0.0)):
    """a exp(i k x) times a fixed unit spinor (or a scalar when direction is None)."""
    w = amplitude * np.exp(1j * grid.k[int(mode) % grid.n_points] * grid.x)
    if direction is None:
        return w
    d = np.asarray(direction, dtype=complex)
    return w[:, None] * (d / np.linalg.norm(d))


def gaussian_rotation(grid: PeriodicGrid, J, amplitude=0.5, width=0.6, center=None, twist=1.0):
    """Gaussian envelope on (1, 0) rotated pointwise by exp(phi(x) J).

    phi is a smooth periodic profile ``twist * sin(2 pi x / L)``.
    """
    x0 = grid.length / 2.0 if center is None else center
    env = amplitude * np.exp(-((grid.x - x0) / width) ** 2)
    phi = twist * np.sin(2.0 * np.pi * grid.x / grid.length)
    R = np.stack([su2_rotation(J, p) for p in phi])
    return np.einsum("n,nj->nj", env, R[:, 0, :])


def band_limited(grid: PeriodicGrid, rng, components=1, kmax=4, amplitude=0.5, real=False):
    """Random trigonometric polynomial with 1/(1+k^2) weights, scaled to sup norm ``amplitude``."""
    n = grid.n_points
    out = np.zeros((n, components), dtype=complex)
    ph = 2.0 * np.pi * grid.x / grid.length
    for j in range(components):
        for m in range(-kmax, kmax + 1):
            c = rng.normal() + 1j * rng.normal()
            out[:, j] += c * np.exp(1j * m * ph) / (1.0 + m * m)
    if real:
        out = out.real
    scale = np.max(np.abs(out))
    out = amplitude * out / scale if scale > 0 else out
    return out[:, 0] if components == 1 else out


def build_state(system: str, grid: PeriodicGrid, spec: dict, J=None, seed: int = 0):
    """Construct the initial state of ``system`` from a family spec dict."""
    fam = spec.get("family")
    if fam not in FAMILIES:
        raise ValueError(f"unknown initial-condition family {fam!r}")
    rng = np.random.default_rng(seed)
    J = make_generator(0.0, 0.0) if J is None else J
    v = None
    if fam == "file":
        vals = Field.load_binary(spec["path"]).values
        if system == "nls":
            return StateNLS(grid, vals if vals.ndim == 1 else vals[:, 0])
        if system == "sys1":
            return StateSys1(grid, vals)
        return StateSys2(grid, vals[:, 0].real, vals[:, 1:])
    if fam == "plane_wave":
        u = plane_wave(grid, spec.get("amplitude", 1.0), spec.get("mode", 1),
                       None if system == "nls" else spec.get("direction", (1.0, 0.0)))
    elif fam == "gaussian_rotation":
        u = gaussian_rotation(grid, J, spec.get("amplitude", 0.5), spec.get("width", 0.6),
                              spec.get("center"), spec.get("twist", 1.0))
        if system == "nls":
            u = u[:, 0]
    elif fam == "scalar_embedding":
        f = band_limited(grid, rng, 1, spec.get("kmax", 4), spec.get("amplitude", 0.5))
        u = f if system == "nls" else embed_scalar(f)
    else:
        u = band_limited(grid, rng, 1 if system == "nls" else 2, spec.get("kmax", 4),
                         spec.get("amplitude", 0.5))
    if system == "sys2":
        va = spec.get("v_amplitude", 0.0)
        v = band_limited(grid, rng, 1, spec.get("kmax", 4), va, real=True) if va else np.zeros(grid.n_points)
        return StateSys2(grid, v, u)
    if system == "sys1":
        return StateSys1(grid, u)
    return StateNLS(grid, u)
