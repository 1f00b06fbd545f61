"""Property suites run by ``spinorlab verify``.

Each suite returns a list of check records
``{"invariant", "samples", "max_residual", "tolerance", "passed"}``.
"""
from __future__ import annotations

import numpy as np

from . import geomflow as gf
from .algebra import (cartan_element, cartan_killing, check_spinor_quaternion_dictionary,
                      make_generator, rewrite_identity_residuals)
from .grid import PeriodicGrid
from .initial import band_limited
from .integrator import EvolutionConfig, evolve
from .laxpair import (build_lax_nls, build_lax_sys1, build_lax_sys2, check_hamiltonian_form,
                      convergence_order, hop_nls, hop_sys1, hop_sys2, inject_fault, jop_nls,
                      jop_sys1, jop_sys2, skew_residual, zero_curvature_residual)
from .systems import (StateNLS, StateSys1, StateSys2, rhs_sys1, rhs_sys1_quaternion, rhs_sys2,
                      rhs_sys2_quaternion)

SUITES = ("algebra", "operators", "laxpair", "geometry")


def _check(name, samples, residual, tol, lower=None):
    ok = bool(np.isfinite(residual) and (residual >= lower if lower is not None else residual < tol))
    rec = {"invariant": name, "samples": int(samples), "max_residual": float(residual),
           "tolerance": None if lower is not None else float(tol), "passed": ok}
    if lower is not None:
        rec["lower_bound"] = float(lower)
    return rec


def _range_check(name, samples, value, lo, hi):
    return {"invariant": name, "samples": int(samples), "max_residual": float(value),
            "tolerance": [float(lo), float(hi)], "passed": bool(lo <= value <= hi)}


def random_generator(rng):
    return make_generator(rng.uniform(0, 2 * np.pi), rng.uniform(0, 2 * np.pi))


def parity_data(grid, rng, amplitude=0.5, kmax=4):
    """Even spinor u and odd real v: every nonlocal integrand is odd, so its mean vanishes."""
    x = grid.x
    u = np.zeros((grid.n_points, 2), dtype=complex)
    for j in range(2):
        for k in range(kmax + 1):
            u[:, j] += (rng.normal() + 1j * rng.normal()) * np.cos(k * x) / (1 + k * k)
    u *= amplitude / np.max(np.abs(u))
    v = sum(rng.normal() * np.sin(k * x) / (1 + k * k) for k in range(1, kmax + 1))
    v *= amplitude / np.max(np.abs(v))
    return v, u


# ---------------------------------------------------------------------------

def algebra_suite(seed=0, n_samples=10_000, n_states=100):
    rng = np.random.default_rng(seed)
    r_sq = r_ah = r_id = r_dict = 0.0
    for _ in range(n_samples):
        J = random_generator(rng)
        M = J.matrix
        u = rng.normal(size=(1, 2)) + 1j * rng.normal(size=(1, 2))
        r_sq = max(r_sq, float(np.max(np.abs(M @ M + np.eye(2)))))
        r_ah = max(r_ah, float(np.max(np.abs(M + M.conj().T))))
        r_id = max(r_id, *rewrite_identity_residuals(u, J))
        r_dict = max(r_dict, check_spinor_quaternion_dictionary(u, J))
    out = [_check("generator squares to -I", n_samples, r_sq, 1e-12),
           _check("generator anti-hermitian", n_samples, r_ah, 1e-12),
           _check("trace-free rewriting identities", n_samples, r_id, 1e-12),
           _check("spinor-quaternion dictionary", n_samples, r_dict, 1e-12)]
    grid = PeriodicGrid(64)
    q1 = q2 = 0.0
    for _ in range(n_states):
        J = random_generator(rng)
        u = band_limited(grid, rng, 2, 4, 0.5)
        v = band_limited(grid, rng, 1, 4, 0.5, real=True)
        a = rhs_sys1(StateSys1(grid, u), J)
        b = rhs_sys1_quaternion(StateSys1(grid, u), J)
        q1 = max(q1, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
        (av, au), (bv, bu) = rhs_sys2(StateSys2(grid, v, u), J), rhs_sys2_quaternion(StateSys2(grid, v, u), J)
        q2 = max(q2, float(max(np.max(np.abs(av - bv)), np.max(np.abs(au - bu)))
                          / max(np.max(np.abs(av)), np.max(np.abs(au)))))
    out += [_check("quaternion form of system 1", n_states, q1, 1e-10),
            _check("quaternion form of system 2", n_states, q2, 1e-10)]
    kil = max(abs(cartan_killing(cartan_element("so(4)", c), cartan_element("so(4)", c)) + 2 * c * c)
              + abs(cartan_killing(cartan_element("su(4)", c), cartan_element("su(4)", c)) + 4 * c * c)
              for c in rng.uniform(0.2, 3.0, size=20))
    out.append(_check("Killing norm of Cartan elements", 20, kil, 1e-12))
    return out


def operators_suite(seed=0, n_triples=100, n_form=1):
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid(64)
    worst = {"sys1 Hop": 0.0, "sys1 Jop": 0.0, "sys2 Hop": 0.0, "sys2 Jop": 0.0,
             "nls Hop": 0.0, "nls Jop": 0.0}
    for _ in range(n_triples):
        u = band_limited(grid, rng, 2, 4, 0.5)
        v = band_limited(grid, rng, 1, 4, 0.5, real=True)
        f, g = band_limited(grid, rng, 2, 4, 1.0), band_limited(grid, rng, 2, 4, 1.0)
        fv, gv = band_limited(grid, rng, 1, 4, 1.0, real=True), band_limited(grid, rng, 1, 4, 1.0, real=True)
        worst["sys1 Hop"] = max(worst["sys1 Hop"], skew_residual(grid, lambda h: hop_sys1(grid, h, u), f, g))
        worst["sys1 Jop"] = max(worst["sys1 Jop"], skew_residual(grid, lambda h: jop_sys1(grid, h, u), f, g))
        worst["sys2 Hop"] = max(worst["sys2 Hop"],
                                skew_residual(grid, lambda h: hop_sys2(grid, h, (v, u)), (fv, f), (gv, g)))
        worst["sys2 Jop"] = max(worst["sys2 Jop"],
                                skew_residual(grid, lambda h: jop_sys2(grid, h, (v, u)), (fv, f), (gv, g)))
        worst["nls Hop"] = max(worst["nls Hop"], skew_residual(grid, lambda h: hop_nls(grid, h, u[:, 0]), f[:, 0], g[:, 0]))
        worst["nls Jop"] = max(worst["nls Jop"], skew_residual(grid, lambda h: jop_nls(grid, h, u[:, 0]), f[:, 0], g[:, 0]))
    out = [_check(f"{k} skew-adjoint", n_triples, r, 1e-10) for k, r in worst.items()]
    fgrid = PeriodicGrid(64)
    for _ in range(n_form):
        J = random_generator(rng)
        u = band_limited(fgrid, rng, 2, 3, 0.5)
        v = band_limited(fgrid, rng, 1, 3, 0.5, real=True)
        out.append(_check("system 1 Hamiltonian form", 1, check_hamiltonian_form("sys1", StateSys1(fgrid, u), J), 1e-5))
        out.append(_check("system 2 Hamiltonian form", 1, check_hamiltonian_form("sys2", StateSys2(fgrid, v, u), J), 1e-5))
        out.append(_check("NLS Hamiltonian form", 1, check_hamiltonian_form("nls", StateNLS(fgrid, u[:, 0])), 1e-5))
    return out


def lax_study(system, grid, state, J, chi, dts=(2e-3, 1e-3), t_final=0.02):
    """Residual reports at each dt, the observed order, the membership residual,
    and the fault-injection inflation on the finest run."""
    reports, member = [], 0.0
    lax = None
    for dt in dts:
        tr = evolve(system, state, J, EvolutionConfig(dt, t_final))
        if system == "nls":
            lax = build_lax_nls(grid, [s[0] for s in tr.snapshots], chi)
        elif system == "sys1":
            lax = build_lax_sys1(grid, [s[0] for s in tr.snapshots], J, chi)
        else:
            lax = build_lax_sys2(grid, tr.snapshots, J, chi)
        reports.append(zero_curvature_residual(grid, lax, dt, system, chi))
        member = max(member, max(L.membership() for L in lax))
    order = convergence_order(reports[-2], reports[-1])
    faulty, _ = inject_fault(lax)
    inflation = zero_curvature_residual(grid, faulty, dts[-1]).residual_l2 / reports[-1].residual_l2
    return reports, order, member, inflation


def laxpair_suite(seed=0):
    rng = np.random.default_rng(seed)
    grid = PeriodicGrid(64)
    J = random_generator(rng)
    chi = float(rng.uniform(0.5, 1.5))
    v, u = parity_data(grid, rng)
    out = []
    for system, st in (("nls", StateNLS(grid, u[:, 0])), ("sys1", StateSys1(grid, u)),
                       ("sys2", StateSys2(grid, v, u))):
        _, order, member, _ = lax_study(system, grid, st, J, chi)
        _, _, _, infl = lax_study(system, grid, st, J, chi, dts=(2e-4, 1e-4), t_final=4e-4)
        out.append(_range_check(f"{system} zero-curvature order", 2, order, 1.8, 2.2))
        out.append(_check(f"{system} Lie-algebra membership", 1, member, 1e-12))
        out.append(_check(f"{system} fault-injection inflation", 1, infl, None, lower=1e3))
    return out


def geometry_suite(seed=0, n_curves=20):
    rng = np.random.default_rng(seed)
    out = []
    c = gf.circle(64, 1.5)
    out.append(_check("circle velocity", 64, float(np.max(np.abs(gf.binormal_rhs_r3(c) - [0, 0, 1 / 1.5]))), 1e-8))
    a, b = 1.0, 0.7
    h = gf.helix(64, a, b)
    k, t = gf.helix_constants(a, b)
    fr = gf.frenet_frame(h)
    out.append(_check("helix velocity", 64, float(np.max(np.abs(gf.binormal_rhs_r3(h) - k * fr.B))), 1e-8))
    out.append(_check("helix Hasimoto image", 64,
                      float(np.max(np.abs(gf.hasimoto_map(h) - k * np.exp(1j * t * h.grid.x)))), 1e-8))
    for case, dim in (("su4sp2", 5), ("so6u3", 6)):
        worst = {}
        for _ in range(n_curves):
            S = gf.build_normal_structure(gf.random_tangent_curve(128, dim, rng), case, random_generator(rng))
            for key, val in S.residuals().items():
                worst[key] = max(worst.get(key, 0.0), val)
        out += [_check(f"{case} {key}", n_curves * 128, val, 1e-8) for key, val in worst.items()]
    return out


SUITE_FUNCS = {"algebra": algebra_suite, "operators": operators_suite,
               "laxpair": laxpair_suite, "geometry": geometry_suite}


def run_suite(name: str, seed: int = 0):
    if name == "all":
        return [rec for s in SUITES for rec in SUITE_FUNCS[s](seed)]
    if name not in SUITE_FUNCS:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return SUITE_FUNCS[name](seed)
