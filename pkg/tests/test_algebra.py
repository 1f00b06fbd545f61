import numpy as np
import pytest

import oracles
from spinorlab.algebra import (Quaternion, SmallMatrix, cartan_element, cartan_killing,
                               check_spinor_quaternion_dictionary, generator_to_quaternion, is_member,
                               make_generator, membership_residual, pair_to_su2, proj_so, proj_su, qconj,
                               qmul, rewrite_identity_residuals, spinor_to_quaternion, su2_to_pair,
                               trace_free)
from spinorlab.errors import TagMismatchError


def _pair_to_vec(p):
    return np.array([p[0].real, p[0].imag, p[1].real, p[1].imag])


@pytest.mark.parametrize("theta,psi", [(0.0, 0.0), (np.pi / 2, 0.0), (0.7, 1.3), (3.0, 5.9)])
def test_generator_matches_closed_form(theta, psi):
    J = make_generator(theta, psi)
    M = oracles.generator(theta, psi)
    np.testing.assert_allclose(J.matrix, M, atol=1e-15)
    np.testing.assert_allclose(M @ M, -np.eye(2), atol=1e-14)


def test_generator_angles_are_wrapped():
    J = make_generator(2 * np.pi + 0.3, -0.2)
    assert 0 <= J.theta < 2 * np.pi and 0 <= J.psi < 2 * np.pi
    np.testing.assert_allclose(J.matrix, oracles.generator(0.3, -0.2), atol=1e-14)


def test_identity_generator_is_diag_i():
    np.testing.assert_allclose(make_generator(0, 0).matrix, np.diag([1j, -1j]))


def test_pair_product_matches_hamilton(rng):
    for _ in range(200):
        p = rng.normal(size=2) + 1j * rng.normal(size=2)
        q = rng.normal(size=2) + 1j * rng.normal(size=2)
        got = _pair_to_vec(qmul(p, q))
        want = oracles.hamilton(_pair_to_vec(p), _pair_to_vec(q))
        np.testing.assert_allclose(got, want, atol=1e-13)


def test_quaternion_object_agrees_with_pairs(rng):
    p = rng.normal(size=2) + 1j * rng.normal(size=2)
    q = rng.normal(size=2) + 1j * rng.normal(size=2)
    P, Q = Quaternion.from_pair(*p), Quaternion.from_pair(*q)
    np.testing.assert_allclose((P * Q).to_pair(), qmul(p, q), atol=1e-14)
    np.testing.assert_allclose(P.conj().to_pair(), qconj(p))
    assert np.isclose((P * P.conj()).w, P.norm() ** 2)
    assert np.isclose((P * Q).norm(), P.norm() * Q.norm())


def test_basis_units():
    i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
    assert i * j == k and j * k == i and k * i == j
    assert (i * i).w == -1 and (j * i) == Quaternion(0, 0, 0, -1)


def test_generator_image_is_unit_imaginary():
    rng = np.random.default_rng(3)
    for _ in range(50):
        q = generator_to_quaternion(make_generator(*rng.uniform(0, 6.3, 2)))
        assert q.w == 0.0
        assert np.isclose(q.norm(), 1.0)
        assert np.isclose((q * q).w, -1.0)


def test_right_multiplication_dictionary(rng):
    for _ in range(100):
        J = make_generator(*rng.uniform(0, 6.3, 2))
        u = rng.normal(size=2) + 1j * rng.normal(size=2)
        q = _pair_to_vec(J.quaternion.to_pair())
        want = oracles.hamilton(_pair_to_vec(u), q)
        np.testing.assert_allclose(_pair_to_vec(u @ J.matrix), want, atol=1e-13)
        assert check_spinor_quaternion_dictionary(u[None], J) < 1e-13
        assert spinor_to_quaternion(u) == Quaternion.from_pair(*u)


def test_su2_pair_roundtrip(rng):
    p = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    np.testing.assert_allclose(su2_to_pair(pair_to_su2(p)), p)


def test_rewrite_identities_hold_vectorised(rng):
    u = rng.normal(size=(500, 2)) + 1j * rng.normal(size=(500, 2))
    r1, r2 = rewrite_identity_residuals(u, make_generator(1.1, 2.2))
    assert r1 < 1e-12 and r2 < 1e-12


def test_rewrite_identity_detects_wrong_generator(rng):
    u = rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2))
    bad = np.array([[1j, 0.3], [0.3, -1j]])      # not anti-Hermitian
    assert max(rewrite_identity_residuals(u, bad)) > 1e-3


def test_projections(rng):
    M = rng.normal(size=(4, 3, 3)) + 1j * rng.normal(size=(4, 3, 3))
    assert membership_residual(proj_su(M), "su(4)") < 1e-14
    P = proj_so(M.real)
    assert membership_residual(P, "so(4)") < 1e-15
    assert np.max(np.abs(np.trace(trace_free(M), axis1=1, axis2=2))) < 1e-14


def test_membership_predicates():
    assert is_member(np.array([[0, 1.0], [-1.0, 0]]), "so(4)")
    assert not is_member(np.array([[0, 1j], [-1j, 0]]), "so(4)")
    assert is_member(np.array([[0, 1j], [1j, 0]]), "su(2)")
    assert is_member(np.array([[1, 2], [2, 3.0]]), "s(2,C)")
    with pytest.raises(ValueError):
        membership_residual(np.eye(2), "sl(7)")


@pytest.mark.parametrize("chi", [0.3, 1.0, 2.5])
def test_killing_norm_so4(chi):
    e = cartan_element("so(4)", chi)
    assert e.check()
    assert cartan_killing(e, e) == pytest.approx(-2 * chi ** 2, abs=1e-12)


@pytest.mark.parametrize("chi", [0.3, 1.0, 2.5])
def test_killing_norm_su4(chi):
    e = cartan_element("su(4)", chi)
    assert e.check()
    assert cartan_killing(e, e) == pytest.approx(-4 * chi ** 2, abs=1e-12)


def test_killing_rejects_mixed_tags():
    with pytest.raises(TagMismatchError):
        cartan_killing(cartan_element("so(4)", 1.0), cartan_element("su(4)", 1.0))
    with pytest.raises(ValueError):
        SmallMatrix(np.eye(2), "gl(2)")


def test_quarter_turn_generator():
    np.testing.assert_allclose(make_generator(np.pi / 2, 0).matrix, [[0, 1], [-1, 0]], atol=1e-15)


def test_diag_generator_maps_to_i():
    q = make_generator(0, 0).quaternion
    assert q == Quaternion(0.0, 1.0, 0.0, 0.0)
    assert check_spinor_quaternion_dictionary(np.array([[1.0, 0.0]]), make_generator(0, 0)) == 0.0
    assert check_spinor_quaternion_dictionary(np.zeros((1, 2)), make_generator(1.0, 2.0)) == 0.0


def test_rewrite_identities_trivial_inputs():
    assert rewrite_identity_residuals(np.zeros((1, 2)), make_generator(0.3, 0.4)) == (0.0, 0.0)
    assert max(rewrite_identity_residuals(np.array([[1.0, 0.0]]), make_generator(0, 0))) == 0.0


def test_trace_free_examples(rng):
    np.testing.assert_allclose(trace_free(np.diag([2 + 1j, 0])), np.diag([1 + 0.5j, -1 - 0.5j]))
    M = rng.normal(size=(3, 3))
    M0 = trace_free(M)
    np.testing.assert_allclose(trace_free(M0), M0, atol=1e-15)


def test_projection_kernels_and_idempotence(rng):
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = trace_free(H + H.conj().T)
    assert np.max(np.abs(proj_su(H))) < 1e-15
    S = rng.normal(size=(4, 4))
    assert np.max(np.abs(proj_so(S + S.T))) == 0.0
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    np.testing.assert_allclose(proj_su(proj_su(M)), proj_su(M), atol=1e-14)


def test_killing_symmetry(rng):
    X = rng.normal(size=(4, 4))
    Y = rng.normal(size=(4, 4))
    a, b = SmallMatrix(X - X.T, "so(4)"), SmallMatrix(Y - Y.T, "so(4)")
    assert cartan_killing(a, b) == pytest.approx(cartan_killing(b, a), abs=1e-13)
