import numpy as np
import pytest

from spinorlab.errors import NonzeroMeanError
from spinorlab.grid import Field, MeanPolicy, PeriodicGrid


@pytest.mark.parametrize("n", [0, 7, 12, 100])
def test_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        PeriodicGrid(n)


def test_rejects_bad_length():
    with pytest.raises(ValueError):
        PeriodicGrid(16, 0.0)


def test_derivative_of_trig_polynomial():
    g = PeriodicGrid(32, 4.0)
    w = 2 * np.pi / 4.0
    f = np.sin(3 * w * g.x) + 0.5j * np.cos(w * g.x)
    np.testing.assert_allclose(g.dx(f), 3 * w * np.cos(3 * w * g.x) - 0.5j * w * np.sin(w * g.x), atol=1e-12)
    np.testing.assert_allclose(g.dx(f, 2), -(3 * w) ** 2 * np.sin(3 * w * g.x) - 0.5j * w * w * np.cos(w * g.x),
                               atol=1e-11)


def test_derivative_keeps_real_fields_real():
    g = PeriodicGrid(16)
    assert np.isrealobj(g.dx(np.cos(g.x)))


def test_derivative_acts_on_axis_zero():
    g = PeriodicGrid(16)
    f = np.stack([np.sin(g.x), np.cos(2 * g.x)], axis=1)
    d = g.dx(f)
    np.testing.assert_allclose(d[:, 1], -2 * np.sin(2 * g.x), atol=1e-12)


def test_antiderivative_zero_mean():
    g = PeriodicGrid(64)
    F = g.dx_inv(np.cos(2 * g.x))
    np.testing.assert_allclose(F, 0.5 * np.sin(2 * g.x), atol=1e-13)
    np.testing.assert_allclose(g.dx(g.dx_inv(np.exp(np.sin(g.x)))),
                               np.exp(np.sin(g.x)) - np.mean(np.exp(np.sin(g.x))), atol=1e-12)


def test_strict_policy_raises_and_project_logs():
    g = PeriodicGrid(32)
    f = 1.0 + np.cos(g.x)
    with pytest.raises(NonzeroMeanError):
        g.dx_inv(f, policy=MeanPolicy.STRICT)
    log = []
    F = g.dx_inv(f, policy="project", mean_log=log)
    assert log == [pytest.approx(1.0)]
    np.testing.assert_allclose(F, np.sin(g.x), atol=1e-13)
    g.dx_inv(np.cos(g.x), policy="strict")


def test_quadrature_is_spectral():
    g = PeriodicGrid(32)
    assert g.integrate(np.exp(np.cos(g.x))) == pytest.approx(2 * np.pi * 1.2660658777520082, rel=1e-14)
    assert g.inner(np.exp(1j * g.x), 2j * np.exp(1j * g.x)) == pytest.approx(0.0, abs=1e-13)


def test_parseval():
    rng = np.random.default_rng(0)
    g = PeriodicGrid(64, 3.0)
    f = rng.normal(size=64) + 1j * rng.normal(size=64)
    assert g.fourier_energy(f) == pytest.approx(g.integrate(np.abs(f) ** 2), rel=1e-12)


def test_dealias_and_tail():
    g = PeriodicGrid(64)
    low = np.cos(3 * g.x)
    high = np.cos(30 * g.x)
    np.testing.assert_allclose(g.dealias(low + high), low, atol=1e-13)
    assert g.tail_ratio(low) < 1e-14
    assert g.tail_ratio(low + 1e-2 * high) == pytest.approx(1e-2)


def test_field_binary_roundtrip(tmp_path):
    g = PeriodicGrid(16, 5.0)
    vals = np.arange(32).reshape(16, 2) * (1 + 0.5j)
    Field(g, vals).save_binary(tmp_path / "f.bin")
    back = Field.load_binary(tmp_path / "f.bin")
    assert back.grid == g
    np.testing.assert_array_equal(back.values, vals)
    assert Field.from_bytes(Field(g, vals[:, 0]).to_bytes()).values.shape == (16,)


def test_field_binary_rejects_garbage():
    with pytest.raises(ValueError):
        Field.from_bytes(b"XXXX" + bytes(40))


def test_field_csv_roundtrip(tmp_path):
    g = PeriodicGrid(8, 2.0)
    vals = np.exp(1j * np.arange(8.0))
    Field(g, vals).save_csv(tmp_path / "f.csv")
    back = Field.load_csv(tmp_path / "f.csv")
    assert back.grid.length == pytest.approx(2.0)
    np.testing.assert_array_equal(back.values, vals)


def test_field_size_mismatch():
    with pytest.raises(ValueError):
        Field(PeriodicGrid(8), np.zeros(9))


def test_derivative_examples():
    L = 3.0
    g = PeriodicGrid(64, L)
    w = 2 * np.pi / L
    assert np.max(np.abs(g.dx(np.sin(w * g.x)) - w * np.cos(w * g.x))) < 1e-12
    assert np.max(np.abs(g.dx(np.full(64, 2.5)))) == 0.0
    f = np.exp(3j * w * g.x)
    np.testing.assert_allclose(g.dx(f), 3j * w * f, atol=1e-11)


def test_antiderivative_examples():
    L = 3.0
    g = PeriodicGrid(64, L)
    w = 2 * np.pi / L
    np.testing.assert_allclose(g.dx_inv(np.cos(w * g.x)), np.sin(w * g.x) / w, atol=1e-14)
    assert not np.any(g.dx_inv(np.zeros(64)))
    with pytest.raises(NonzeroMeanError) as exc:
        g.dx_inv(np.full(64, 0.7), policy="strict")
    assert exc.value.mean == pytest.approx(0.7)


def test_integrate_examples():
    L = 3.0
    g = PeriodicGrid(64, L)
    assert g.integrate(np.ones(64)) == pytest.approx(L)
    assert abs(g.integrate(np.sin(2 * np.pi * g.x / L))) < 1e-13
    a = 0.4 - 0.3j
    assert g.integrate(np.abs(a * np.exp(2j * np.pi * 5 * g.x / L)) ** 2) == pytest.approx(abs(a) ** 2 * L)


def test_dealias_never_adds_energy():
    rng = np.random.default_rng(8)
    g = PeriodicGrid(64)
    for _ in range(20):
        f = rng.normal(size=64) + 1j * rng.normal(size=64)
        assert np.linalg.norm(g.dealias(f)) <= np.linalg.norm(f) + 1e-12
