import numpy as np
import pytest

from spinorlab.grid import PeriodicGrid
from spinorlab.verify import SUITES, parity_data, run_suite


def test_parity_data_symmetry():
    g = PeriodicGrid(64)
    v, u = parity_data(g, np.random.default_rng(0))
    rev = (-np.arange(64)) % 64
    np.testing.assert_allclose(u[rev], u, atol=1e-15)
    np.testing.assert_allclose(v[rev], -v, atol=1e-15)


@pytest.mark.parametrize("suite", SUITES)
def test_suites_pass(suite):
    checks = run_suite(suite, seed=5)
    failed = [c for c in checks if not c["passed"]]
    assert checks and not failed, failed


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("everything")
