import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import solve_sylvester

from mjconsensus.matops import (
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    SharedEigenvalues,
    is_positive_definite,
    spd_inverse,
    sylvester_residual,
    sylvester_solve,
    young_bound_holds,
)


def test_positive_definite_examples(rng):
    assert is_positive_definite(np.eye(3))
    assert not is_positive_definite([[1, 2], [2, 1]])
    g = rng.standard_normal((5, 5))
    assert is_positive_definite(g.T @ g + 1e-6 * np.eye(5))
    with pytest.raises(NotSymmetric):
        is_positive_definite([[1, 2], [0, 1]])


def test_spd_inverse(rng):
    g = rng.standard_normal((6, 6))
    m = g @ g.T + np.eye(6)
    np.testing.assert_allclose(spd_inverse(m) @ m, np.eye(6), atol=1e-10)
    with pytest.raises(NotPositiveDefinite):
        spd_inverse(-np.eye(2))


def test_young_examples():
    p = np.array([1.0, -2.0, 0.5])
    assert young_bound_holds(p, p, np.eye(3))
    assert young_bound_holds(p, np.zeros(3), np.diag([1, 2, 3.0]))
    with pytest.raises(NotPositiveDefinite):
        young_bound_holds(p, p, -np.eye(3))
    with pytest.raises(DimensionMismatch):
        young_bound_holds(p, p[:2], np.eye(3))


vec = arrays(np.float64, 4, elements=st.floats(-1e3, 1e3, allow_nan=False))


@settings(max_examples=300, deadline=None)
@given(p=vec, q=vec, g=arrays(np.float64, (4, 4), elements=st.floats(-10, 10, allow_nan=False)),
       shift=st.floats(1e-3, 10))
def test_young_property(p, q, g, shift):
    phi = g @ g.T + shift * np.eye(4)
    assert young_bound_holds(p, q, phi)


def test_sylvester_scalars():
    t = sylvester_solve([[2.0]], [[-1.0]], [[3.0]])
    assert t[0, 0] == pytest.approx(1.0)
    np.testing.assert_array_equal(sylvester_solve(np.diag([1.0, 2.0]), [[-1.0]], np.zeros((1, 2))), 0)


def test_sylvester_shared_eigenvalue():
    with pytest.raises(SharedEigenvalues):
        sylvester_solve(np.diag([1.0, 2.0]), np.array([[2.0]]), np.ones((1, 2)))


def test_sylvester_random_instances(rng):
    for trial in range(50):
        n = int(rng.integers(1, 13))
        k = int(rng.integers(1, 13))
        # spectra separated: A shifted right, F shifted left
        a = rng.standard_normal((n, n)) / np.sqrt(n) + 3 * np.eye(n)
        f = rng.standard_normal((k, k)) / np.sqrt(k) - 3 * np.eye(k)
        rhs = rng.standard_normal((k, n))
        t = sylvester_solve(a, f, rhs)
        assert sylvester_residual(t, a, f, rhs) <= 1e-8
        # scipy solves A X + X B = Q; T A - F T = rhs is (-F) T + T A = rhs
        np.testing.assert_allclose(t, solve_sylvester(-f, a, rhs), rtol=1e-8, atol=1e-10)


def test_sylvester_benchmark(heli, heli_reduced):
    p = heli["plant"]
    pr = heli_reduced
    t = sylvester_solve(p.a, pr.f_bar, pr.g_gain @ p.c1)
    assert sylvester_residual(t, p.a, pr.f_bar, pr.g_gain @ p.c1) <= 1e-8
