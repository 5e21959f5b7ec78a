import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fundsol.operator import apply_operator_fd, laplacian
from fundsol.radial import (
    RadialTerm,
    RadialTermSum,
    gunter_laplacian_check,
    iterated_eigen_factor,
    iterated_laplacian,
    laplace_eigenvalue,
    radial_derivative,
    radial_laplacian_step,
    series_derivative,
)
from fundsol.sphere import HarmonicExpansion, basis_size


def _random_term(n, L, m, log, seed):
    rng = np.random.default_rng(seed)
    return RadialTerm(m, log, HarmonicExpansion(n, L, rng.normal(size=basis_size(n, L))))


def test_eigenvalue_formula():
    assert laplace_eigenvalue(3, -1, 0) == 0.0
    assert laplace_eigenvalue(2, 2, 2) == 0.0
    assert laplace_eigenvalue(3, 2, 0) == 6.0


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("log", [False, True])
def test_laplacian_step_vs_fd(n, log):
    t = _random_term(n, 3, 1.5, log, 1)
    s = RadialTermSum.of(n, [t])
    out = radial_laplacian_step(t)
    x = np.array([0.4, -0.7, 0.5][:n])
    fd = apply_operator_fd(laplacian(n), lambda p: s(p), x)
    assert float(out(x[None, :])[0]) == pytest.approx(fd, rel=1e-8)


@pytest.mark.parametrize("n", [2, 3])
def test_iterated_factor_matches_repeated_steps(n):
    t = _random_term(n, 4, 3.0, True, 2)
    s = iterated_laplacian(t, 2)
    plain, cross = iterated_eigen_factor(n, 3.0, np.concatenate([[0], np.repeat(np.arange(1, 5), 2)]) if n == 2
                                         else np.concatenate([np.full(2 * l + 1, l) for l in range(5)]), 2)
    c = t.angular.coeffs
    assert np.allclose(s.get(-1.0, True).coeffs, plain * c)
    assert np.allclose(s.get(-1.0, False).coeffs, cross * c)


@pytest.mark.parametrize("n", [2, 3])
def test_derivative_vs_fd(n):
    t = _random_term(n, 3, 2.0, True, 3)
    s = RadialTermSum.of(n, [t])
    x = np.array([0.5, 0.3, -0.6][:n])
    for h in range(n):
        d = radial_derivative(s, h)
        e = np.zeros(n)
        e[h] = 1e-4
        fd = (s(x + e) - s(x - e))[0] / 2e-4
        assert float(d(x[None, :])[0]) == pytest.approx(fd, rel=1e-6)


def test_series_derivative_matches_termwise():
    n, L = 2, 3
    rng = np.random.default_rng(4)
    P = rng.normal(size=(3, basis_size(n, L)))
    Q = rng.normal(size=(3, basis_size(n, L)))
    L1, m1, P1, Q1 = series_derivative(n, L, 0.0, P, Q, 1)
    s = RadialTermSum.of(n, [RadialTerm(j, False, HarmonicExpansion(n, L, P[j])) for j in range(3)]
                         + [RadialTerm(j, True, HarmonicExpansion(n, L, Q[j])) for j in range(3)])
    d = radial_derivative(s, 1)
    x = np.array([[0.3, 0.8]])
    r = np.linalg.norm(x)
    from fundsol.sphere import basis_matrix
    Y = basis_matrix(n, L1, x / r)[0]
    val = sum(r ** (m1 + j) * (P1[j] @ Y + np.log(r) * Q1[j] @ Y) for j in range(3))
    assert val == pytest.approx(float(d(x)[0]), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 100), st.floats(-2.0, 3.0))
def test_gunter_cross_check(seed, m):
    """sum_h D_h D_h g + m(m+n-2) g equals the eigenvalue route (projected to degree L)."""
    for n in (2, 3):
        t = _random_term(n, 3, m, False, seed)
        via_gunter = gunter_laplacian_check(t.angular, m)
        via_eigen = radial_laplacian_step(t).get(m - 2, False)
        assert np.allclose(via_gunter.coeffs[: via_eigen.coeffs.size], via_eigen.coeffs, atol=1e-10)
        assert np.allclose(via_gunter.coeffs[via_eigen.coeffs.size:], 0.0, atol=1e-10)
