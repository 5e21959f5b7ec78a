import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fundsol.errors import AliasingRisk, HalfSphereViolation, UnsupportedDimension
from fundsol.sphere import (
    HarmonicExpansion,
    basis_matrix,
    basis_size,
    build_quadrature,
    expansion_from_function,
    forward_transform,
    funk_hecke_multipliers,
    gunter_derivative,
    homogeneous_extension,
    rotation_map,
    synthesize,
)


@pytest.mark.parametrize("n,L", [(2, 6), (3, 5)])
def test_basis_is_orthonormal(n, L):
    quad = build_quadrature(n, max(8, L + 2))
    B = basis_matrix(n, L, quad.nodes)
    G = B.T @ (B * quad.weights[:, None])
    assert np.allclose(G, np.eye(basis_size(n, L)), atol=1e-12)


def test_quadrature_total_measure():
    assert build_quadrature(2, 8).weights.sum() == pytest.approx(2 * math.pi)
    assert build_quadrature(3, 8).weights.sum() == pytest.approx(4 * math.pi)


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        build_quadrature(4, 8)


def test_constant_expansion():
    e = HarmonicExpansion.constant(3, 2.5)
    assert np.allclose(e(np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])), 2.5)


def test_round_trip_transform():
    f = lambda p: p[:, 0] ** 3 - 2 * p[:, 1] * p[:, 2] + 0.5
    e = expansion_from_function(f, 3, 6)
    pts = np.random.default_rng(0).normal(size=(20, 3))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    assert np.allclose(synthesize(e, pts), f(pts), atol=1e-12)


def test_aliasing_warning():
    quad = build_quadrature(2, 8)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        forward_transform(np.ones(quad.nodes.shape[0]), quad, 10)
    assert any(issubclass(w.category, AliasingRisk) for w in rec)


@pytest.mark.parametrize("n", [2, 3])
def test_gunter_exact_matches_fd(n):
    rng = np.random.default_rng(n)
    e = HarmonicExpansion(n, 4, rng.normal(size=basis_size(n, 4)))
    G = homogeneous_extension(e)
    th = rng.normal(size=n)
    th /= np.linalg.norm(th)
    for j in range(n):
        assert gunter_derivative(e, th, j) == pytest.approx(gunter_derivative(None, th, j, extension=G), abs=1e-8)


def test_gunter_tangential():
    rng = np.random.default_rng(3)
    e = HarmonicExpansion(3, 3, rng.normal(size=16))
    th = np.array([0.48, 0.6, 0.64])
    th /= np.linalg.norm(th)
    d = [gunter_derivative(e, th, j) for j in range(3)]
    assert abs(np.dot(d, th)) < 1e-12


def test_rotation_map_properties():
    eta = np.array([0.0, 0.0, 1.0])
    th = np.array([0.3, -0.4, 0.866])
    th /= np.linalg.norm(th)
    T = rotation_map(eta, th)
    assert np.allclose(T.T @ T, np.eye(3), atol=1e-12)
    assert np.allclose(T.T @ th, eta, atol=1e-12)
    with pytest.raises(HalfSphereViolation):
        rotation_map(eta, -th)


def test_funk_hecke_against_quadrature():
    """Multipliers reproduce int psi(theta.xi) Y(xi) for a smooth psi."""
    psi = lambda u: np.exp(u) * u ** 2
    for n in (2, 3):
        L = 5
        lam = funk_hecke_multipliers(n, L, psi)
        quad = build_quadrature(n, 40)
        B = basis_matrix(n, L, quad.nodes)
        th = np.zeros(n)
        th[-1] = 1.0
        direct = (psi(quad.nodes @ th) * quad.weights) @ B
        pred = lam[np.concatenate([[0], np.repeat(np.arange(1, L + 1), 2)])] if n == 2 else \
            lam[np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])]
        assert np.allclose(direct, pred * basis_matrix(n, L, th[None, :])[0], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
def test_parity_masses_split(c):
    e = HarmonicExpansion(2, 4, np.array(c))
    even, odd = e.parity_masses()
    assert even ** 2 + odd ** 2 == pytest.approx(e.norm() ** 2, rel=1e-12, abs=1e-12)
    pts = np.array([[0.6, 0.8], [-0.28, 0.96]])
    # even part is symmetric under x -> -x
    ev = HarmonicExpansion(2, 4, np.where(np.array([0, 1, 1, 0, 0, 1, 1, 0, 0]) == 0, c, 0.0))
    assert np.allclose(ev(pts), ev(-pts))
