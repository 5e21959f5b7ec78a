"""Radial-power calculus: sums of |x|^m (log|x|)^{0,1} g(x/|x|) with g in a harmonic basis.

The Laplacian acts diagonally on r^m Y_l; first derivatives mix degrees
l -> l +- 1 and are realized as exact matrices between harmonic spaces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .sphere import (
    HarmonicExpansion,
    basis_matrix,
    basis_size,
    build_quadrature,
    index_degrees,
    tangential_gradient_matrix,
)


def _key(m):
    m = float(m)
    return int(m) if m.is_integer() else m


@dataclass(frozen=True)
class RadialTerm:
    m: float
    log: bool
    angular: HarmonicExpansion


@dataclass(frozen=True)
class RadialTermSum:
    n: int
    terms: dict = field(default_factory=dict)    # (m, log) -> HarmonicExpansion

    @classmethod
    def of(cls, n, items):
        out = {}
        for t in items:
            k = (_key(t.m), bool(t.log))
            out[k] = out[k] + t.angular if k in out else t.angular
        return cls(n, out)

    def __iter__(self):
        for (m, lg) in sorted(self.terms):
            yield RadialTerm(m, lg, self.terms[(m, lg)])

    def __len__(self):
        return len(self.terms)

    def get(self, m, log=False):
        return self.terms.get((_key(m), bool(log)))

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        th = x / r[:, None]
        out = np.zeros(x.shape[0])
        for t in self:
            g = t.angular(th)
            out += r ** t.m * (np.log(r) * g if t.log else g)
        return out


def laplace_eigenvalue(n, m, l):
    """Delta(r^m Y_l) = laplace_eigenvalue * r^(m-2) Y_l."""
    return m * (m + n - 2.0) - l * (l + n - 2.0)


def radial_laplacian_step(term, n=None):
    """Apply Delta once to a single term; returns a RadialTermSum."""
    e = term.angular
    n = n or e.n
    deg = index_degrees(e.n, e.L)
    lam = laplace_eigenvalue(n, term.m, deg)
    items = [RadialTerm(term.m - 2, term.log, HarmonicExpansion(e.n, e.L, lam * e.coeffs))]
    if term.log:
        items.append(RadialTerm(term.m - 2, False, e.scaled(2.0 * term.m + n - 2.0)))
    return RadialTermSum.of(e.n, items)


def laplacian(s):
    items = []
    for t in s:
        items.extend(radial_laplacian_step(t, s.n))
    return RadialTermSum.of(s.n, items)


def iterated_laplacian(s, p):
    if p < 1:
        raise ValueError("p must be >= 1")
    if isinstance(s, RadialTerm):
        s = RadialTermSum.of(s.angular.n, [s])
    for _ in range(p):
        s = laplacian(s)
    return s


def iterated_eigen_factor(n, m, deg, p):
    """Coefficient multipliers for Delta^p on r^m Y_l and r^m log r Y_l.

    Returns (plain, cross) so that Delta^p(r^m (P + log r Q)) =
    r^(m-2p) ((plain P + cross Q) + log r plain Q), degree by degree.
    """
    deg = np.asarray(deg, dtype=float)
    plain = np.ones_like(deg)
    cross = np.zeros_like(deg)
    mm = float(m)
    for _ in range(p):
        lam = laplace_eigenvalue(n, mm, deg)
        cross = lam * cross + (2.0 * mm + n - 2.0) * plain
        plain = lam * plain
        mm -= 2.0
    return plain, cross


@lru_cache(maxsize=32)
def derivative_matrices(n, L):
    """Exact maps from degree-L coefficients to degree-(L+1) coefficients.

    theta[h] represents multiplication by theta_h, grad[h] the Gunter
    derivative D_h.  Both have shape (n, B(L+1), B(L)).
    """
    quad = build_quadrature(n, max(8, L + 3))
    nodes, w = quad.nodes, quad.weights
    B0 = basis_matrix(n, L, nodes)
    B1 = basis_matrix(n, L + 1, nodes) * w[:, None]
    G = tangential_gradient_matrix(n, L, nodes)
    theta = np.stack([B1.T @ (nodes[:, h:h + 1] * B0) for h in range(n)])
    grad = np.stack([B1.T @ G[:, :, h] for h in range(n)])
    # both maps only couple degrees l and l +- 1; everything else is quadrature roundoff
    near = np.abs(index_degrees(n, L + 1)[:, None] - index_degrees(n, L)[None, :]) == 1
    theta = np.where(near & (np.abs(theta) >= 1e-15), theta, 0.0)
    grad = np.where(near & (np.abs(grad) >= 1e-13), grad, 0.0)
    theta.setflags(write=False)
    grad.setflags(write=False)
    return theta, grad


def radial_derivative(s, h):
    """d/dx_h of a RadialTermSum (0-based axis)."""
    items = []
    for t in s:
        e = t.angular
        theta, grad = derivative_matrices(e.n, e.L)
        d = grad[h] @ e.coeffs + t.m * (theta[h] @ e.coeffs)
        items.append(RadialTerm(t.m - 1, t.log, HarmonicExpansion(e.n, e.L + 1, d)))
        if t.log:
            items.append(RadialTerm(t.m - 1, False, HarmonicExpansion(e.n, e.L + 1, theta[h] @ e.coeffs)))
    return RadialTermSum.of(s.n, items)


def series_derivative(n, L, m0, P, Q, h):
    """Differentiate sum_j r^(m0+j) (P_j + log r Q_j) . Y along axis h.

    P, Q are (J+1, B(L)) coefficient matrices; returns (L+1, m0-1, P', Q').
    """
    theta, grad = derivative_matrices(n, L)
    m = m0 + np.arange(P.shape[0], dtype=float)
    tP = P @ theta[h].T
    tQ = Q @ theta[h].T
    P1 = P @ grad[h].T + m[:, None] * tP + tQ
    Q1 = Q @ grad[h].T + m[:, None] * tQ
    return L + 1, m0 - 1, P1, Q1


def gunter_laplacian_check(e, m):
    """Delta(r^m g) angular part via sum_h D_h D_h g + m(m+n-2) g, on the degree-(L+2) space.

    Independent of the eigenvalue identity; used as a cross-check.
    """
    n = e.n
    _, g1 = derivative_matrices(n, e.L)
    _, g2 = derivative_matrices(n, e.L + 1)
    out = sum(g2[h] @ (g1[h] @ e.coeffs) for h in range(n))
    base = e.resized(e.L + 2).coeffs
    return HarmonicExpansion(n, e.L + 2, out + m * (m + n - 2.0) * base)


def pad_rows(P, n, L):
    out = np.zeros((P.shape[0], basis_size(n, L)))
    out[:, : P.shape[1]] = P
    return out
