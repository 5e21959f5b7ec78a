"""Calculus on the unit sphere of R^n, n in {2, 3}.

Quadrature rules, an orthonormal real harmonic basis (Fourier modes on the
circle, real spherical harmonics on S^2), transforms, tangential (Gunter)
derivatives, Funk-Hecke multipliers for zonal kernels, and the rotation
T_eta(theta) that carries eta to theta.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AliasingRisk, HalfSphereViolation, UnsupportedDimension

SURFACE_AREA = {2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _check_dim(n):
    if n not in (2, 3):
        raise UnsupportedDimension(f"numeric sphere paths support n in {{2,3}}, got {n}", field="n")


@dataclass(frozen=True)
class SphereQuadrature:
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def integrate(self, values):
        return np.tensordot(np.asarray(values)[..., :], self.weights, axes=([-1], [0]))


@lru_cache(maxsize=64)
def build_quadrature(n, order):
    """Antipodally symmetric rule exact for spherical polynomials of degree < 2*order."""
    _check_dim(n)
    if order < 8:
        raise ValueError("quadrature order must be >= 8")
    m = 2 * order
    phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    if n == 2:
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(m, 2.0 * np.pi / m)
    else:
        u, wu = np.polynomial.legendre.leggauss(order)
        uu, pp = np.meshgrid(u, phi, indexing="ij")
        s = np.sqrt(1.0 - uu ** 2)
        nodes = np.stack([s * np.cos(pp), s * np.sin(pp), uu], axis=-1).reshape(-1, 3)
        weights = np.outer(wu, np.full(m, 2.0 * np.pi / m)).reshape(-1)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereQuadrature(n, nodes, weights, order)


# -- harmonic basis ------------------------------------------------------------

def basis_size(n, L):
    return 2 * L + 1 if n == 2 else (L + 1) ** 2


@lru_cache(maxsize=32)
def index_degrees(n, L):
    if n == 2:
        deg = np.concatenate([[0], np.repeat(np.arange(1, L + 1), 2)])
    else:
        deg = np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])
    deg.setflags(write=False)
    return deg


def _angles3(pts):
    pts = np.asarray(pts, dtype=float)
    u = np.clip(pts[..., 2], -1.0, 1.0)
    phi = np.arctan2(pts[..., 1], pts[..., 0])
    return u, phi


def _legendre_normalized(L, u):
    """Normalized associated Legendre pbar[l, m] (no Condon-Shortley phase), shape (L+1, L+1, M)."""
    u = np.asarray(u, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    p = np.zeros((L + 1, L + 1) + u.shape)
    p[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, L + 1):
        p[m, m] = math.sqrt((2 * m + 1) / (2.0 * m)) * s * p[m - 1, m - 1]
    for m in range(0, L):
        p[m + 1, m] = math.sqrt(2 * m + 3) * u * p[m, m]
    for m in range(0, L + 1):
        for l in range(m + 2, L + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            p[l, m] = a * (u * p[l - 1, m] - b * p[l - 2, m])
    return p


def basis_matrix(n, L, pts):
    """Orthonormal real basis evaluated at unit vectors pts (M, n) -> (M, B)."""
    _check_dim(n)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if n == 2:
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.empty((pts.shape[0], 2 * L + 1))
        out[:, 0] = 1.0 / math.sqrt(2.0 * math.pi)
        ls = np.arange(1, L + 1)
        ang = np.outer(phi, ls)
        out[:, 1::2] = np.cos(ang) / math.sqrt(math.pi)
        out[:, 2::2] = np.sin(ang) / math.sqrt(math.pi)
        return out
    u, phi = _angles3(pts)
    p = _legendre_normalized(L, u)
    out = np.empty((pts.shape[0], (L + 1) ** 2))
    r2 = math.sqrt(2.0)
    for l in range(L + 1):
        base = l * l + l
        out[:, base] = p[l, 0]
        for m in range(1, l + 1):
            out[:, base + m] = r2 * p[l, m] * np.cos(m * phi)
            out[:, base - m] = r2 * p[l, m] * np.sin(m * phi)
    return out


def tangential_gradient_matrix(n, L, pts):
    """Tangential gradient of each basis function at pts: shape (M, B, n)."""
    _check_dim(n)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if n == 2:
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        d = np.zeros((pts.shape[0], 2 * L + 1))
        ls = np.arange(1, L + 1)
        ang = np.outer(phi, ls)
        d[:, 1::2] = -ls * np.sin(ang) / math.sqrt(math.pi)
        d[:, 2::2] = ls * np.cos(ang) / math.sqrt(math.pi)
        tangent = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        return d[:, :, None] * tangent[:, None, :]
    u, phi = _angles3(pts)
    s = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    if np.any(s < 1e-12):
        raise ValueError("exact tangential gradient is not evaluated at the poles")
    p = _legendre_normalized(L + 1, u)
    M = pts.shape[0]
    dth = np.zeros((M, (L + 1) ** 2))
    dph_over_s = np.zeros((M, (L + 1) ** 2))
    r2 = math.sqrt(2.0)
    for l in range(L + 1):
        base = l * l + l
        dth[:, base] = -math.sqrt(l * (l + 1.0)) * p[l, 1] if l >= 1 else 0.0
        for m in range(1, l + 1):
            dp = 0.5 * (math.sqrt((l + m) * (l - m + 1.0)) * p[l, m - 1]
                        - math.sqrt((l + m + 1.0) * (l - m)) * p[l, m + 1])
            cm, sm = np.cos(m * phi), np.sin(m * phi)
            dth[:, base + m] = r2 * dp * cm
            dth[:, base - m] = r2 * dp * sm
            dph_over_s[:, base + m] = -r2 * m * p[l, m] / s * sm
            dph_over_s[:, base - m] = r2 * m * p[l, m] / s * cm
    e_th = np.stack([u * np.cos(phi), u * np.sin(phi), -s], axis=-1)
    e_ph = np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    return dth[:, :, None] * e_th[:, None, :] + dph_over_s[:, :, None] * e_ph[:, None, :]


@dataclass(frozen=True)
class HarmonicExpansion:
    n: int
    L: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (basis_size(self.n, self.L),):
            raise ValueError("coefficient vector does not match (n, L)")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, n, L):
        return cls(n, L, np.zeros(basis_size(n, L)))

    @classmethod
    def constant(cls, n, value, L=0):
        c = np.zeros(basis_size(n, L))
        c[0] = value * math.sqrt(SURFACE_AREA[n])
        return cls(n, L, c)

    def __call__(self, pts):
        return synthesize(self, pts)

    def resized(self, L):
        out = np.zeros(basis_size(self.n, L))
        m = min(out.size, self.coeffs.size)
        out[:m] = self.coeffs[:m]
        return HarmonicExpansion(self.n, L, out)

    def __add__(self, other):
        L = max(self.L, other.L)
        return HarmonicExpansion(self.n, L, self.resized(L).coeffs + other.resized(L).coeffs)

    def scaled(self, factor):
        return HarmonicExpansion(self.n, self.L, factor * self.coeffs)

    def degree_mass(self):
        deg = index_degrees(self.n, self.L)
        return np.bincount(deg, weights=self.coeffs ** 2, minlength=self.L + 1)

    def norm(self):
        return float(np.sqrt(np.sum(self.coeffs ** 2)))

    def parity_masses(self):
        """(even-degree L2 mass, odd-degree L2 mass)."""
        mass = self.degree_mass()
        return float(np.sqrt(mass[0::2].sum())), float(np.sqrt(mass[1::2].sum()))

    def is_negligible(self, tol=0.0):
        return bool(np.all(np.abs(self.coeffs) <= tol))

    def trimmed(self, tol=0.0):
        """Drop trailing degrees whose coefficients are all within tol."""
        deg = index_degrees(self.n, self.L)
        live = np.nonzero(np.abs(self.coeffs) > tol)[0]
        L = int(deg[live].max()) if live.size else 0
        return self.resized(L)


def synthesize(e, pts):
    pts = np.asarray(pts, dtype=float)
    flat = pts.reshape(-1, e.n)
    vals = basis_matrix(e.n, e.L, flat) @ e.coeffs
    return vals.reshape(pts.shape[:-1])


def forward_transform(values, quad, L):
    """Discrete inner products of sampled values against the basis up to degree L."""
    if quad.order < 2 * L:
        warnings.warn(f"quadrature order {quad.order} < 2L = {2 * L}", AliasingRisk, stacklevel=2)
    B = basis_matrix(quad.n, L, quad.nodes)
    values = np.asarray(values, dtype=float)
    coeffs = (values * quad.weights) @ B if values.ndim == 1 else (values * quad.weights) @ B
    return HarmonicExpansion(quad.n, L, coeffs) if values.ndim == 1 else coeffs


def transform_quadrature(n, L):
    """Smallest symmetric rule that integrates products of degree-L harmonics exactly."""
    return build_quadrature(n, max(8, L + 2))


def expansion_from_function(func, n, L, order=None):
    quad = build_quadrature(n, max(8, order or 2 * L))
    return forward_transform(func(quad.nodes), quad, L)


def tangential_gradient(e, pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    G = tangential_gradient_matrix(e.n, e.L, pts)
    return np.einsum("mbn,b->mn", G, e.coeffs)


def _fd_gradient(G, x, h=1e-3):
    # 8th-order centered first differences
    w = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    off = np.arange(-4, 5)
    n = x.size
    grad = np.empty(n)
    for i in range(n):
        pts = np.repeat(x[None, :], off.size, axis=0)
        pts[:, i] += off * h
        grad[i] = np.dot(w, np.asarray(G(pts), dtype=float)) / h
    return grad


def gunter_derivative(g, theta, j, extension=None):
    """j-th Gunter derivative (0-based axis) of g at the unit vector theta.

    ``g`` is a HarmonicExpansion (exact tangential gradient) or, with
    ``extension``, any function on the sphere given by an ambient extension
    G: (m, n) -> (m,) differentiated by finite differences.
    """
    theta = np.asarray(theta, dtype=float)
    if extension is None and isinstance(g, HarmonicExpansion):
        return float(tangential_gradient(g, theta[None, :])[0, j])
    G = extension if extension is not None else g
    grad = _fd_gradient(G, theta)
    return float(grad[j] - theta[j] * np.dot(theta, grad))


def homogeneous_extension(e):
    """Extension of an expansion that is degree-l homogeneous in each degree-l block."""
    deg = index_degrees(e.n, e.L)

    def G(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=-1)
        B = basis_matrix(e.n, e.L, x / r[:, None])
        return (B * r[:, None] ** deg[None, :]) @ e.coeffs

    return G


def rotation_map(eta, theta):
    """Orthogonal T_eta(theta) with T^t theta = eta, defined for theta.eta > 0."""
    eta = np.asarray(eta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    c = float(np.dot(theta, eta))
    if c <= 1e-10:
        raise HalfSphereViolation("theta must lie in the open half-sphere theta.eta > 0")
    s = theta + eta
    return np.eye(theta.size) + 2.0 * np.outer(theta, eta) - np.outer(s, s) / (1.0 + c)


def aligned_frame(theta):
    """An axis eta with theta.eta > 0 and T_eta(theta), so that theta.(T xi') = eta.xi'."""
    theta = np.asarray(theta, dtype=float)
    i = int(np.argmax(np.abs(theta)))
    eta = np.zeros(theta.size)
    eta[i] = 1.0 if theta[i] > 0 else -1.0
    return eta, rotation_map(eta, theta)


# -- zonal kernels ---------------------------------------------------------------

@lru_cache(maxsize=8)
def graded_half_rule(nodes=200, grading=3):
    """Nodes/weights on [0, 1] clustered toward 0 by t -> t**grading."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    x = t ** grading
    wx = w * grading * t ** (grading - 1)
    x.setflags(write=False)
    wx.setflags(write=False)
    return x, wx


def legendre_table(L, u):
    """Legendre P_l(u), l = 0..L, with P_l(1) = 1; shape (L+1, M)."""
    u = np.asarray(u, dtype=float)
    P = np.zeros((L + 1,) + u.shape)
    P[0] = 1.0
    if L >= 1:
        P[1] = u
    for l in range(2, L + 1):
        P[l] = ((2 * l - 1) * u * P[l - 1] - (l - 1) * P[l - 2]) / l
    return P


def funk_hecke_multipliers(n, L, psi, nodes=200, grading=3):
    """lambda_l with  int psi(theta.xi) Y_l(xi) dsigma_xi = lambda_l Y_l(theta).

    psi may be singular (log or jump in a derivative) at 0; each half of the
    integration range is graded toward the zero set of theta.xi.
    """
    _check_dim(n)
    t, w = graded_half_rule(nodes, grading)
    ls = np.arange(L + 1)
    if n == 2:
        # phi in [0, pi]; cos(phi) vanishes at pi/2, graded from both sides
        phi = np.concatenate([0.5 * np.pi * (1.0 - t), 0.5 * np.pi * (1.0 + t)])
        wphi = np.concatenate([0.5 * np.pi * w, 0.5 * np.pi * w])
        vals = psi(np.cos(phi)) * wphi
        return 2.0 * np.cos(np.outer(ls, phi)) @ vals
    u = np.concatenate([-t, t])
    wu = np.concatenate([w, w])
    P = legendre_table(L, u)
    return 2.0 * np.pi * (P @ (psi(u) * wu))


def apply_multipliers(e, lam):
    deg = index_degrees(e.n, e.L)
    return HarmonicExpansion(e.n, e.L, e.coeffs * np.asarray(lam)[deg])
