"""Plane-wave solution v(a, x, xi, t) of L[a]v = 1 by contour quadrature.

v depends on x only through s = x.xi - t:

    v = (1/2 pi i) \\oint e^{s zeta} / (zeta P(zeta xi)) d zeta
      = sum_j a_j(xi) s^j / j!,   a_j = (1/2 pi i) \\oint zeta^{j-1} / P(zeta xi) d zeta

on a circle |zeta| = rho enclosing every root of zeta -> P(zeta xi).
The trapezoid rule on the circle is spectrally accurate here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadClassIndex, ContourTooSmall, InvariantViolated
from .operator import ellipticity_margin, require_elliptic

NODE_CAP = 4096
ZERO_CUTOFF = 1e-14
DEFAULT_EXTRA_TERMS = 40
LONG_PI = np.longdouble("3.14159265358979323846264338327950288")


@dataclass(frozen=True)
class ContourSpec:
    radius: float
    nodes: int = 64

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.nodes < 64 or self.nodes % 2:
            raise ValueError("contour nodes must be even and >= 64")

    def points(self, nodes=None, extended=False):
        m = self.nodes if nodes is None else nodes
        if not extended:
            return self.radius * np.exp(2j * np.pi * np.arange(m) / m)
        ang = np.arange(m, dtype=np.longdouble) * (2 * LONG_PI / m)
        return np.longdouble(self.radius) * (np.cos(ang) + 1j * np.sin(ang))


def radius_formula(a, margin=None):
    if margin is None:
        margin = require_elliptic(a)
    return 1.0 + a.lower_mass() / margin


def contour_radius(a, margin=None):
    """Safe contour radius: twice max(1, 1 + lower-order mass / margin)."""
    return 2.0 * max(1.0, radius_formula(a, margin))


def default_contour(a, margin=None):
    return ContourSpec(contour_radius(a, margin), 64)


def _unit(xi):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi[None, :]
    return xi


def _symbol_on_circle(a, zeta, xi):
    # P(zeta xi) = sum_q zeta^q P_q(xi) with P_q the degree-q part -> shape (nodes, dirs)
    parts = np.zeros((2 * a.k + 1, xi.shape[0]), dtype=zeta.real.dtype)
    for alpha, value in a.coeffs.items():
        parts[sum(alpha)] += value * np.prod(xi.astype(parts.dtype) ** np.asarray(alpha), axis=1)
    vals = (zeta[:, None] ** np.arange(2 * a.k + 1)[None, :]) @ parts.astype(zeta.dtype)
    if np.min(np.abs(vals)) < 1e-12:
        raise ContourTooSmall("symbol nearly vanishes on the contour; enlarge the radius")
    return vals


def _trapezoid_doubling(compute, spec, tol=1e-12, col_scale=None, extended=False):
    """Run compute(zeta) at doubling node counts until successive results agree.

    col_scale gives the roundoff scale per output column (a_j carries rho^j).
    """
    m = spec.nodes
    prev = compute(spec.points(m, extended))
    while m < NODE_CAP:
        m *= 2
        cur = compute(spec.points(m, extended))
        scale = max(1.0, float(np.max(np.abs(cur))))
        if col_scale is not None:
            scale = scale * col_scale[None, :]
        if np.all(np.abs(cur - prev) <= tol * scale):
            return cur
        prev = cur
    return prev


def v_eval(a, x, xi, t, c=None):
    """v(a, x, xi, t) for one point (scalar result)."""
    s = float(np.dot(np.asarray(x, dtype=float), np.asarray(xi, dtype=float)) - t)
    return float(v_tilde(a, xi, np.array([s]), c)[0, 0])


def v_tilde(a, xi, s, c=None):
    """v as a function of s = x.xi - t for directions xi (d, n) and offsets s (m,).

    Returns a real array of shape (d, m).
    """
    xi = _unit(xi)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    c = c or default_contour(a)

    def compute(zeta):
        p = _symbol_on_circle(a, zeta, xi)                      # (N, d)
        e = np.exp(np.outer(zeta, s))                          # (N, m)
        vals = (1.0 / p).T @ e / zeta.size                     # dzeta/(2 pi i zeta) -> 1/N
        scale = (1.0 / np.abs(p)).T @ np.abs(e) / zeta.size
        return vals, scale

    m = c.nodes
    prev, _ = compute(c.points(m))
    while True:
        if m >= NODE_CAP:
            cur, scale = prev, compute(c.points(m))[1]
            break
        m *= 2
        cur, scale = compute(c.points(m))
        if np.max(np.abs(cur - prev)) <= 1e-12 * max(1.0, float(np.max(np.abs(cur)))):
            break
        prev = cur
    if np.max(np.abs(cur.imag) - 1e-10 * np.maximum(1.0, scale)) > 0:
        raise InvariantViolated("imaginary residue of the contour quadrature exceeds 1e-10")
    return cur.real


@dataclass(frozen=True)
class PlaneWaveCoefficients:
    xi: np.ndarray          # (d, n)
    coeffs: np.ndarray      # (d, J+1)
    J: int
    k: int
    radius: float
    tail_bound: float

    def a_j(self, j):
        return self.coeffs[:, j]


def raw_coefficients(a, xi, J, c=None, extended=True):
    """Contour-quadrature a_0..a_J (complex, before invariant checks). Shape (d, J+1).

    The nodal terms reach rho^(j-2k) while a_j stays O(1), so the sums run in
    extended precision to keep the result independent of rho.
    """
    xi = _unit(xi)
    c = c or default_contour(a)
    powers = np.arange(J + 1)

    def compute(zeta):
        p = _symbol_on_circle(a, zeta, xi)
        zp = zeta[:, None] ** powers[None, :]                  # (N, J+1)
        return ((1.0 / p).T @ zp / zeta.size).astype(complex)

    return _trapezoid_doubling(compute, c, col_scale=np.maximum(1.0, c.radius ** powers), extended=extended)


def series_coefficients(a, xi, J=None, c=None, margin=None, enforce=True, extended=True):
    """Taylor coefficients a_j(a, xi), j = 0..J, of v in s = x.xi - t.

    Verifies reality, the vanishing of a_j for j < 2k and a_{2k} P0(xi) = 1,
    then zeroes the vanishing block and entries below 1e-14.
    """
    k = a.k
    if J is None:
        J = 2 * k + DEFAULT_EXTRA_TERMS
    if J < 2 * k:
        raise ValueError("J must be >= 2k")
    if margin is None:
        margin = require_elliptic(a)
    c = c or default_contour(a, margin)
    xi = _unit(xi)
    raw = raw_coefficients(a, xi, J, c, extended)
    rho = c.radius
    # Roundoff in a_j grows like rho^(j-2k) / margin; the imaginary residue is judged on that scale.
    scale = np.maximum(1.0, rho ** (np.arange(J + 1) - 2 * k) / margin)
    if np.max(np.abs(raw.imag) / scale[None, :]) > 1e-10:
        raise InvariantViolated("contour coefficients carry an imaginary residue above 1e-10")
    co = raw.real.copy()
    if enforce:
        head = np.abs(co[:, : 2 * k])
        if head.size and head.max() > 1e-6:
            raise InvariantViolated(f"a_j for j < 2k reached {head.max():.2e}; radius or quadrature bug")
        co[:, : 2 * k] = 0.0
        lead = co[:, 2 * k] * a.p0(xi)
        if np.max(np.abs(lead - 1.0)) > 1e-8:
            raise InvariantViolated("a_{2k} P0(xi) deviates from 1 by more than 1e-8")
        co[np.abs(co) < ZERO_CUTOFF] = 0.0
    l = class_index_safe(a, margin)
    tail = tail_sum(l, J, k, radius=1.0)
    return PlaneWaveCoefficients(xi, co, J, k, rho, tail)


def class_index_safe(a, margin):
    return max(1, math.floor(a.lower_mass()) + 1, math.floor(1.0 / margin) + 1)


def in_class(a, l, margin=None):
    if margin is None:
        margin = ellipticity_margin(a)
    return margin > 0 and a.lower_mass() < l and margin > 1.0 / l


def truncation_bound(l, j, k, a=None):
    """Cauchy bound |a_j| <= l (1 + l^2)^(j + 1 - 2k) valid on the class E_{R,l}."""
    if l < 1:
        raise BadClassIndex("class index l must be >= 1", field="l")
    if a is not None and not in_class(a, l):
        raise BadClassIndex(f"operator is not in class E_R,{l}", field="l")
    return l * (1.0 + l * l) ** (j + 1 - 2 * k)


def tail_sum(l, J, k, radius, terms=400):
    """Bound on sum_{j > J} |a_j| r^j / j! from truncation_bound."""
    total = 0.0
    log_r = math.log(radius) if radius > 0 else -math.inf
    for j in range(J + 1, J + 1 + terms):
        logterm = math.log(l) + (j + 1 - 2 * k) * math.log1p(l * l) + j * log_r - math.lgamma(j + 1)
        total += math.exp(logterm) if logterm > -745 else 0.0
    return total


def w_eval(a, xi, s, coeffs=None, tol=1e-12):
    """w(a, xi, s) with v = s^{2k} w; sums a_j s^(j-2k)/j! until the bound certifies the tail."""
    k = a.k
    pw = coeffs if coeffs is not None else series_coefficients(a, xi)
    row = pw.coeffs[0]
    if abs(s) < 1e-8:
        return row[2 * k] / math.factorial(2 * k)
    margin = require_elliptic(a)
    l = class_index_safe(a, margin)
    total = 0.0
    for j in range(2 * k, pw.J + 1):
        total += row[j] * s ** (j - 2 * k) / math.factorial(j)
    # Certified tail from the class bound; extend the series only if needed.
    J = pw.J
    while tail_sum(l, J, k, abs(s)) / abs(s) ** (2 * k) > tol * max(1.0, abs(total)) and J < 400:
        J = min(400, 2 * J)
        pw = series_coefficients(a, xi, J)
        row = pw.coeffs[0]
        total = sum(row[j] * s ** (j - 2 * k) / math.factorial(j) for j in range(2 * k, J + 1))
    return float(total)


def symbol_floor(a, xi, c=None):
    """min |P(zeta xi)| over the contour nodes and the given directions."""
    xi = _unit(xi)
    c = c or default_contour(a)
    return float(np.min(np.abs(_symbol_on_circle(a, c.points(), xi))))


def cauchy_bound(j, radius, floor):
    """|a_j| <= radius^j / min |P| on the contour."""
    return radius ** j / floor


def v_tilde_pairs(a, xi, S, c=None, tol=1e-16):
    """v at per-direction offsets: xi (d, n), S (d, m) -> (d, m), via the Taylor series.

    The series order is chosen from the Cauchy bound so that the tail is below tol
    relative to the leading term scale.
    """
    xi = _unit(xi)
    S = np.asarray(S, dtype=float)
    margin = require_elliptic(a)
    c = c or default_contour(a, margin)
    smax = float(np.max(np.abs(S))) if S.size else 0.0
    floor = symbol_floor(a, xi, c)
    k = a.k
    J = 2 * k + 8
    while J < 400:
        logt = (J + 1) * math.log(max(c.radius * smax, 1e-300)) - math.lgamma(J + 2) - math.log(floor)
        if logt < math.log(tol):
            break
        J += 8
    # the s^j / j! weights damp the double-precision roundoff of high a_j
    co = series_coefficients(a, xi, J, c, margin, extended=False).coeffs
    # Horner form of sum_j a_j s^j / j!
    out = np.broadcast_to(co[:, J:J + 1], S.shape).copy()
    for j in range(J - 1, -1, -1):
        out = out * S / (j + 1) + co[:, j:j + 1]
    return out
