"""Constant-coefficient operators L[a] = sum_alpha a_alpha d^alpha on R^n.

The coefficient vector is keyed by multi-indices (tuples of non-negative
integers).  Everything numeric downstream reads its symbol from here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from .errors import NonElliptic, ParseError, StencilOutOfDomain, UnsupportedDimension

MultiIndex = tuple

MARGIN_TOL = 1e-10
NONELLIPTIC_REL = 1e-8
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def multi_indices(n, order):
    """All multi-indices of length n and exact total order, in lexicographic order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), order):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return sorted(set(out), reverse=True)


@dataclass(frozen=True)
class OperatorCoefficients:
    n: int
    k: int
    coeffs: Mapping[tuple, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 2:
            raise ParseError("dimension n must be >= 2", field="n")
        if self.k < 1:
            raise ParseError("half-order k must be >= 1", field="k")
        clean = {}
        for alpha, value in self.coeffs.items():
            alpha = tuple(int(v) for v in alpha)
            if len(alpha) != self.n or min(alpha) < 0:
                raise ParseError(f"bad multi-index {alpha} for n={self.n}", field=str(alpha))
            if sum(alpha) > 2 * self.k:
                raise ParseError(f"multi-index {alpha} has order > 2k={2 * self.k}", field=str(alpha))
            value = float(value)
            if value != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + value
        if not any(sum(a) == 2 * self.k for a in clean):
            raise ParseError("no nonzero coefficient of order exactly 2k", field="coeffs")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items(), reverse=True)))

    @property
    def order(self):
        return 2 * self.k

    def principal(self):
        return {a: v for a, v in self.coeffs.items() if sum(a) == 2 * self.k}

    def lower(self):
        return {a: v for a, v in self.coeffs.items() if sum(a) < 2 * self.k}

    def is_homogeneous(self):
        return not self.lower()

    def lower_mass(self):
        return float(sum(abs(v) for v in self.lower().values()))

    def principal_max(self):
        return float(max(abs(v) for v in self.principal().values()))

    def scaled(self, factor):
        return OperatorCoefficients(self.n, self.k, {a: factor * v for a, v in self.coeffs.items()})

    def with_coefficient(self, alpha, value):
        c = dict(self.coeffs)
        c[tuple(alpha)] = value
        return OperatorCoefficients(self.n, self.k, c)

    def principal_operator(self):
        return OperatorCoefficients(self.n, self.k, self.principal())

    def p0(self, xi):
        """Principal symbol at real points xi of shape (..., n)."""
        return _poly_eval(self.principal(), np.asarray(xi, dtype=float))

    def symbol(self, zxi):
        """Full symbol at (possibly complex) points of shape (..., n)."""
        return _poly_eval(self.coeffs, np.asarray(zxi))


def _poly_eval(coeffs, pts):
    out = np.zeros(pts.shape[:-1], dtype=np.result_type(pts.dtype, float))
    for alpha, value in coeffs.items():
        term = np.full(pts.shape[:-1], value, dtype=out.dtype)
        for i, p in enumerate(alpha):
            if p:
                term = term * pts[..., i] ** p
        out = out + term
    return out


def laplacian(n, power=1):
    """Coefficients of Delta^power in dimension n (multinomial expansion)."""
    coeffs = {}
    for combo in itertools.product(range(n), repeat=power):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 2
        coeffs[tuple(alpha)] = coeffs.get(tuple(alpha), 0.0) + 1.0
    return OperatorCoefficients(n, power, coeffs)


def symbol_eval(a, z, xi):
    xi = np.asarray(xi, dtype=float)
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise ValueError("xi must be a unit vector")
    return complex(a.symbol(complex(z) * xi.astype(complex)))


def adjoint_symbol(a):
    return OperatorCoefficients(
        a.n, a.k, {alpha: (-1) ** sum(alpha) * v for alpha, v in a.coeffs.items()}
    )


# -- ellipticity ---------------------------------------------------------------

def _sphere_samples(n, samples):
    if n == 2:
        phi = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), phi[:, None]
    if n == 3:
        # Fibonacci lattice plus antipodes, so the sample set is symmetric.
        m = max(samples // 2, 8)
        i = np.arange(m) + 0.5
        pol = np.arccos(1.0 - 2.0 * i / (2 * m))
        az = np.pi * (1.0 + math.sqrt(5.0)) * i
        pol = np.concatenate([pol, np.pi - pol])
        az = np.concatenate([az, az + np.pi]) % (2.0 * np.pi)
        ang = np.stack([pol, az], axis=-1)
        return _angles_to_xyz(ang), ang
    raise UnsupportedDimension(f"numeric paths support n in {{2,3}}, got {n}", field="n")


def _angles_to_xyz(ang):
    ang = np.atleast_2d(ang)
    if ang.shape[-1] == 1:
        return np.stack([np.cos(ang[..., 0]), np.sin(ang[..., 0])], axis=-1)
    pol, az = ang[..., 0], ang[..., 1]
    return np.stack([np.sin(pol) * np.cos(az), np.sin(pol) * np.sin(az), np.cos(pol)], axis=-1)


def _golden_min(f, lo, hi, tol=MARGIN_TOL, maxit=200):
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(maxit):
        if hi - lo < tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def ellipticity_margin(a, samples=None, strict=False):
    """Estimate inf |P0[a]| over the unit sphere.

    Dense sampling locates the minimum, golden-section search along each
    angular coordinate refines it.  Returns 0.0 when the minimum is at or
    below the degeneracy threshold; with ``strict`` raises NonElliptic.
    """
    key = (a.n, a.k, tuple(sorted(a.principal().items())), samples)
    best = _margin_cached(*key)
    if best <= 0.0 and strict:
        raise NonElliptic("principal symbol degenerates on the unit sphere", field="coeffs")
    return best


@lru_cache(maxsize=256)
def _margin_cached(n, k, principal, samples):
    return _margin(OperatorCoefficients(n, k, dict(principal)), samples)


def _margin(a, samples):
    n = a.n
    if samples is None:
        samples = 720 if n == 2 else 4000
    if samples < 64:
        raise ValueError("samples must be >= 64")
    pts, ang = _sphere_samples(n, samples)
    vals = np.abs(a.p0(pts))
    threshold = max(MARGIN_TOL, NONELLIPTIC_REL * a.principal_max())

    def objective(angles):
        return float(abs(a.p0(_angles_to_xyz(np.asarray(angles, dtype=float))[0])))

    best = float(vals.min())
    if best > threshold:
        order = np.argsort(vals)[: 4 if n == 2 else 8]
        spacing = 2.0 * np.pi / samples if n == 2 else 4.0 * math.sqrt(np.pi / len(vals))
        for idx in order:
            cur = ang[idx].astype(float).copy()
            for _sweep in range(1 if n == 2 else 6):
                for axis in range(cur.size):
                    def along(t, axis=axis, cur=cur):
                        trial = cur.copy()
                        trial[axis] = t
                        return objective(trial)
                    t, _ = _golden_min(along, cur[axis] - spacing, cur[axis] + spacing)
                    cur[axis] = t
            best = min(best, objective(cur))
    return 0.0 if best <= threshold else best


def require_elliptic(a, samples=None):
    return ellipticity_margin(a, samples=samples, strict=True)


def class_index(a, margin=None):
    """Smallest l >= 1 with lower-order mass < l and margin > 1/l."""
    if margin is None:
        margin = require_elliptic(a)
    l = max(1, math.floor(a.lower_mass()) + 1, math.floor(1.0 / margin) + 1)
    return int(l)


# -- finite differences --------------------------------------------------------

_STENCIL_CACHE = {}


def central_weights(deriv, accuracy=6):
    """Centered finite-difference weights for d^deriv/dx^deriv on unit spacing."""
    key = (deriv, accuracy)
    if key not in _STENCIL_CACHE:
        half = (deriv + 1) // 2 - 1 + accuracy // 2
        if deriv == 0:
            half = 0
        offsets = np.arange(-half, half + 1)
        m = offsets.size
        vander = np.vander(offsets.astype(float), m, increasing=True).T
        rhs = np.zeros(m)
        rhs[deriv] = math.factorial(deriv)
        w = np.linalg.solve(vander, rhs)
        _STENCIL_CACHE[key] = (offsets, w)
    return _STENCIL_CACHE[key]


def _fd_once(a, f, x, h, accuracy):
    nodes = {}
    for alpha, coef in a.coeffs.items():
        axes = []
        for d in alpha:
            off, w = central_weights(d, accuracy)
            axes.append(list(zip(off, w / h ** d)))
        for combo in itertools.product(*axes):
            offset = tuple(int(o) for o, _ in combo)
            weight = coef * math.prod(w for _, w in combo)
            nodes[offset] = nodes.get(offset, 0.0) + weight
    offsets = np.array(list(nodes.keys()), dtype=float)
    weights = np.array(list(nodes.values()))
    pts = x[None, :] + h * offsets
    try:
        vals = np.asarray(f(pts), dtype=float).reshape(-1)
    except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
        raise StencilOutOfDomain(f"field evaluation failed on stencil: {exc}") from exc
    if vals.shape[0] != pts.shape[0] or not np.all(np.isfinite(vals)):
        raise StencilOutOfDomain("field is not finite on the stencil")
    # Sum smallest weights first to limit cancellation error.
    terms = weights * vals
    return float(np.sum(terms[np.argsort(np.abs(terms))]))


def apply_operator_fd(a, f: Callable, x, h=1e-2, accuracy=6, tol=1e-6, levels=6):
    """Apply L[a] to a vectorized field f: (m, n) -> (m,) at point x.

    Tensor-product centered stencils of the given accuracy order per axis,
    Richardson-combined over halved steps until two estimates agree.
    """
    x = np.asarray(x, dtype=float)
    if h <= 0:
        raise ValueError("h must be positive")
    prev_raw = _fd_once(a, f, x, h, accuracy)
    best, best_gap = prev_raw, math.inf
    prev_rich = None
    factor = 2.0 ** accuracy - 1.0
    for level in range(1, levels):
        hh = h / 2 ** level
        raw = _fd_once(a, f, x, hh, accuracy)
        rich = raw + (raw - prev_raw) / factor
        gap = abs(raw - prev_raw) if prev_rich is None else abs(rich - prev_rich)
        if gap < best_gap:
            best, best_gap = rich, gap
        if gap <= tol * max(1.0, abs(rich)):
            return rich
        prev_raw, prev_rich = raw, rich
    return best


# -- operator file -------------------------------------------------------------

def parse_operator_text(text):
    """Parse the operator file grammar (see README, "Operator files")."""
    n = k = None
    coeffs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line and ":" not in line:
            key, _, val = line.partition("=")
            key = key.strip().lower()
            try:
                ival = int(val.strip())
            except ValueError:
                raise ParseError(f"line {lineno}: {key} must be an integer", field=key) from None
            if key == "n":
                n = ival
            elif key == "k":
                k = ival
            else:
                raise ParseError(f"line {lineno}: unknown key {key!r}", field=key)
            continue
        if ":" not in line:
            raise ParseError(f"line {lineno}: expected 'i1,...,in : value'", field=f"line {lineno}")
        idx, _, val = line.partition(":")
        try:
            alpha = tuple(int(p) for p in idx.split(","))
            value = float(val)
        except ValueError:
            raise ParseError(f"line {lineno}: malformed entry {raw.strip()!r}",
                             field=f"line {lineno}") from None
        if alpha in coeffs:
            raise ParseError(f"line {lineno}: duplicate multi-index {alpha}", field=str(alpha))
        coeffs[alpha] = value
    if n is None:
        raise ParseError("missing 'n = ...'", field="n")
    if k is None:
        raise ParseError("missing 'k = ...'", field="k")
    return OperatorCoefficients(n, k, coeffs)


def format_operator_text(a):
    lines = [f"n = {a.n}", f"k = {a.k}"]
    for alpha, v in a.coeffs.items():
        lines.append(f"{','.join(str(i) for i in alpha)} : {v!r}")
    return "\n".join(lines) + "\n"


def load_operator(path):
    with open(path) as fh:
        return parse_operator_text(fh.read())
