"""Ground truth: closed-form kernels, K0, bump test functions, the delta test and residual scans."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import SupportExceedsValidity, UnknownName
from .layer import KernelHandle
from .operator import adjoint_symbol, apply_operator_fd

EULER_GAMMA = 0.57721566490153286061


# -- modified Bessel K0 ---------------------------------------------------------------

def bessel_k0(x):
    """K0 for x > 0: power series up to 2, trapezoid on int_0^inf exp(-x cosh t) dt beyond."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x <= 2.0
    xs = x[small]
    if xs.size:
        q = xs * xs / 4.0
        term = np.ones_like(xs)
        i0 = np.ones_like(xs)
        acc = np.zeros_like(xs)
        H = 0.0
        for m in range(1, 40):
            term = term * q / (m * m)
            H += 1.0 / m
            i0 += term
            acc += term * H
        out[small] = -(np.log(xs / 2.0) + EULER_GAMMA) * i0 + acc
    xl = x[~small]
    if xl.size:
        h = 0.05
        tmax = math.acosh(760.0 / 2.0)
        t = np.arange(0.0, tmax + h, h)
        w = np.full(t.size, h)
        w[0] = 0.5 * h
        out[~small] = np.exp(-np.outer(xl, np.cosh(t))) @ w
    return out if out.ndim else float(out)


# -- closed-form kernels ---------------------------------------------------------------

REFERENCE_NAMES = ("laplace2d", "laplace3d", "biharmonic2d", "yukawa2d", "yukawa3d", "anisotropic2d")


def _symbols(n):
    return sp.symbols(f"x1:{n + 1}", real=True)


def _reference_expr(name, kappa=1.0, A=None):
    if name == "laplace2d":
        x = _symbols(2)
        return x, sp.log(x[0] ** 2 + x[1] ** 2) / (4 * sp.pi)
    if name == "laplace3d":
        x = _symbols(3)
        return x, -1 / (4 * sp.pi * sp.sqrt(sum(xi ** 2 for xi in x)))
    if name == "biharmonic2d":
        x = _symbols(2)
        r2 = x[0] ** 2 + x[1] ** 2
        return x, r2 * sp.log(r2) / (16 * sp.pi)
    if name == "yukawa3d":
        x = _symbols(3)
        r = sp.sqrt(sum(xi ** 2 for xi in x))
        return x, -sp.exp(-sp.Float(kappa) * r) / (4 * sp.pi * r)
    if name == "anisotropic2d":
        x = _symbols(2)
        M = sp.Matrix(np.asarray(A, dtype=float).tolist())
        v = sp.Matrix(x)
        q = (v.T * M.inv() * v)[0, 0]
        return x, sp.log(q) / (4 * sp.pi * sp.sqrt(M.det()))
    raise UnknownName(f"unknown reference kernel {name!r}", field="name")


@lru_cache(maxsize=64)
def _lambdified(name, kappa, A, beta):
    x, e = _reference_expr(name, kappa, None if A is None else np.array(A))
    for h, times in enumerate(beta):
        if times:
            e = sp.diff(e, x[h], times)
    return sp.lambdify(x, e, "numpy")


def reference_kernel(name, kappa=1.0, A=None):
    """KernelHandle for a named closed form; derivatives by exact symbolic differentiation."""
    if name not in REFERENCE_NAMES:
        raise UnknownName(f"unknown reference kernel {name!r}", field="name")
    if name == "yukawa2d":
        return KernelHandle(
            "yukawa2d", 2,
            lambda z: -bessel_k0(kappa * np.linalg.norm(np.atleast_2d(z), axis=-1)) / (2 * math.pi),
            meta={"kappa": kappa},
        )
    At = None if A is None else tuple(map(tuple, np.asarray(A, dtype=float)))
    n = 3 if name.endswith("3d") else 2

    def call(z, beta):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        f = _lambdified(name, float(kappa), At, beta)
        return np.broadcast_to(np.asarray(f(*z.T), dtype=float), (z.shape[0],)).copy()

    return KernelHandle(name, n, lambda z: call(z, (0,) * n), call, meta={"kappa": kappa, "A": At})


def closed_form_reference(name, x, kappa=1.0, A=None):
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x) == 0:
        raise ValueError("reference kernels are evaluated away from the origin")
    return float(reference_kernel(name, kappa, A)(x[None, :])[0])


# -- test functions ---------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Bump exp(1/(|(y-c)/R|^2 - 1)) inside the ball B(c, R), zero outside."""
    center: tuple
    R: float

    __test__ = False    # not a pytest class

    @property
    def n(self):
        return len(self.center)

    def _expr(self):
        x = _symbols(self.n)
        rho2 = sum((xi - ci) ** 2 for xi, ci in zip(x, self.center)) / sp.Float(self.R) ** 2
        return x, sp.exp(1 / (rho2 - 1))

    def _masked(self, f, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        rho2 = np.sum((y - np.asarray(self.center)) ** 2, axis=1) / self.R ** 2
        inside = rho2 < 1.0 - 1e-12
        out = np.zeros(y.shape[0])
        if np.any(inside):
            out[inside] = np.broadcast_to(f(*y[inside].T), (int(inside.sum()),))
        return out

    def __call__(self, y):
        return self._masked(_bump_callable(self.center, self.R, None), y)

    def apply(self, a, y):
        """(L[a] phi)(y) by symbolic differentiation."""
        return self._masked(_bump_callable(self.center, self.R, tuple(sorted(a.coeffs.items()))), y)


@lru_cache(maxsize=32)
def _bump_callable(center, R, coeffs):
    tf = TestFunction(center, R)
    x, e = tf._expr()
    if coeffs is not None:
        total = 0
        for alpha, v in coeffs:
            d = e
            for h, times in enumerate(alpha):
                if times:
                    d = sp.diff(d, x[h], times)
            total += sp.Float(v) * d
        e = total
    return sp.lambdify(x, e, "numpy")


def _polar_rule(n, R, grid, grading):
    """Points and weights covering the ball |y| < R, graded toward the origin."""
    t, w = np.polynomial.legendre.leggauss(grid)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    r = R * t ** grading
    wr = R * grading * t ** (grading - 1) * w * r ** (n - 1)
    if n == 2:
        m = 2 * grid
        ph = 2 * math.pi * (np.arange(m) + 0.5) / m
        dirs = np.stack([np.cos(ph), np.sin(ph)], -1)
        wd = np.full(m, 2 * math.pi / m)
    else:
        u, wu = np.polynomial.legendre.leggauss(grid)
        m = 2 * grid
        ph = 2 * math.pi * (np.arange(m) + 0.5) / m
        U, P = np.meshgrid(u, ph, indexing="ij")
        s = np.sqrt(1 - U ** 2)
        dirs = np.stack([s * np.cos(P), s * np.sin(P), U], -1).reshape(-1, 3)
        wd = np.outer(wu, np.full(m, 2 * math.pi / m)).ravel()
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    wts = np.outer(wr, wd).ravel()
    return pts, wts


def distributional_delta_test(kernel, a, phi, grid=64, grading=None):
    """|int K(y) (L^t phi)(y) dy - phi(0)| / |phi(0)|."""
    if grid < 64:
        raise ValueError("grid must be >= 64 per axis")
    n = a.n
    extent = float(np.linalg.norm(phi.center)) + phi.R
    if extent > kernel.radius:
        raise SupportExceedsValidity(
            f"test-function support reaches {extent:.3g} beyond kernel validity {kernel.radius:.3g}")
    grading = grading or (2 if n == 2 else 3)
    pts, wts = _polar_rule(n, extent, grid, grading)
    Ltphi = phi.apply(adjoint_symbol(a), pts)
    live = Ltphi != 0.0
    val = float(np.dot(wts[live] * Ltphi[live], kernel(pts[live])))
    phi0 = float(phi(np.zeros((1, n)))[0])
    return abs(val - phi0) / abs(phi0)


def residual_scan(kernel, a, annulus, count=50, seed=0, h=1e-2):
    """max |L[a] K(x)| / scale over random points of the annulus, by finite differences.

    The scale at x is sum_alpha |a_alpha| |x|^{-|alpha|} max(|K(x)|, |x|^{2k-n}),
    the size of the individual derivative terms.
    """
    rng = np.random.default_rng(seed)
    n = a.n
    lo, hi = annulus
    worst = 0.0
    for _ in range(count):
        d = rng.normal(size=n)
        x = d / np.linalg.norm(d) * rng.uniform(lo, hi)
        r = float(np.linalg.norm(x))
        res = apply_operator_fd(a, lambda p: kernel(p), x, h=h)
        size = max(abs(float(kernel(x[None, :])[0])), r ** (2 * a.k - n))
        scale = sum(abs(v) * r ** (-sum(al)) for al, v in a.coeffs.items()) * size
        worst = max(worst, abs(res) / scale)
    return worst
