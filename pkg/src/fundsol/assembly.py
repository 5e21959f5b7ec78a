"""Series form of the fundamental solution S(a, .) and of S0(a, .).

For n odd
    S(x) = sum_j r^(2k-n+j) f_j(theta)
and for n even
    S(x) = sum_j r^(2k-n+j) [f_j(theta) + log r g_j(theta) + c_j(theta)],
where r^(2k-n+j) g_j(theta) is the homogeneous polynomial sum_{|alpha|=2k-n+j} b_alpha x^alpha
and c_j = -H_{2k+j} g_j is the smooth part coming from the difference-quotient
integral (H the harmonic numbers).

Each f_j is obtained as Delta^p applied to r^m times a sphere integral of the
plane-wave coefficient a_{2k+j}(xi) against a zonal kernel of theta.xi; the
sphere integral is diagonal on harmonics (Funk-Hecke) and Delta^p is diagonal
on r^m Y_l.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .contour import (
    class_index_safe,
    default_contour,
    series_coefficients,
    symbol_floor,
    truncation_bound,
    v_tilde_pairs,
)
from .errors import InvariantViolated, OutsideValidity, UnsupportedDimension
from .operator import OperatorCoefficients, multi_indices, require_elliptic
from .radial import iterated_eigen_factor, series_derivative
from .sphere import (
    aligned_frame,
    basis_matrix,
    basis_size,
    build_quadrature,
    funk_hecke_multipliers,
    graded_half_rule,
    index_degrees,
)

SCHEMA_VERSION = 1
DEFAULT_JMAX = 40
JMAX_CAP = 120
DEFAULT_L = {2: 24, 3: 16}
L_CAP = {2: 96, 3: 48}
TAIL_TOL = 1e-10
PARITY_TOL = 1e-8


def _p(n):
    return (n + 1) // 2 if n % 2 else n // 2


def two_pi_i_power(q):
    """(2 pi i)^q for even q, a real number."""
    if q % 2:
        raise ValueError("odd power of 2 pi i is not real")
    return (-1) ** (q // 2) * (2.0 * math.pi) ** q


def harmonic_number(j):
    return math.fsum(1.0 / i for i in range(1, j + 1))


def kernel_flat(n, J):
    """Zonal kernel of the odd-dimension angular function for a_J."""
    const = 1.0 / (4.0 * two_pi_i_power(n - 1) * math.factorial(J + 1))
    return lambda u: const * u ** (J + 1) * np.sign(u)


def kernel_sharp(n, J):
    const = -1.0 / (two_pi_i_power(n) * math.factorial(J))

    def psi(u):
        au = np.abs(u)
        return const * u ** J * np.log(np.where(au > 0, au, 1.0))

    return psi


def kernel_poly(n, J):
    const = -1.0 / (two_pi_i_power(n) * math.factorial(J))
    return lambda u: const * u ** J


# -- b_alpha monomial conversion (n = 2) ------------------------------------------

def _poly_mul(p, q):
    out = {}
    for (a1, a2), c in p.items():
        for (b1, b2), d in q.items():
            key = (a1 + b1, a2 + b2)
            out[key] = out.get(key, 0.0) + c * d
    return out


@lru_cache(maxsize=None)
def fourier_monomials(d, l):
    """Monomial forms of r^d cos(l phi) and r^d sin(l phi), d - l even and >= 0."""
    q = (d - l) // 2
    rad = {(2 * i, 2 * (q - i)): float(math.comb(q, i)) for i in range(q + 1)}
    re, im = {}, {}
    for t in range(l + 1):
        c = float(math.comb(l, t))
        if t % 2 == 0:
            re[(l - t, t)] = c * (-1) ** (t // 2)
        else:
            im[(l - t, t)] = c * (-1) ** ((t - 1) // 2)
    return _poly_mul(rad, re), _poly_mul(rad, im)


def harmonic_to_monomials(coeffs, d):
    """Homogeneous degree-d polynomial r^d g(theta) for a circle expansion g -> {alpha: b}."""
    out = {}
    L = (coeffs.size - 1) // 2
    for l in range(d % 2, min(d, L) + 1, 2):
        if l == 0:
            parts = [(coeffs[0] / math.sqrt(2.0 * math.pi), fourier_monomials(d, 0)[0])]
        else:
            cm, sm = fourier_monomials(d, l)
            parts = [(coeffs[2 * l - 1] / math.sqrt(math.pi), cm), (coeffs[2 * l] / math.sqrt(math.pi), sm)]
        for c, poly in parts:
            if c == 0.0:
                continue
            for alpha, v in poly.items():
                out[alpha] = out.get(alpha, 0.0) + c * v
    return out


# -- the table ------------------------------------------------------------------------

@dataclass
class FundamentalSolutionTable:
    a: OperatorCoefficients
    Jmax: int
    L: int
    F: np.ndarray                 # (Jmax+1, B) coefficients of f_j
    G: np.ndarray                 # (Jmax+1, B) coefficients of g_j (log part), zero for n odd
    C: np.ndarray                 # (Jmax+1, B) coefficients of c_j, zero for n odd
    b: dict                       # alpha -> b_alpha
    radius: float
    tail_consts: np.ndarray       # per-j constants of the tail estimate, j = Jmax+1 ...
    R_valid: float
    parity_residual: np.ndarray   # wrong-parity L2 mass of f_j before projection
    parity_checked: bool = False
    meta: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self):
        return self.a.n

    @property
    def k(self):
        return self.a.k

    @property
    def m0(self):
        return 2 * self.k - self.n

    def f(self, j):
        from .sphere import HarmonicExpansion
        return HarmonicExpansion(self.n, self.L, self.F[j])

    def remainder_bound(self, r):
        """Estimate of the truncated tail of the series at radius r."""
        if self.tail_consts.size == 0:
            return 0.0
        r = float(r)
        j = self.Jmax + 1 + np.arange(self.tail_consts.size)
        with np.errstate(over="ignore", divide="ignore"):
            logs = np.log(self.tail_consts) + (self.m0 + j) * math.log(r)
        total = float(np.sum(np.exp(np.minimum(logs, 700.0))))
        return total * (1.0 + abs(math.log(r)))

    def _series(self, beta=None):
        """(L, m0, P, Q) for d^beta S, trimmed and cached."""
        key = tuple(beta) if beta is not None else (0,) * self.n
        if key in self._cache:
            return self._cache[key]
        P = self.F + self.C
        Q = self.G
        scale = max(float(np.abs(P).max(initial=0.0)), float(np.abs(Q).max(initial=0.0)), 1e-300)
        P = np.where(np.abs(P) > 1e-16 * scale, P, 0.0)    # roundoff would otherwise inflate L and J
        Q = np.where(np.abs(Q) > 1e-16 * scale, Q, 0.0)
        live = np.nonzero(np.any(P != 0, axis=1) | np.any(Q != 0, axis=1))[0]
        jt = int(live.max()) + 1 if live.size else 1
        P, Q = P[:jt], Q[:jt]
        L, m0 = self.L, float(self.m0)
        for h, times in enumerate(key):
            for _ in range(times):
                L, m0, P, Q = series_derivative(self.n, L, m0, P, Q, h)
        Lt, P, Q = _trim_degree(self.n, L, P, Q)
        out = (Lt, m0, P, Q)
        self._cache[key] = out
        return out


def _trim_degree(n, L, P, Q):
    """Drop harmonic degrees that carry nothing above roundoff in P and Q."""
    deg = index_degrees(n, L)
    scale = max(float(np.abs(P).max(initial=0.0)), float(np.abs(Q).max(initial=0.0)), 1e-300)
    live = np.nonzero(np.any(np.abs(P) > 1e-16 * scale, axis=0) | np.any(np.abs(Q) > 1e-16 * scale, axis=0))[0]
    Lt = int(deg[live].max()) if live.size else 0
    B = basis_size(n, Lt)
    return Lt, np.ascontiguousarray(P[:, :B]), np.ascontiguousarray(Q[:, :B])


def _evaluate_series(n, L, m0, P, Q, x, chunk=20000):
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    r = np.linalg.norm(pts, axis=-1)
    if np.any(r == 0):
        raise ValueError("S is evaluated away from the origin")
    vals = np.empty(pts.shape[0])
    if n == 2:
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        vals[:] = kernels.eval_series_2d(P, Q, m0, r, phi)
    else:
        powers = m0 + np.arange(P.shape[0])
        for s in range(0, pts.shape[0], chunk):
            rr = r[s:s + chunk]
            Y = basis_matrix(n, L, pts[s:s + chunk] / rr[:, None])
            pv, qv = Y @ P.T, Y @ Q.T
            pw = rr[:, None] ** powers[None, :]
            vals[s:s + chunk] = np.sum(pw * (pv + np.log(rr)[:, None] * qv), axis=1)
    return vals if x.ndim > 1 else float(vals[0])


def _check_radius(table, x):
    r = np.linalg.norm(np.atleast_2d(np.asarray(x, dtype=float)), axis=-1)
    if np.any(r > table.R_valid):
        raise OutsideValidity(f"|x| = {float(r.max()):.4g} exceeds the validity radius {table.R_valid:.4g}")


def eval_S(table, x):
    _check_radius(table, x)
    return _evaluate_series(table.n, *table._series(), x)


def eval_S_derivative(table, x, beta):
    beta = tuple(int(b) for b in beta)
    if len(beta) != table.n or min(beta) < 0:
        raise ValueError("beta must be a multi-index of length n")
    if sum(beta) > 2 * table.k - 1:
        raise ValueError("derivative order must be <= 2k-1")
    _check_radius(table, x)
    return _evaluate_series(table.n, *table._series(beta), x)


def eval_S0(table, x):
    """Fundamental solution of the principal part: j = 0 term and degree-(2k-n) log polynomial."""
    L, P, Q = _trim_degree(table.n, table.L, table.F[:1], table.G[:1])
    return _evaluate_series(table.n, L, float(table.m0), P, Q, x)


# -- build --------------------------------------------------------------------------

def _angular_series(a, L, Jmax, quad, c, margin):
    """f_j, g_j, c_j coefficient matrices at degree L from coefficients on quad nodes."""
    n, k = a.n, a.k
    p = _p(n)
    pw = series_coefficients(a, quad.nodes, 2 * k + Jmax, c, margin)
    Bm = basis_matrix(n, L, quad.nodes)
    E = (pw.coeffs[:, 2 * k:].T * quad.weights[None, :]) @ Bm       # (Jmax+1, B)
    deg = index_degrees(n, L)
    F = np.zeros_like(E)
    G = np.zeros_like(E)
    C = np.zeros_like(E)
    for jp in range(Jmax + 1):
        J = 2 * k + jp
        if not np.any(E[jp]):
            continue
        if n % 2:
            lam = funk_hecke_multipliers(n, L, kernel_flat(n, J))
            plain, _ = iterated_eigen_factor(n, J + 1, deg, p)
            F[jp] = plain * lam[deg] * E[jp]
        else:
            lam_a = funk_hecke_multipliers(n, L, kernel_sharp(n, J))
            lam_b = funk_hecke_multipliers(n, L, kernel_poly(n, J))
            plain, cross = iterated_eigen_factor(n, J, deg, p)
            As, Bs = lam_a[deg] * E[jp], lam_b[deg] * E[jp]
            F[jp] = plain * As + cross * Bs
            G[jp] = plain * Bs
            C[jp] = -harmonic_number(J) * G[jp]
    return F, G, C, pw


def _converged(F, n, L):
    deg = index_degrees(n, L)
    top = deg >= L - 1
    norms = np.sqrt(np.sum(F ** 2, axis=1))
    scale = max(float(norms.max()), 1e-300)
    tail = np.sqrt(np.sum(F[:, top] ** 2, axis=1))
    return bool(np.all(tail <= 1e-10 * np.maximum(norms, 1e-6 * scale)))


def _parity_split(M, n, L):
    deg = index_degrees(n, L)
    j = np.arange(M.shape[0])[:, None]
    wrong = (deg[None, :] % 2) != (j % 2)
    resid = np.sqrt(np.sum(np.where(wrong, M, 0.0) ** 2, axis=1))
    return resid, np.where(wrong, 0.0, M)


def _tail_constants(a, Jmax, radius, floor, margin, terms=200):
    """Per-term constants for the heuristic tail of the f_j series.

    |a_J| is bounded by the smaller of the class bound and the contour Cauchy bound;
    the sphere integral, the kernel factorial and Delta^p growth give the rest.
    """
    if a.is_homogeneous():
        return np.zeros(0)
    n, k = a.n, a.k
    p = _p(n)
    area = 2.0 * math.pi if n == 2 else 4.0 * math.pi
    l = class_index_safe(a, margin)
    out = []
    for jp in range(Jmax + 1, Jmax + 1 + terms):
        J = 2 * k + jp
        log_aj = min(math.log(truncation_bound(l, J, k)), J * math.log(radius) - math.log(floor))
        log_c = (log_aj + math.log(area) - (n - n % 2) * math.log(2 * math.pi)
                 - math.lgamma(J + 1) + 2 * p * math.log(J + n + 2.0) + math.log1p(harmonic_number(J)))
        out.append(math.exp(max(log_c, -745.0)))
    return np.array(out)


def _valid_radius(table):
    if table.tail_consts.size == 0:
        return math.inf
    lo, hi = 1e-6, 1e6
    if table.remainder_bound(lo) >= TAIL_TOL:
        return 0.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if table.remainder_bound(mid) < TAIL_TOL:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1 + 1e-10:
            break
    return lo


def build_table(a, Jmax=None, L=None, quad_order=None, radius=None, adaptive=True):
    """Assemble the series table for S(a, .).

    Jmax defaults to 40 and is raised (cap 120) until the validity radius
    reaches ``radius`` when one is requested.  L defaults per dimension and is
    raised until the top-degree content of every f_j is negligible, unless
    ``adaptive`` is False.
    """
    n, k = a.n, a.k
    if n not in (2, 3):
        raise UnsupportedDimension(f"series assembly supports n in {{2,3}}, got {n}", field="n")
    margin = require_elliptic(a)
    c = default_contour(a, margin)
    Jmax = DEFAULT_JMAX if Jmax is None else int(Jmax)
    if Jmax < 0:
        raise ValueError("Jmax must be >= 0")
    L = DEFAULT_L[n] if L is None else int(L)
    while True:
        order = max(quad_order or 0, 2 * L + 8)
        quad = build_quadrature(n, order)
        F, G, C, pw = _angular_series(a, L, Jmax, quad, c, margin)
        if not adaptive or L >= L_CAP[n] or _converged(F, n, L):
            break
        L = min(L_CAP[n], int(L * 1.5) + (L % 2))
    resid_f, F = _parity_split(F, n, L)
    resid_g, G = _parity_split(G, n, L)
    _, C = _parity_split(C, n, L)
    norms = np.sqrt(np.sum(F ** 2, axis=1))
    resid = np.maximum(resid_f, resid_g)
    if np.any(resid > PARITY_TOL * np.maximum(1.0, norms)):
        raise InvariantViolated("f_j parity check failed beyond 1e-8")
    b = {}
    if n % 2 == 0:
        deg = index_degrees(n, L)
        for jp in range(Jmax + 1):
            d = 2 * k - n + jp
            gnorm = float(np.sqrt(np.sum(G[jp] ** 2)))
            stray = float(np.sqrt(np.sum(G[jp][deg > max(d, -1)] ** 2))) if d >= 0 else gnorm
            if stray > PARITY_TOL * max(1.0, gnorm):
                raise InvariantViolated(f"log part of term {jp} is not a degree-{d} polynomial")
            if d < 0:
                G[jp] = 0.0
                C[jp] = 0.0
                continue
            G[jp][deg > d] = 0.0
            C[jp][deg > d] = 0.0
            for alpha, v in harmonic_to_monomials(G[jp], d).items():
                b[alpha] = b.get(alpha, 0.0) + float(v)
        b = {al: v for al, v in sorted(b.items()) if abs(v) > 1e-15}
    floor = symbol_floor(a, quad.nodes, c)
    table = FundamentalSolutionTable(
        a=a, Jmax=Jmax, L=L, F=F, G=G, C=C, b=b, radius=c.radius,
        tail_consts=_tail_constants(a, Jmax, c.radius, floor, margin),
        R_valid=math.inf, parity_residual=resid, parity_checked=True,
        meta={"quad_order": int(order), "margin": float(margin)},
    )
    table.R_valid = _valid_radius(table)
    if radius is not None and table.R_valid < radius and Jmax < JMAX_CAP:
        return build_table(a, min(JMAX_CAP, Jmax + 20), L, quad_order, radius, adaptive)
    return table


def b_coefficients(table, degree=None):
    if degree is None:
        return dict(table.b)
    return {al: v for al, v in table.b.items() if sum(al) == degree}


# -- direct sphere integrals (cross-checks) --------------------------------------------

def _split_sphere_rule(n, theta, nodes=24, azimuth=48):
    """Directions xi and weights, graded toward the great circle theta.xi = 0.

    Built around the axis eta of largest |theta_i| and carried to theta by T_eta(theta),
    so that theta.xi equals the graded coordinate u exactly.
    """
    eta, T = aligned_frame(theta)
    i = int(np.argmax(np.abs(eta)))
    s = eta[i]
    others = [q for q in range(n) if q != i]
    t, w = graded_half_rule(nodes, 3)
    if n == 2:
        half = 0.5 * math.pi
        psi = np.concatenate([half * t, math.pi - half * t, math.pi + half * t, 2 * math.pi - half * t])
        wpsi = np.tile(half * w, 4)
        base = np.zeros((psi.size, 2))
        base[:, i] = s * np.sin(psi)
        base[:, others[0]] = np.cos(psi)
        u = np.sin(psi)
    else:
        uu = np.concatenate([-t, t])
        wu = np.concatenate([w, w])
        al = 2 * math.pi * (np.arange(azimuth) + 0.5) / azimuth
        U, A = np.meshgrid(uu, al, indexing="ij")
        rad = np.sqrt(1.0 - U ** 2)
        base = np.zeros((U.size, 3))
        base[:, i] = s * U.ravel()
        base[:, others[0]] = (rad * np.cos(A)).ravel()
        base[:, others[1]] = (rad * np.sin(A)).ravel()
        u = U.ravel()
        wpsi = np.outer(wu, np.full(azimuth, 2 * math.pi / azimuth)).ravel()
    xi = base @ T.T
    return xi, wpsi, u


def _tau_rule(m=16):
    t, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (t + 1.0), 0.5 * w


def compute_W0(a, x, nodes=24, azimuth=48):
    """(1/(4 (2 pi i)^(n-1))) int_S int_0^{x.xi} v(a, x, xi, t) sgn t dt dsigma, n odd."""
    n = a.n
    if n % 2 == 0:
        raise ValueError("W0 is defined for odd n")
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0:
        return 0.0
    xi, w, u = _split_sphere_rule(n, x / r, nodes, azimuth)
    X = r * u
    tau, wt = _tau_rule()
    # t = X tau; v depends on s = X - t = X (1 - tau); sgn t dt = |X| dtau
    V = v_tilde_pairs(a, xi, X[:, None] * (1.0 - tau[None, :]))
    inner = np.abs(X) * (V @ wt)
    return float(np.dot(w, inner) / (4.0 * two_pi_i_power(n - 1)))


def compute_W1(a, x, nodes=24, azimuth=48):
    """-(1/(2 pi i)^n) int_S v(a, x, xi, 0) log|x.xi| dsigma, n even."""
    n = a.n
    if n % 2:
        raise ValueError("W1 is defined for even n")
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    xi, w, u = _split_sphere_rule(n, x / r, nodes, azimuth)
    X = r * u
    V = v_tilde_pairs(a, xi, X[:, None])[:, 0]
    return float(-np.dot(w, V * (math.log(r) + np.log(np.abs(u)))) / two_pi_i_power(n))


def compute_W1_parts(a, x, nodes=24, azimuth=48):
    """(angular part, log coefficient) with W1 = angular + log|x| * B(x)."""
    n = a.n
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    xi, w, u = _split_sphere_rule(n, x / r, nodes, azimuth)
    V = v_tilde_pairs(a, xi, (r * u)[:, None])[:, 0]
    scale = -1.0 / two_pi_i_power(n)
    return float(scale * np.dot(w, V * np.log(np.abs(u)))), float(scale * np.dot(w, V))


def compute_W2(a, x, nodes=24, azimuth=48):
    """-(1/(2 pi i)^n) int_S int_0^{x.xi} (v(t) - v(0)) / t dt dsigma, n even."""
    n = a.n
    if n % 2:
        raise ValueError("W2 is defined for even n")
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r == 0:
        return 0.0
    xi, w, u = _split_sphere_rule(n, x / r, nodes, azimuth)
    X = r * u
    tau, wt = _tau_rule()
    S = np.concatenate([X[:, None] * (1.0 - tau[None, :]), X[:, None]], axis=1)
    V = v_tilde_pairs(a, xi, S)
    inner = ((V[:, :-1] - V[:, -1:]) / tau[None, :]) @ wt
    return float(-np.dot(w, inner) / two_pi_i_power(n))


# -- serialization ----------------------------------------------------------------------

def _float_or_str(v):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _from_float_or_str(v):
    return float(v)


def table_to_dict(t):
    return {
        "schema_version": SCHEMA_VERSION,
        "n": t.n,
        "k": t.k,
        "coefficients": [[list(al), v] for al, v in t.a.coeffs.items()],
        "Jmax": t.Jmax,
        "L": t.L,
        "radius": t.radius,
        "R_valid": _float_or_str(t.R_valid),
        "f": t.F.tolist(),
        "g": t.G.tolist(),
        "c": t.C.tolist(),
        "b": [[list(al), v] for al, v in t.b.items()],
        "tail_consts": t.tail_consts.tolist(),
        "parity_residual": t.parity_residual.tolist(),
        "parity_checked": t.parity_checked,
        "meta": t.meta,
    }


def table_from_dict(d):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported table schema_version {d.get('schema_version')!r}")
    a = OperatorCoefficients(d["n"], d["k"], {tuple(al): v for al, v in d["coefficients"]})
    B = basis_size(d["n"], d["L"])
    mats = [np.array(d[key], dtype=float).reshape(-1, B) for key in ("f", "g", "c")]
    return FundamentalSolutionTable(
        a=a, Jmax=d["Jmax"], L=d["L"], F=mats[0], G=mats[1], C=mats[2],
        b={tuple(al): v for al, v in d["b"]}, radius=d["radius"],
        tail_consts=np.array(d["tail_consts"], dtype=float),
        R_valid=_from_float_or_str(d["R_valid"]),
        parity_residual=np.array(d["parity_residual"], dtype=float),
        parity_checked=bool(d["parity_checked"]), meta=dict(d.get("meta", {})),
    )


def dumps_table(t):
    return json.dumps(table_to_dict(t), indent=1) + "\n"


def save_table(t, path):
    with open(path, "w") as fh:
        fh.write(dumps_table(t))


def load_table(path):
    with open(path) as fh:
        return table_from_dict(json.load(fh))
