"""Single layer potentials on closed boundaries, one-sided traces and the derivative jump."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingDerivative, NoConvergence, TooCloseToBoundary, UnknownName

TRACE_LEVELS = 6
EXTERIOR_FACTOR = 4.0


# -- boundaries -------------------------------------------------------------------

def _curve(shape, params):
    """(gamma, dgamma) for a named closed curve, counterclockwise in t in [0, 2 pi)."""
    if shape == "circle":
        R = float(params.get("r", 1.0))
        return (lambda t: np.stack([R * np.cos(t), R * np.sin(t)], -1),
                lambda t: np.stack([-R * np.sin(t), R * np.cos(t)], -1))
    if shape == "ellipse":
        A, B = float(params.get("a", 2.0)), float(params.get("b", 1.0))
        return (lambda t: np.stack([A * np.cos(t), B * np.sin(t)], -1),
                lambda t: np.stack([-A * np.sin(t), B * np.cos(t)], -1))
    if shape == "star":
        eps, m = float(params.get("eps", 0.2)), int(params.get("m", 5))

        def g(t):
            r = 1.0 + eps * np.cos(m * t)
            return np.stack([r * np.cos(t), r * np.sin(t)], -1)

        def dg(t):
            r = 1.0 + eps * np.cos(m * t)
            dr = -eps * m * np.sin(m * t)
            return np.stack([dr * np.cos(t) - r * np.sin(t), dr * np.sin(t) + r * np.cos(t)], -1)

        return g, dg
    raise UnknownName(f"unknown curve {shape!r}", field="boundary")


@dataclass(frozen=True)
class ParamBoundary:
    n: int
    shape: str
    params: dict
    t: np.ndarray           # parameters of the nodes; (N,) for curves, (N, 2) for surfaces
    points: np.ndarray      # (N, n)
    normals: np.ndarray     # (N, n) outward unit normals
    weights: np.ndarray     # (N,) arclength / area weights
    resolution: int
    smoothness: tuple = (math.inf, 1.0)

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def h_grid(self):
        """Minimum spacing between neighbouring nodes."""
        if self.n == 2:
            d = np.linalg.norm(np.roll(self.points, -1, axis=0) - self.points, axis=1)
            return float(d.min())
        return float(np.sqrt(self.weights.min()))

    def circumradius(self):
        return float(np.linalg.norm(self.points, axis=1).max())

    def exterior_radius(self):
        """Radius of the ball in which exterior behaviour is checked (4x the circumradius)."""
        return EXTERIOR_FACTOR * self.circumradius()

    def resampled(self, N):
        return make_boundary(self.shape, N, **self.params)

    def total_measure(self):
        return float(self.weights.sum())


def make_boundary(shape, N=256, **params):
    """Named analytic boundary with N nodes (curves) or N polar nodes (ellipsoid)."""
    if shape == "ellipsoid":
        return _ellipsoid(N, params)
    if N < 8:
        raise ValueError("boundary resolution must be >= 8")
    g, dg = _curve(shape, params)
    t = 2.0 * math.pi * np.arange(N) / N
    pts = g(t)
    d = dg(t)
    speed = np.linalg.norm(d, axis=1)
    normals = np.stack([d[:, 1], -d[:, 0]], -1) / speed[:, None]
    w = speed * 2.0 * math.pi / N
    return ParamBoundary(2, shape, dict(params), t, pts, normals, w, N)


def _ellipsoid(N, params):
    A, B, C = (float(params.get(s, 1.0)) for s in ("a", "b", "c"))
    u, wu = np.polynomial.legendre.leggauss(N)
    M = 2 * N
    ph = 2.0 * math.pi * np.arange(M) / M
    U, P = np.meshgrid(u, ph, indexing="ij")
    s = np.sqrt(1.0 - U ** 2)
    pts = np.stack([A * s * np.cos(P), B * s * np.sin(P), C * U], -1).reshape(-1, 3)
    # d/du and d/dphi of the chart
    du = np.stack([-A * U / s * np.cos(P), -B * U / s * np.sin(P), C * np.ones_like(U)], -1).reshape(-1, 3)
    dp = np.stack([-A * s * np.sin(P), B * s * np.cos(P), np.zeros_like(U)], -1).reshape(-1, 3)
    jac = np.linalg.norm(np.cross(du, dp), axis=1)
    w = jac * np.outer(wu, np.full(M, 2.0 * math.pi / M)).ravel()
    grad = pts / np.array([A * A, B * B, C * C])
    normals = grad / np.linalg.norm(grad, axis=1)[:, None]
    t = np.stack([U.ravel(), P.ravel()], -1)
    return ParamBoundary(3, "ellipsoid", dict(params), t, pts, normals, w, N)


def parse_boundary_spec(text):
    """'ellipse:a=2,b=1,n=256' -> (shape, N, params)."""
    shape, _, rest = text.partition(":")
    params = {}
    N = 256
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, _, val = item.partition("=")
        if not _:
            raise ValueError(f"bad boundary parameter {item!r}")
        if key == "n":
            N = int(val)
        else:
            params[key.strip()] = float(val)
    return shape.strip(), N, params


# -- densities ----------------------------------------------------------------------

@dataclass(frozen=True)
class DensitySamples:
    values: np.ndarray
    func: object = None      # optional callable on (N, n) points, used when resampling

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("density samples must be finite")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, boundary):
        return cls(np.asarray(func(boundary.points), dtype=float), func)

    def on(self, boundary):
        """Samples on another discretization of the same boundary."""
        if boundary.size == self.values.size:
            return self.values
        if self.func is not None:
            return np.asarray(self.func(boundary.points), dtype=float)
        if boundary.n != 2:
            raise ValueError("resampling tabulated densities is supported on curves only")
        return fourier_resample(self.values, boundary.size)


def fourier_resample(values, N):
    """Trigonometric interpolation of periodic samples onto N equispaced nodes."""
    M = values.size
    c = np.fft.rfft(values)
    out = np.zeros(N // 2 + 1, dtype=complex)
    m = min(c.size, out.size)
    out[:m] = c[:m]
    if M % 2 == 0 and m == c.size and N > M:
        out[M // 2] *= 0.5          # split the Nyquist mode symmetrically
    return np.fft.irfft(out, N) * (N / M)


# -- kernels ------------------------------------------------------------------------

@dataclass
class KernelHandle:
    """Kernel z -> K(z) with optional derivatives d^beta K; vectorized over (m, n) arrays."""
    name: str
    n: int
    value: object
    derivative: object = None
    radius: float = math.inf
    meta: dict = field(default_factory=dict)

    def __call__(self, z):
        return self.value(z)

    def d(self, z, beta):
        beta = tuple(int(b) for b in beta)
        if not any(beta):
            return self.value(z)
        if self.derivative is None:
            raise MissingDerivative(f"kernel {self.name} provides no derivatives", field="beta")
        return self.derivative(z, beta)


def table_kernel(table):
    from .assembly import eval_S, eval_S_derivative

    return KernelHandle(
        name="table", n=table.n,
        value=lambda z: eval_S(table, np.atleast_2d(z)),
        derivative=lambda z, beta: eval_S_derivative(table, np.atleast_2d(z), beta),
        radius=table.R_valid, meta={"table": table},
    )


# -- potentials ----------------------------------------------------------------------

def _potential(kernel, b, mu_vals, X, beta, check=True, pairs=400_000):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if check:
        for s in range(0, X.shape[0], max(1, pairs // b.size)):
            dist = np.linalg.norm(X[s:s + pairs // b.size, None, :] - b.points[None], axis=-1).min(axis=1)
            if np.any(dist <= b.h_grid):
                raise TooCloseToBoundary("evaluation point within one node spacing of the boundary")
    wmu = mu_vals * b.weights
    out = np.empty(X.shape[0])
    step = max(1, pairs // b.size)
    for s in range(0, X.shape[0], step):
        diff = X[s:s + step, None, :] - b.points[None, :, :]
        vals = kernel.d(diff.reshape(-1, b.n), beta).reshape(diff.shape[:2])
        out[s:s + step] = vals @ wmu
    return out


def single_layer(kernel, b, mu, x):
    """Nystrom sum of K(x - y_i) mu_i w_i; x may be one point or an (m, n) array."""
    x = np.asarray(x, dtype=float)
    out = _potential(kernel, b, mu.on(b), x, (0,) * b.n)
    return out if x.ndim > 1 else float(out[0])


def derivative_potential(kernel, b, mu, x, beta):
    x = np.asarray(x, dtype=float)
    out = _potential(kernel, b, mu.on(b), x, beta)
    return out if x.ndim > 1 else float(out[0])


def richardson(values, ratio=2.0):
    """Richardson table for samples at steps h/ratio^i; returns (limit, error estimate)."""
    T = [np.asarray(values[0], dtype=float)]
    diag = [T[0]]
    for i in range(1, len(values)):
        row = [np.asarray(values[i], dtype=float)]
        for j in range(1, i + 1):
            f = ratio ** j
            row.append(row[j - 1] + (row[j - 1] - T[j - 1]) / (f - 1.0))
        T = row
        diag.append(row[-1])
    err = np.abs(diag[-1] - diag[-2]) if len(diag) > 1 else np.full_like(diag[-1], np.inf)
    return diag[-1], err


def traces(kernel, b, mu, beta, side, nodes=None, levels=TRACE_LEVELS, tol=None):
    """One-sided limits of d^beta v at boundary nodes by normal-line Richardson extrapolation.

    Level i uses delta_i = 5 h / 2^i and a boundary refined 2^i times, so the
    evaluation point always sits five fine spacings away from the sources.
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    idx = np.arange(b.size) if nodes is None else np.atleast_1d(nodes)
    sign = -1.0 if side == "interior" else 1.0
    x0 = b.points[idx]
    nu = b.normals[idx]
    d0 = 5.0 * b.h_grid
    samples = []
    for i in range(levels):
        delta = d0 / 2 ** i
        if b.n == 2:
            fine = b.resampled(b.resolution * 2 ** i) if i else b
        else:
            fine = b
        X = x0 + sign * delta * nu
        samples.append(_potential(kernel, fine, mu.on(fine), X, beta, check=False))
    limit, err = richardson(samples)
    if tol is not None and np.any(err > 10.0 * tol):
        raise NoConvergence(f"trace extrapolation stalled (max change {float(err.max()):.2e})")
    return limit, err


def trace_extrapolate(kernel, b, mu, node_index, side, beta, tol=None):
    v, e = traces(kernel, b, mu, beta, side, nodes=[node_index], tol=tol)
    return float(v[0]), float(e[0])


def normal_derivative_traces(kernel, b, mu, side, nodes=None):
    """sum_h nu_h d_h v, one-sided."""
    idx = np.arange(b.size) if nodes is None else np.atleast_1d(nodes)
    total = 0.0
    for h in range(b.n):
        beta = tuple(int(i == h) for i in range(b.n))
        v, _ = traces(kernel, b, mu, beta, side, nodes=idx)
        total = total + b.normals[idx, h] * v
    return total


# -- jump report ---------------------------------------------------------------------

@dataclass
class JumpReport:
    beta: tuple
    t: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    observed: np.ndarray
    predicted: np.ndarray
    rel_error: np.ndarray

    @property
    def max_error(self):
        return float(self.rel_error.max())

    @property
    def median_error(self):
        return float(np.median(self.rel_error))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.points.shape[1]
        head = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"nu{i + 1}" for i in range(n)]
        w.writerow(head + ["observed", "predicted", "rel_error"])
        for i in range(self.observed.size):
            t = self.t[i] if np.ndim(self.t[i]) == 0 else self.t[i][0]
            row = [t, *self.points[i], *self.normals[i], self.observed[i], self.predicted[i], self.rel_error[i]]
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def predicted_jump(a, b, mu, beta):
    """-nu^beta mu / P0(nu) at each node."""
    nu = b.normals
    nb = np.prod(nu ** np.asarray(beta)[None, :], axis=1)
    return -nb * mu.on(b) / a.p0(nu)


def jump_report(kernel, a, b, mu, beta, nodes=None):
    """Observed interior-minus-exterior jump of d^beta v against the predicted one."""
    beta = tuple(int(x) for x in beta)
    if sum(beta) != 2 * a.k - 1:
        raise ValueError("jump_report expects |beta| = 2k - 1")
    idx = np.arange(b.size) if nodes is None else np.atleast_1d(nodes)
    vin, _ = traces(kernel, b, mu, beta, "interior", nodes=idx)
    vout, _ = traces(kernel, b, mu, beta, "exterior", nodes=idx)
    obs = vin - vout
    pred = predicted_jump(a, b, mu, beta)[idx]
    denom = np.maximum(np.abs(pred), 0.05 * max(float(np.abs(pred).max()), 1e-300))
    rel = np.abs(obs - pred) / denom
    return JumpReport(beta, b.t[idx], b.points[idx], b.normals[idx], obs, pred, rel)
