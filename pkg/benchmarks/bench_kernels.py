"""Compare the compiled and pure-Python series kernels on table-sized inputs.

    python3 benchmarks/bench_kernels.py [--points 200000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from fundsol import _kernels_py, build_table
from fundsol.operator import OperatorCoefficients

try:
    from fundsol import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--points", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    a = OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): 1.3, (1, 1): 0.2, (1, 0): 0.3, (0, 1): -0.2, (0, 0): -0.5})
    t = build_table(a)
    cases = {"S": (0, 0), "d1 S": (1, 0)}
    rng = np.random.default_rng(args.seed)
    r = rng.uniform(0.05, 0.9 * min(t.R_valid, 2.0), args.points)
    phi = rng.uniform(-np.pi, np.pi, args.points)
    print(f"table: Jmax={t.Jmax} L={t.L}; {args.points} points, best of {args.repeat}")
    print(f"{'series':8s} {'J x B':>9s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, beta in cases.items():
        L, m0, P, Q = t._series(beta)
        tp = best_of(lambda: _kernels_py.eval_series_2d(P, Q, m0, r, phi), args.repeat)
        if _kernels is None:
            print(f"{name:8s} {P.shape[0]:>4d}x{P.shape[1]:<4d} {tp:11.4f} {'n/a':>11s}")
            continue
        tc = best_of(lambda: _kernels.eval_series_2d(P, Q, m0, r, phi), args.repeat)
        vp = _kernels_py.eval_series_2d(P, Q, m0, r, phi)
        vc = _kernels.eval_series_2d(P, Q, m0, r, phi)
        diff = float(np.abs(vp - vc).max() / np.abs(vp).max())
        print(f"{name:8s} {P.shape[0]:>4d}x{P.shape[1]:<4d} {tp:11.4f} {tc:11.4f} {tp / tc:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()
