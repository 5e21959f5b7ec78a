"""fundsol command line: check, build, eval, series, oracle, jump."""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .assembly import (
    build_table,
    eval_S,
    eval_S0,
    load_table,
    save_table,
    table_to_dict,
)
from .contour import contour_radius, raw_coefficients
from .errors import FundsolError, NonElliptic
from .layer import DensitySamples, jump_report, make_boundary, parse_boundary_spec, table_kernel
from .operator import class_index, ellipticity_margin, load_operator

# -- helpers ---------------------------------------------------------------------------

_FUNCS = {name: getattr(np, name) for name in
          ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sinh", "cosh", "tanh", "arctan2")}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide, ast.Pow: np.power}


def compile_expression(text, names):
    """Safe numeric expression in the given variable names (numpy semantics)."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse density expression: {exc.msg}") from None

    def ev(node, env):
        if isinstance(node, ast.Expression):
            return ev(node.body, env)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ValueError(f"unknown name {node.id!r} in density expression")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left, env), ev(node.right, env))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS \
                and not node.keywords:
            return _FUNCS[node.func.id](*(ev(a, env) for a in node.args))
        raise ValueError(f"unsupported construct in density expression: {ast.dump(node)[:40]}")

    ev(tree, {k: 1.0 for k in names})  # validate once

    def f(env):
        return ev(tree, env)

    return f


def parse_grid(text, n):
    axes = [s for s in text.split(",") if s.strip()]
    if len(axes) != n:
        raise ValueError(f"grid needs {n} axes, got {len(axes)}")
    lines = []
    for ax in axes:
        parts = ax.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid axis {ax!r} is not start:stop:count")
        lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
        if cnt < 1:
            raise ValueError("grid counts must be >= 1")
        lines.append(np.linspace(lo, hi, cnt))
    mesh = np.meshgrid(*lines, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def parse_beta(text, n):
    beta = tuple(int(s) for s in text.replace(" ", "").split(","))
    if len(beta) != n or min(beta) < 0:
        raise ValueError(f"beta must list {n} non-negative integers")
    return beta


def _fmt(v):
    return repr(float(v))


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _dump_json(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- commands ----------------------------------------------------------------------------

def cmd_check(args):
    a = load_operator(args.operator)
    margin = ellipticity_margin(a)
    if margin <= 0:
        raise NonElliptic("principal symbol vanishes on the unit sphere", field="operator")
    report = {
        "n": a.n, "k": a.k, "margin": margin,
        "class_index": class_index(a, margin),
        "contour_radius": contour_radius(a, margin),
    }
    if args.format == "csv":
        _write(_rows_csv(["key", "value"], [[k, report[k]] for k in sorted(report)]), args.out)
    else:
        _write(_dump_json(report), args.out)
    return 0


def cmd_build(args):
    a = load_operator(args.operator)
    t = build_table(a, Jmax=args.jmax, quad_order=args.quad_order)
    if args.out in (None, "-"):
        _write(json.dumps(table_to_dict(t), indent=1) + "\n", None)
    else:
        save_table(t, args.out)
    print(json.dumps({"Jmax": t.Jmax, "L": t.L, "R_valid": t.R_valid if math.isfinite(t.R_valid) else "inf"}),
          file=sys.stderr)
    return 0


def cmd_eval(args):
    t = load_table(args.table)
    pts = parse_grid(args.grid, t.n)
    r = np.linalg.norm(pts, axis=1)
    vals = np.full(pts.shape[0], np.nan)
    ok = r > 0
    f = eval_S0 if args.quantity == "S0" else eval_S
    if np.any(ok):
        vals[ok] = f(t, pts[ok])
    names = [f"x{i + 1}" for i in range(t.n)]
    if args.format == "json":
        rows = [{**{nm: float(p[i]) for i, nm in enumerate(names)}, args.quantity: (None if np.isnan(v) else float(v))}
                for p, v in zip(pts, vals)]
        _write(_dump_json({"schema_version": 1, "quantity": args.quantity, "rows": rows}), args.out)
    else:
        _write(_rows_csv(names + [args.quantity], [[_fmt(c) for c in p] + [_fmt(v)] for p, v in zip(pts, vals)]),
               args.out)
    return 0


def cmd_series(args):
    t = load_table(args.table)
    b = [[list(al), v] for al, v in t.b.items()]
    if args.format == "json":
        _write(_dump_json({"schema_version": 1, "n": t.n, "k": t.k, "L": t.L,
                           "f": t.F.tolist(), "b": b}), args.out)
    else:
        rows = [["b", " ".join(map(str, al)), _fmt(v)] for al, v in t.b.items()]
        for j in range(t.F.shape[0]):
            for i in np.nonzero(t.F[j])[0]:
                rows.append(["f", f"{j} {i}", _fmt(t.F[j, i])])
        _write(_rows_csv(["kind", "index", "value"], rows), args.out)
    return 0


def cmd_oracle(args):
    from .oracles import TestFunction, distributional_delta_test, residual_scan

    a = load_operator(args.operator)
    margin = ellipticity_margin(a)
    if margin <= 0:
        raise NonElliptic("principal symbol vanishes on the unit sphere", field="operator")
    rng = np.random.default_rng(args.seed)
    xi = rng.normal(size=(50, a.n))
    xi /= np.linalg.norm(xi, axis=1)[:, None]
    raw = raw_coefficients(a, xi, 2 * a.k).real
    head = float(np.abs(raw[:, : 2 * a.k]).max())
    lead = float(np.abs(raw[:, 2 * a.k] * a.p0(xi) - 1.0).max())
    t = build_table(a, Jmax=args.jmax, quad_order=args.quad_order, radius=1.0)
    K = table_kernel(t)
    R = min(1.0, 0.9 * t.R_valid)
    delta = distributional_delta_test(K, a, TestFunction((0.0,) * a.n, R), grid=128)
    resid = residual_scan(K, a, (0.3 * R, R), count=20, seed=args.seed)
    report = {
        "margin": margin, "max_head_coefficient": head, "leading_coefficient_error": lead,
        "delta_test_error": delta, "residual": resid,
        "parity_residual": float(t.parity_residual.max()),
        "R_valid": t.R_valid if math.isfinite(t.R_valid) else "inf",
        "passed": bool(head < 1e-10 and lead < 1e-8 and delta < 1e-3 and resid < 1e-4),
    }
    _write(_dump_json(report), args.out)
    return 0 if report["passed"] else 1


def _density(args, b):
    text = args.density or "1"
    if text.startswith("samples:"):
        vals = [float(s) for s in text[len("samples:"):].replace(",", " ").split()]
        if len(vals) != b.size:
            raise ValueError(f"density sample count {len(vals)} does not match {b.size} nodes")
        return DensitySamples(np.array(vals))
    names = [f"x{i + 1}" for i in range(b.n)]
    f = compile_expression(text, names + ["t"])

    def func(p):
        env = {nm: p[:, i] for i, nm in enumerate(names)}
        env["t"] = np.arctan2(p[:, 1], p[:, 0])
        return np.broadcast_to(np.asarray(f(env), dtype=float), (p.shape[0],)).copy()

    return DensitySamples.from_function(func, b)


def _boundary(spec):
    if spec.endswith(".json"):
        with open(spec) as fh:
            d = json.load(fh)
        shape = d.pop("shape")
        N = int(d.pop("n", 256))
        return make_boundary(shape, N, **{k: float(v) for k, v in d.items()})
    shape, N, params = parse_boundary_spec(spec)
    return make_boundary(shape, N, **params)


def cmd_jump(args):
    t = load_table(args.table)
    b = _boundary(args.boundary)
    if b.n != t.n:
        raise ValueError("boundary dimension does not match the table")
    mu = _density(args, b)
    beta = parse_beta(args.beta, t.n)
    rep = jump_report(table_kernel(t), t.a, b, mu, beta)
    if args.format == "json":
        _write(_dump_json({
            "schema_version": 1, "beta": list(beta), "max_rel_error": rep.max_error,
            "median_rel_error": rep.median_error,
            "rows": [{"t": float(tt), "observed": float(o), "predicted": float(p), "rel_error": float(e)}
                     for tt, o, p, e in zip(rep.t, rep.observed, rep.predicted, rep.rel_error)],
        }), args.out)
    else:
        _write(rep.to_csv(), args.out)
    print(json.dumps({"max_rel_error": rep.max_error, "median_rel_error": rep.median_error}), file=sys.stderr)
    return 0


# -- entry point ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="fundsol", description="Fundamental solutions of elliptic operators.")
    p.add_argument("--version", action="version", version=f"fundsol {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, operator=False, table=False):
        if operator:
            sp.add_argument("--operator", required=True, help="operator file")
        if table:
            sp.add_argument("--table", required=True, help="table file from 'build'")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="json")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("check", help="ellipticity margin, class index and contour radius")
    common(s, operator=True)
    s.set_defaults(func=cmd_check)
    s = sub.add_parser("build", help="assemble and save a series table")
    common(s, operator=True)
    s.add_argument("--jmax", type=int, default=None)
    s.add_argument("--quad-order", type=int, default=None)
    s.set_defaults(func=cmd_build)
    s = sub.add_parser("eval", help="evaluate S or S0 on a grid")
    common(s, table=True)
    s.add_argument("--grid", required=True, help="start:stop:count per axis, comma separated")
    s.add_argument("--quantity", choices=("S", "S0"), default="S")
    s.set_defaults(func=cmd_eval)
    s = sub.add_parser("series", help="dump f_j coefficients and b_alpha")
    common(s, table=True)
    s.set_defaults(func=cmd_series)
    s = sub.add_parser("oracle", help="run the verification suite on an operator")
    common(s, operator=True)
    s.add_argument("--jmax", type=int, default=None)
    s.add_argument("--quad-order", type=int, default=None)
    s.set_defaults(func=cmd_oracle)
    s = sub.add_parser("jump", help="per-node jump report for a derivative of the single layer")
    common(s, table=True)
    s.add_argument("--boundary", required=True, help="shape spec like ellipse:a=2,b=1,n=256 or a JSON file")
    s.add_argument("--density", default="1", help="expression in x1, x2, t or samples:v1,v2,...")
    s.add_argument("--beta", required=True, help="multi-index, e.g. 1,0")
    s.set_defaults(func=cmd_jump)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "format", None) is None:
        args.format = "json"
    try:
        return args.func(args)
    except NonElliptic as exc:
        _error(exc, getattr(exc, "field", None) or "operator")
        return 2
    except FundsolError as exc:
        _error(exc, getattr(exc, "field", None))
        return 1
    except (ValueError, OSError, KeyError) as exc:
        _error(exc, None)
        return 1


def _error(exc, fld):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "field": fld}, sort_keys=True),
          file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
