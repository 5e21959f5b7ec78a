import math

import numpy as np
import pytest

from fundsol import DensitySamples, build_table, make_boundary, single_layer, table_kernel
from fundsol.errors import MissingDerivative, TooCloseToBoundary, UnknownName
from fundsol.layer import (
    derivative_potential,
    fourier_resample,
    jump_report,
    parse_boundary_spec,
    predicted_jump,
    richardson,
    trace_extrapolate,
)
from fundsol.operator import laplacian
from fundsol.oracles import reference_kernel


def test_ellipse_geometry():
    b = make_boundary("ellipse", 512, a=2.0, b=1.0)
    assert b.total_measure() == pytest.approx(9.688448220547675, rel=1e-12)
    assert np.allclose(np.linalg.norm(b.normals, axis=1), 1.0)
    # outward: normal points away from the origin for a convex curve
    assert np.all(np.sum(b.normals * b.points, axis=1) > 0)


def test_ellipsoid_area():
    b = make_boundary("ellipsoid", 24, a=1.0, b=1.0, c=1.0)
    assert b.total_measure() == pytest.approx(4 * math.pi, rel=1e-10)


def test_unknown_shape():
    with pytest.raises(UnknownName):
        make_boundary("triangle", 64)


def test_parse_spec():
    assert parse_boundary_spec("ellipse:a=2,b=1,n=128") == ("ellipse", 128, {"a": 2.0, "b": 1.0})
    with pytest.raises(ValueError):
        parse_boundary_spec("ellipse:a2")


def test_fourier_resample_exact_for_trig():
    t = 2 * math.pi * np.arange(16) / 16
    v = 1 + np.cos(3 * t) - 0.5 * np.sin(2 * t)
    t2 = 2 * math.pi * np.arange(64) / 64
    assert np.allclose(fourier_resample(v, 64), 1 + np.cos(3 * t2) - 0.5 * np.sin(2 * t2), atol=1e-13)


def test_richardson_second_order():
    h = 0.1 / 2 ** np.arange(5)
    vals = [np.array([2.0 + 3 * x + x * x]) for x in h]
    lim, err = richardson(vals)
    assert lim[0] == pytest.approx(2.0, abs=1e-12)


def test_too_close_guard():
    K = reference_kernel("laplace2d")
    b = make_boundary("circle", 64)
    mu = DensitySamples(np.ones(64))
    with pytest.raises(TooCloseToBoundary):
        single_layer(K, b, mu, b.points[3] * (1 + 1e-3))


def test_missing_derivative():
    K = reference_kernel("yukawa2d")
    b = make_boundary("circle", 64)
    with pytest.raises(MissingDerivative):
        derivative_potential(K, b, DensitySamples(np.ones(64)), np.array([0.1, 0.0]), (1, 0))


def test_table_kernel_matches_reference_layer():
    t = build_table(laplacian(2))
    b = make_boundary("ellipse", 128, a=2.0, b=1.0)
    mu = DensitySamples.from_function(lambda p: 1 + p[:, 0], b)
    x = np.array([[0.3, 0.2], [3.0, 1.0]])
    ref = single_layer(reference_kernel("laplace2d"), b, mu, x)
    got = single_layer(table_kernel(t), b, mu, x)
    # fundamental solutions may differ by a constant times the total mass
    assert np.ptp(got - ref) < 1e-10


def test_jump_at_ellipse_node_zero():
    t = build_table(laplacian(2))
    b = make_boundary("ellipse", 256, a=2.0, b=1.0)
    mu = DensitySamples.from_function(lambda p: 1 + p[:, 0], b)
    assert predicted_jump(t.a, b, mu, (1, 0))[0] == pytest.approx(-3.0)
    rep = jump_report(table_kernel(t), t.a, b, mu, (1, 0), nodes=[0, 64])
    assert rep.max_error < 1e-2
    assert rep.to_csv().splitlines()[0] == "t,x1,x2,nu1,nu2,observed,predicted,rel_error"
    with pytest.raises(ValueError):
        jump_report(table_kernel(t), t.a, b, mu, (0, 0))


def test_one_node_trace_inside_circle():
    K = reference_kernel("laplace2d")
    b = make_boundary("circle", 128)
    mu = DensitySamples.from_function(lambda p: np.ones(p.shape[0]), b)
    v, err = trace_extrapolate(K, b, mu, 5, "interior", (0, 0))
    assert abs(v) < 1e-8
