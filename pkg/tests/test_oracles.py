import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fundsol import build_table, table_kernel
from fundsol.errors import SupportExceedsValidity, UnknownName
from fundsol.operator import OperatorCoefficients, apply_operator_fd, laplacian
from fundsol.oracles import (
    TestFunction,
    bessel_k0,
    closed_form_reference,
    distributional_delta_test,
    reference_kernel,
    residual_scan,
)

scipy_special = pytest.importorskip("scipy.special")


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 40.0))
def test_k0_against_scipy(x):
    assert bessel_k0(x) == pytest.approx(float(scipy_special.k0(x)), rel=1e-12, abs=1e-300)


def test_reference_values():
    assert closed_form_reference("laplace3d", np.array([1.0, 0, 0])) == pytest.approx(-1 / (4 * math.pi))
    assert closed_form_reference("laplace2d", np.array([math.e, 0])) == pytest.approx(1 / (2 * math.pi))
    with pytest.raises(UnknownName):
        reference_kernel("maxwell")
    with pytest.raises(ValueError):
        closed_form_reference("laplace2d", np.zeros(2))


@pytest.mark.parametrize("name,a", [
    ("laplace2d", laplacian(2)),
    ("biharmonic2d", laplacian(2, 2)),
    ("yukawa3d", OperatorCoefficients(3, 1, {(2, 0, 0): 1, (0, 2, 0): 1, (0, 0, 2): 1, (0, 0, 0): -1})),
    ("anisotropic2d", OperatorCoefficients(2, 1, {(2, 0): 4.0, (0, 2): 1.0})),
])
def test_references_solve_homogeneous_equation(name, a):
    K = reference_kernel(name, A=[[4.0, 0.0], [0.0, 1.0]] if name == "anisotropic2d" else None)
    assert residual_scan(K, a, (0.5, 1.5), count=5) < 1e-6


def test_yukawa2d_residual():
    a = OperatorCoefficients(2, 1, {(2, 0): 1, (0, 2): 1, (0, 0): -1})
    x = np.array([0.6, 0.3])
    assert abs(apply_operator_fd(a, reference_kernel("yukawa2d"), x)) < 1e-7


def test_bump_and_adjoint():
    phi = TestFunction((0.0, 0.0), 1.0)
    assert phi(np.zeros((1, 2)))[0] == pytest.approx(math.exp(-1))
    assert phi(np.array([[1.0, 0.0]]))[0] == 0.0
    # symbolic L phi agrees with finite differences
    a = OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): 1.0, (1, 0): 0.7})
    y = np.array([0.2, -0.3])
    assert phi.apply(a, y[None, :])[0] == pytest.approx(apply_operator_fd(a, phi, y), rel=1e-6)


@pytest.mark.parametrize("name,a", [("laplace2d", laplacian(2)), ("laplace3d", laplacian(3))])
def test_delta_test_on_references(name, a):
    err = distributional_delta_test(reference_kernel(name), a, TestFunction((0.0,) * a.n, 1.0))
    assert err < 1e-4


def test_delta_support_guard():
    t = build_table(OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0}))
    with pytest.raises(SupportExceedsValidity):
        distributional_delta_test(table_kernel(t), t.a, TestFunction((0.0, 0.0), 2 * t.R_valid))
    with pytest.raises(ValueError):
        distributional_delta_test(table_kernel(t), t.a, TestFunction((0.0, 0.0), 1.0), grid=16)
