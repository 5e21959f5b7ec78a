import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fundsol.errors import NonElliptic, ParseError
from fundsol.operator import (
    OperatorCoefficients,
    adjoint_symbol,
    apply_operator_fd,
    central_weights,
    class_index,
    ellipticity_margin,
    format_operator_text,
    laplacian,
    multi_indices,
    parse_operator_text,
    require_elliptic,
    symbol_eval,
)


def test_laplacian_margin_is_one():
    for n in (2, 3):
        assert ellipticity_margin(laplacian(n)) == pytest.approx(1.0, abs=1e-10)


def test_biquartic_margin_half():
    a = OperatorCoefficients(2, 2, {(4, 0): 1.0, (0, 4): 1.0})
    assert ellipticity_margin(a) == pytest.approx(0.5, abs=1e-8)


def test_wave_operator_is_not_elliptic():
    a = OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): -1.0})
    assert ellipticity_margin(a) == 0.0
    with pytest.raises(NonElliptic):
        require_elliptic(a)


def test_biharmonic_expansion():
    a = laplacian(2, 2)
    assert a.coeffs == {(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0}
    assert laplacian(3, 2).coeffs[(2, 2, 0)] == 2.0


def test_symbol_and_adjoint():
    a = OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): 1.0, (1, 0): 0.5, (0, 0): -1.0})
    xi = np.array([0.6, 0.8])
    # P(z xi) = z^2 + 0.5 z xi_1 - 1
    assert symbol_eval(a, 2.0, xi) == pytest.approx(4.0 + 0.6 - 1.0)
    b = adjoint_symbol(a)
    assert b.coeffs[(1, 0)] == -0.5 and b.coeffs[(2, 0)] == 1.0


def test_class_index():
    assert class_index(laplacian(2)) == 2
    a = OperatorCoefficients(2, 1, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -3.5})
    assert class_index(a) == 4


def test_multi_indices_count():
    assert len(multi_indices(3, 2)) == 6
    assert all(sum(m) == 4 for m in multi_indices(2, 4))


def test_central_weights_second_derivative():
    offsets, w = central_weights(2, accuracy=2)
    assert list(offsets) == [-1, 0, 1]
    assert np.allclose(w, [1.0, -2.0, 1.0])


def test_fd_on_polynomial():
    a = laplacian(2)
    f = lambda p: p[:, 0] ** 2 * p[:, 1] + p[:, 1] ** 3
    x = np.array([0.3, -0.7])
    assert apply_operator_fd(a, f, x) == pytest.approx(2 * x[1] + 6 * x[1], rel=1e-8)


def test_fd_on_harmonic_log():
    f = lambda p: np.log(np.linalg.norm(p, axis=1))
    assert abs(apply_operator_fd(laplacian(2), f, np.array([1.0, 0.5]))) < 1e-7


def test_parse_round_trip():
    text = "# biharmonic\nn = 2\nk = 2\n4,0 : 1\n2,2 : 2\n0,4 : 1\n"
    a = parse_operator_text(text)
    assert a == laplacian(2, 2)
    assert parse_operator_text(format_operator_text(a)) == a


@pytest.mark.parametrize("text,field", [
    ("k = 1\n2,0: 1\n", "n"),
    ("n = 2\n2,0: 1\n", "k"),
    ("n = 2\nk = 1\n2,0: 1\n2,0: 2\n", "(2, 0)"),
    ("n = 2\nk = 1\n3,0: 1\n", "(3, 0)"),
    ("n = 2\nk = 1\n1,0: 1\n", "coeffs"),
    ("n = 2\nk = x\n", "k"),
])
def test_parse_errors_name_the_field(text, field):
    with pytest.raises(ParseError) as exc:
        parse_operator_text(text)
    assert exc.value.field == field


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(-0.9, 0.9))
def test_margin_of_positive_quadratic_form(p, q, c):
    # P0 = p x^2 + 2 c sqrt(pq) xy + q y^2; minimum is the smallest eigenvalue
    off = c * math.sqrt(p * q)
    a = OperatorCoefficients(2, 1, {(2, 0): p, (1, 1): 2 * off, (0, 2): q})
    lam = np.linalg.eigvalsh([[p, off], [off, q]]).min()
    assert ellipticity_margin(a) == pytest.approx(lam, rel=1e-6)
