import math
from array import array
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from atomcur import _jetpure
from atomcur.jets import (BACKEND_COMPILED, FLOAT, RATIONAL, Jet, JetSpace,
                          apply_elementary)


def test_gradlex_prefix_property():
    # truncation must be a prefix slice: lower-order indices come first
    sp = JetSpace(3, 4)
    lower = JetSpace(3, 2)
    assert sp.indices[: lower.size] == lower.indices


def test_space_interning():
    assert JetSpace(2, 3) is JetSpace(2, 3)


@given(st.lists(st.fractions(max_denominator=16), min_size=6, max_size=6),
       st.lists(st.fractions(max_denominator=16), min_size=6, max_size=6))
@settings(max_examples=60, deadline=None)
def test_cauchy_product_is_polynomial_product(ac, bc):
    # two variables, order 2: 6 coefficients; multiply as truncated polynomials
    sp = JetSpace(2, 2)
    a = Jet(sp, RATIONAL, list(ac))
    b = Jet(sp, RATIONAL, list(bc))
    c = a * b
    for T in sp.indices:
        want = 0
        for Ta in sp.indices:
            Tb = tuple(x - y for x, y in zip(T, Ta))
            if any(t < 0 for t in Tb):
                continue
            want += ac[sp.index_of[Ta]] * bc[sp.index_of[Tb]]
        assert c.coeff(T) == want


def test_reciprocal_exact():
    sp = JetSpace(1, 5)
    u = Jet(sp, RATIONAL, [Fraction(2), Fraction(1), Fraction(0), Fraction(3),
                           Fraction(0), Fraction(0)])
    one = u * u.reciprocal()
    assert one.coeffs[0] == 1
    assert all(c == 0 for c in one.coeffs[1:])


def test_negative_power():
    sp = JetSpace(1, 4)
    u = Jet.variable(sp, RATIONAL, 0, Fraction(1, 2))
    w = u.power(-2) * u.power(2)
    assert w.coeffs[0] == 1 and all(c == 0 for c in w.coeffs[1:])


def test_derivative_shift():
    sp = JetSpace(2, 3)
    f = Jet.variable(sp, RATIONAL, 0, Fraction(1)) * \
        Jet.variable(sp, RATIONAL, 1, Fraction(2))
    dfx = f.derivative(0)
    assert dfx.value == Fraction(2)  # d(xy)/dx at (1,2)
    assert dfx.partial((0, 1)) == 1


@pytest.mark.parametrize("fn,ref", [
    ("exp", math.exp), ("sin", math.sin), ("cos", math.cos),
    ("sinh", math.sinh), ("cosh", math.cosh), ("tan", math.tan),
])
def test_elementary_series_order4(fn, ref):
    sp = JetSpace(1, 4)
    u = Jet.variable(sp, FLOAT, 0, 0.37)
    out = apply_elementary(fn, u)
    h = 1e-5
    fd = (ref(0.37 + h) - ref(0.37 - h)) / (2 * h)
    assert abs(out.value - ref(0.37)) < 1e-14
    assert abs(out.partial((1,)) - fd) < 1e-8


def test_log_sqrt_domain():
    sp = JetSpace(1, 2)
    u = Jet.variable(sp, FLOAT, 0, 0.81)
    assert abs(apply_elementary("sqrt", u).value - 0.9) < 1e-14
    assert abs(apply_elementary("log", u).value - math.log(0.81)) < 1e-14


def test_backends_agree():
    sp = JetSpace(2, 4)
    a = array("d", [0.1 * i - 0.3 for i in range(sp.size)])
    b = array("d", [0.05 * i * i - 0.7 for i in range(sp.size)])
    out_pure = array("d", bytes(8 * sp.size))
    _jetpure.cauchy_mul_f64(a, b, out_pure, sp.mul_oi, sp.mul_ai, sp.mul_bi)
    aj = Jet(sp, FLOAT, a)
    bj = Jet(sp, FLOAT, b)
    prod = aj * bj  # whichever backend was selected at import
    assert max(abs(x - y) for x, y in zip(prod.coeffs, out_pure)) < 1e-15


def test_backend_flag_is_bool():
    assert BACKEND_COMPILED in (True, False)
