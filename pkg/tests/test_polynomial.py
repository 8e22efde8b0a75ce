import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from heavenly.polynomial import Polynomial

coef = st.integers(-5, 5)
terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=6)


def to_sympy(p, xs):
    return sum(c * sp.Mul(*[x**e for x, e in zip(xs, k)]) for k, c in p.terms.items())


@settings(max_examples=50, deadline=None)
@given(terms, terms)
def test_arithmetic_matches_sympy(ta, tb):
    xs = sp.symbols("u v")
    a, b = Polynomial(2, ta), Polynomial(2, tb)
    assert sp.expand(to_sympy(a * b, xs) - to_sympy(a, xs) * to_sympy(b, xs)) == 0
    assert sp.expand(to_sympy(a - b, xs) - to_sympy(a, xs) + to_sympy(b, xs)) == 0
    assert sp.expand(to_sympy(a.diff(0, 2), xs) - sp.diff(to_sympy(a, xs), xs[0], 2)) == 0


def test_zero_terms_dropped_and_equality():
    p = Polynomial(2, {(1, 0): 1, (0, 1): 0})
    assert p.terms == {(1, 0): 1}
    assert p - p == 0
    assert (p - p).is_zero()
    assert Polynomial.constant(2, 3) == 3


def test_evaluation_batched():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    p = x * x * y + 2
    pts = np.array([[1.0, 2.0], [3.0, -1.0]])
    np.testing.assert_allclose(p(pts), [4.0, -7.0])


def test_power_and_degree():
    x = Polynomial.variable(3, 1)
    assert (x**3).degree == 3
    assert x**0 == 1
    with pytest.raises(ValueError):
        x**-1


def test_variable_count_mismatch():
    with pytest.raises(ValueError):
        Polynomial.variable(2, 0) + Polynomial.variable(3, 0)
    with pytest.raises(ValueError):
        Polynomial(2, {(1,): 1})
