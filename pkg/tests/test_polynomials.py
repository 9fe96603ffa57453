from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kokotsakis.errors import BothZero
from kokotsakis.polynomials import (
    MAX_DEGREE,
    BivarPoly,
    determinant,
    resultant,
    sylvester_matrix,
    to_fraction_array,
    trim,
)

small_ints = st.integers(-6, 6)
int_poly = st.lists(small_ints, min_size=2, max_size=6).filter(lambda c: c[-1] != 0)


def test_linear_resultant_is_root_difference():
    # res(t - 2, t - 1) = 2 - 1
    assert resultant([-2.0, 1.0], [-1.0, 1.0]) == pytest.approx(1.0)


def test_shared_root_gives_zero():
    assert resultant([-1.0, 0.0, 1.0], [-1.0, 1.0]) == pytest.approx(0.0, abs=1e-15)
    exact = resultant(to_fraction_array([-1, 0, 1]), to_fraction_array([-1, 1]))
    assert exact == 0 and isinstance(exact, Fraction)


def test_zero_polynomials():
    assert resultant([0.0], [1.0, 2.0]) == 0.0
    with pytest.raises(BothZero):
        resultant([0.0, 0.0], [0.0])


def test_sylvester_matrix_layout():
    S = sylvester_matrix(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0]))
    expected = [[3, 2, 1], [5, 4, 0], [0, 5, 4]]
    np.testing.assert_array_equal(S, expected)


def test_trim_drops_top_zeros_only():
    np.testing.assert_array_equal(trim(np.array([0.0, 1.0, 0.0, 0.0])), [0.0, 1.0])
    np.testing.assert_array_equal(trim(np.array([1.0, 1e-20]), rtol=1e-12), [1.0])


@settings(max_examples=60)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_determinant_matches_numpy(n, seed):
    M = np.random.default_rng(seed).normal(size=(n, n))
    assert determinant(M) == pytest.approx(np.linalg.det(M), rel=1e-9, abs=1e-12)


@given(int_poly, int_poly)
def test_exact_and_float_resultants_agree(f, g):
    exact = resultant(to_fraction_array(f), to_fraction_array(g))
    approx = resultant(np.array(f, float), np.array(g, float))
    assert float(exact) == pytest.approx(approx, rel=1e-9, abs=1e-6)


@given(int_poly)
def test_resultant_of_a_polynomial_with_itself_vanishes(g):
    if len(trim(np.array(g))) < 2:
        return
    assert resultant(to_fraction_array(g), to_fraction_array(g)) == 0


@given(int_poly, int_poly)
def test_resultant_symmetry(f, g):
    # res(g, f) = (-1)^(deg f deg g) res(f, g)
    F, G = to_fraction_array(f), to_fraction_array(g)
    sign = (-1) ** ((len(f) - 1) * (len(g) - 1))
    assert resultant(G, F) == sign * resultant(F, G)


@given(
    st.lists(st.lists(small_ints, min_size=3, max_size=3), min_size=3, max_size=3),
    st.lists(st.lists(small_ints, min_size=2, max_size=2), min_size=2, max_size=2),
    st.integers(-3, 3),
    st.integers(-3, 3),
)
def test_bivariate_product_evaluates_pointwise(p, q, x, y):
    P, Q = BivarPoly(np.array(p, float)), BivarPoly(np.array(q, float))
    assert (P * Q)(x, y) == pytest.approx(P(x, y) * Q(x, y))
    assert (P + Q)(x, y) == pytest.approx(P(x, y) + Q(x, y))
    assert (P - Q)(x, y) == pytest.approx(P(x, y) - Q(x, y))


def test_specialization_in_y():
    P = BivarPoly(np.array([[1.0, 2.0], [3.0, 4.0]]))  # 1 + 2y + 3x + 4xy
    np.testing.assert_allclose(P.in_y_at(2.0), [7.0, 10.0])
    assert P.degrees == (1, 1)
    assert BivarPoly(np.zeros((2, 2))).degrees == (-1, -1)


def test_degree_cap():
    with pytest.raises(ValueError):
        BivarPoly(np.ones((MAX_DEGREE + 2, 1)))


def test_exact_arithmetic_stays_exact():
    P = BivarPoly.from_x(to_fraction_array([1, Fraction(1, 3)]))
    Q = P * P
    assert Q.exact
    assert Q(Fraction(3), 0) == 4
