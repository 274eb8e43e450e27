import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcadiff import DomainError
from mcadiff.combinatorics import (
    as_half_integer,
    binomial,
    hyp2f1_terminating,
    jacobi,
    jacobi_hypergeometric,
    pochhammer,
    q_number,
    q_number_direct,
    r_number,
    r_number_direct,
)


# --- binomial / pochhammer -------------------------------------------------


@pytest.mark.parametrize("n,k,expected", [(5, 2, 10), (0, 0, 1), (4, 7, 0), (4, -1, 0), (64, 32, math.comb(64, 32))])
def test_binomial_values(n, k, expected):
    assert binomial(n, k) == expected


def test_binomial_rejects_negative_n():
    with pytest.raises(ValueError):
        binomial(-1, 0)


def test_binomial_symmetry_and_pascal():
    for n in range(65):
        for k in range(n + 1):
            assert binomial(n, k) == binomial(n, n - k) == math.comb(n, k)
            if n and 0 < k < n:
                assert binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k)


@pytest.mark.parametrize("x,n,expected", [(1, 4, 24), (F(1, 2), 1, F(1, 2)), (F(-5, 2), 2, F(15, 4)), (F(7, 3), 0, 1)])
def test_pochhammer_values(x, n, expected):
    assert pochhammer(x, n) == expected


@given(st.fractions(max_denominator=12).filter(lambda v: abs(v) < 20), st.integers(0, 12))
def test_pochhammer_matches_gamma_ratio(x, n):
    expected = mpmath.rf(mpmath.mpf(x.numerator) / x.denominator, n)
    assert pochhammer(x, n) == pytest.approx(float(expected), rel=1e-12, abs=1e-12)


# --- 2F1 -------------------------------------------------------------------


def test_hyp2f1_single_term():
    assert hyp2f1_terminating(0, F(3, 7), F(2, 5), F(9)) == 1


@given(st.fractions(max_denominator=9), st.fractions(min_value=F(1, 3), max_value=7, max_denominator=9), st.fractions(max_denominator=9))
def test_hyp2f1_two_terms(b, c, z):
    assert hyp2f1_terminating(-1, b, c, z) == 1 - b / c * z


def test_hyp2f1_direct_three_term_sum():
    # (-2)_j (-5/2)_j / ((1/2)_j j!) for j = 0, 1, 2
    direct = 1 + F(-2) * F(-5, 2) / F(1, 2) + F(-2 * -1) * F(-5, 2) * F(-3, 2) / (F(1, 2) * F(3, 2) * 2)
    assert hyp2f1_terminating(-2, F(-5, 2), F(1, 2), 1) == direct == 16
    assert direct == F(pochhammer(3, 2)) / pochhammer(F(1, 2), 2)


def test_hyp2f1_chu_vandermonde():
    # 2F1(-n, b; c; 1) = (c - b)_n / (c)_n
    for n in range(12):
        for b in (F(1, 2), F(-3, 2), 4):
            for c in (F(5, 2), 3, F(7, 3)):
                assert hyp2f1_terminating(-n, b, c, 1) == F(pochhammer(c - b, n)) / pochhammer(c, n)


def test_hyp2f1_pole():
    with pytest.raises(DomainError):
        hyp2f1_terminating(-3, 1, -1, F(1, 2))
    # the pole sits beyond the last term: fine
    assert hyp2f1_terminating(-1, 1, -1, F(1, 2)) == F(3, 2)


def test_hyp2f1_float_kind():
    value = hyp2f1_terminating(-5, 2.5, 1.5, 0.3)
    assert isinstance(value, float)
    assert value == pytest.approx(float(mpmath.hyp2f1(-5, 2.5, 1.5, 0.3)), rel=1e-13)


# --- Jacobi ----------------------------------------------------------------


@pytest.mark.parametrize(
    "n,a,b,x,expected",
    [(0, 3, 5, F(11, 7), 1), (1, 0, 0, F(7, 3), F(7, 3)), (1, 2, 0, 3, 7), (2, 0, 0, F(1, 2), F(-1, 8))],
)
def test_jacobi_values(n, a, b, x, expected):
    assert jacobi(n, a, b, x) == expected


def test_jacobi_recurrence_equals_hypergeometric_form():
    xs = [F(-2), F(-1), F(0), F(1), F(2), F(5, 3)]
    for n in range(21):
        for a in range(11):
            for b in range(11):
                for x in xs:
                    assert jacobi(n, a, b, x) == jacobi_hypergeometric(n, a, b, x)


def test_jacobi_contiguous_identity():
    xs = [F(-3, 2), F(-1, 3), F(2, 5), F(7, 4), F(3)]
    for n in range(16):
        for a in range(11):
            for x in xs:
                lhs = F(2 * n + a + 2, 2 * (n + 1)) * (1 + x) * jacobi(n, a, 1, x)
                assert lhs == jacobi(n + 1, a, 0, x) + jacobi(n, a, 0, x)


def test_jacobi_float_against_mpmath():
    for n in (0, 3, 10, 20):
        for a, b in ((0, 0), (2, 1), (5, 7)):
            for x in (-0.9, 0.1, 1.7, 4.0):
                value = jacobi(n, a, b, x)
                assert isinstance(value, float)
                assert value == pytest.approx(float(mpmath.jacobi(n, a, b, x)), rel=1e-11)


def test_jacobi_rejects_negative_parameters():
    with pytest.raises(ValueError):
        jacobi(2, -1, 0, F(1, 2))


# --- Q and R numbers ---------------------------------------------------------


def test_q_examples():
    for n in range(10):
        assert q_number(n, n) == 1
        assert q_number(n, -1) == 0
    assert q_number(2, 1) == q_number_direct(2, 1) == 12


def test_r_examples():
    assert r_number(1, 0) == r_number_direct(1, 0) == 8
    assert r_number(3, -1) == 0
    # brute force settles the n = k = 2 case at 6
    assert r_number_direct(2, 2) == r_number(2, 2) == 6


def test_lemma_q_closed_form_matches_direct_sum():
    for n in range(26):
        for k in range(n + 1):
            assert q_number(n, k) == q_number_direct(n, k)


def test_r_closed_form_matches_direct_sum():
    for n in range(26):
        for k in range(n + 1):
            assert r_number(n, k) == r_number_direct(n, k)


def test_half_integer_relation():
    for n in range(26):
        for k in range(n + 1):
            assert r_number(n, k) == q_number((2 * n + 1, 2), k) == q_number(F(2 * n + 1, 2), k)


def test_half_integer_parsing():
    assert as_half_integer((5, 2)) == F(5, 2)
    assert as_half_integer(3) == 3
    with pytest.raises(TypeError):
        as_half_integer(2.5)
    with pytest.raises(ValueError):
        as_half_integer(F(1, 3))
    with pytest.raises(ValueError):
        as_half_integer((1, 3))


@settings(max_examples=60)
@given(st.integers(0, 40), st.data())
def test_q_number_is_an_integer_identity(n, data):
    k = data.draw(st.integers(0, n))
    value = q_number(n, k)
    assert isinstance(value, int)
    assert value == q_number_direct(n, k)
