from fractions import Fraction

import pytest

from iwasawa_cm.exceptions import PreconditionError
from iwasawa_cm.formalgroup import (
    WeierstrassCurve,
    compose,
    composition_check,
    formal_expansions,
    frobenius_shape,
    group_law_check,
    lemma22_check,
    log_compatibility_check,
    multiplication_series,
    series_inverse,
)
from iwasawa_cm.iwasawa import Series2
from iwasawa_cm.padic import iota_omega


@pytest.fixture(scope="module")
def curve():
    return WeierstrassCurve.gross_q7()


@pytest.fixture(scope="module")
def fs(curve):
    """Formal expansions of the q = 7 curve to degree 12"""
    return formal_expansions(curve, 12)


def test_curve_invariants(curve):
    """Test discriminant and j-invariant of y^2 + xy = x^3 - x^2 - 2x - 1"""
    assert curve.discriminant == -343
    assert curve.c4 == 105
    assert curve.j == -3375
    assert curve.to_dict()["a4"] == "-2"


def test_singular_curve_rejected():
    """Test that a singular equation is refused"""
    with pytest.raises(PreconditionError):
        WeierstrassCurve.from_ints(0, 0, 0, 0, 0)


def test_expansions_need_degree_three(curve):
    """Test the minimum expansion degree"""
    with pytest.raises(PreconditionError):
        formal_expansions(curve, 2)


def test_leading_terms(fs):
    """Test the first terms of w, x, y, omega and log"""
    assert fs.w[3:7] == [1, 1, 0, -1]
    laurent = fs.x_laurent()
    assert [laurent.get(k, 0) for k in (-2, -1, 0, 1, 2)] == [1, -1, 1, 0, 2]
    assert fs.y_laurent()[-3] == -1
    assert fs.omega[:3] == [1, 1, 0]
    assert fs.log[:3] == [0, 1, Fraction(1, 2)]
    assert fs.exp[:2] == [0, 1]


def test_group_law_terms(fs):
    """Test F(t1, t2) = t1 + t2 - a1 t1 t2 - a2 (t1^2 t2 + t1 t2^2) + ..."""
    law = fs.group_law
    assert law[(1, 0)] == 1 and law[(0, 1)] == 1
    assert law[(1, 1)] == -1
    assert law[(2, 1)] == 1 and law[(1, 2)] == 1


def test_group_law_check(fs):
    """Test identity, commutativity, associativity and inverse"""
    report = group_law_check(fs)
    assert report.passed
    assert report.to_dict()["parameters"]["D"] == 12


@pytest.mark.slow
def test_group_law_degree_24(curve):
    """Test associativity to degree 24"""
    assert group_law_check(formal_expansions(curve, 24), trials=2).passed


def test_multiplication_by_integers(fs):
    """Test [1](t) = t and that [2](t) starts 2t - t^2"""
    one = multiplication_series(fs, 1)
    assert list(one.coeffs) == [0, 1] + [0] * 11
    two = multiplication_series(fs, 2)
    assert two.coeffs[1] == 2
    assert two.coeffs[2] == -1
    assert all(c.denominator == 1 for c in two.coeffs)


def test_pi_has_frobenius_shape(fs):
    """Test [pi](t) = t^2 * (series in t^2) mod 2 for the prime above 2"""
    pi_series = multiplication_series(fs, iota_omega(7, 64))
    assert frobenius_shape(pi_series)
    assert not frobenius_shape(multiplication_series(fs, 3))


def test_frobenius_shape_examples():
    """Test the shape predicate on explicit series"""
    assert frobenius_shape(Series2.from_coeffs([0, 2, 1, 4, 3]))
    assert not frobenius_shape(Series2.from_coeffs([0, 1, 1]))
    assert not frobenius_shape(Series2.from_coeffs([0, 2, 2, 0]))
    assert not frobenius_shape(Series2.from_coeffs([1, 0, 1]))


def test_log_compatibility(fs):
    """Test l([lambda](t)) = lambda l(t) for an integer and for pi"""
    assert log_compatibility_check(fs, 3).passed
    assert log_compatibility_check(fs, iota_omega(7, 64)).passed


def test_composition(fs):
    """Test [lambda]([mu](t)) = [lambda mu](t)"""
    assert composition_check(fs, 3, 5).passed
    assert composition_check(fs, iota_omega(7, 64), 3).passed


def test_series_inverse_and_compose():
    """Test inversion and composition of 2-adic series"""
    F = Series2.from_coeffs([1, 2, 3, 4])
    product = F * series_inverse(F)
    assert product.coeffs == (1, 0, 0, 0)
    inner = Series2.from_coeffs([0, 1, 1, 0])
    square = Series2.from_coeffs([0, 0, 1, 0])
    assert compose(square, inner).coeffs == (0, 0, 1, 2)
    with pytest.raises(PreconditionError):
        series_inverse(Series2.from_coeffs([2, 1]))
    with pytest.raises(PreconditionError):
        compose(square, F)


@pytest.mark.slow
def test_lemma22_congruence():
    """Test that D_rho is a unit congruent to 1 mod 2 with integral half-logarithm"""
    report = lemma22_check(7, D=32)
    assert report.passed
    assert report.precision >= 2


def test_lemma22_only_q7():
    """Test that other q are refused"""
    with pytest.raises(PreconditionError):
        lemma22_check(23)
