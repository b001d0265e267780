from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slitlaw.interval import Interval, format_bound, isum, mpf_to_fraction

fractions = st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6)
positive = st.fractions(min_value=Fraction(1, 10**6), max_value=1000, max_denominator=10**6)


def encloses(iv: Interval, exact: Fraction) -> bool:
    return mpf_to_fraction(iv.lo) <= exact <= mpf_to_fraction(iv.hi)


@given(fractions, fractions)
def test_field_operations_enclose_exact_results(a, b):
    x, y = Interval(a, prec=64), Interval(b, prec=64)
    assert encloses(x + y, a + b)
    assert encloses(x - y, a - b)
    assert encloses(x * y, a * b)
    if b != 0:
        assert encloses(x / y, a / b)


@given(positive)
def test_sqrt_log_exp_enclose_high_precision_values(a):
    x = Interval(a, prec=64)
    with mpmath.workdps(60):
        ref = mpmath.mpf(a.numerator) / a.denominator
        for iv, val in ((x.sqrt(), mpmath.sqrt(ref)), (x.log(), mpmath.log(ref))):
            assert iv.lo <= val <= iv.hi
        e = Interval(min(a, 50), prec=64).exp()
        assert e.lo <= mpmath.exp(mpmath.mpf(min(a, 50).numerator) / min(a, 50).denominator) <= e.hi


def test_one_third_is_enclosed_not_rounded():
    third = Interval(Fraction(1, 3), prec=53)
    assert third.lo < third.hi
    assert encloses(third, Fraction(1, 3))


def test_compare_is_three_valued():
    a, b = Interval(1, 2), Interval(3, 4)
    assert a.compare(b) == -1 and b.compare(a) == 1
    assert a.compare(Interval(Fraction(3, 2))) is None


def test_reversed_endpoints_rejected():
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_isum_matches_fraction_sum():
    terms = [Fraction(1, k * k) for k in range(1, 200)]
    assert encloses(isum([Interval(t, prec=80) for t in terms], prec=80), sum(terms))


def test_format_bound_rounds_outward():
    x = mpmath.mpf(1) / 3
    assert format_bound(x, 5, "down") == "3.3333E-1"
    assert format_bound(x, 5, "up") == "3.3334E-1"
    assert format_bound(-x, 5, "down") == "-3.3334E-1"
