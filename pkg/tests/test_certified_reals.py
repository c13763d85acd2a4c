"""
Tests for certified real arithmetic.

Every transcendental is checked against a 60-digit mpmath reference and for
the requested width.
"""

from fractions import Fraction

import mpmath
import pytest

from nilflow.core.certified_reals import (
    Enclosure, decimal_string, enc_agm, enc_arctan, enc_arith, enc_coth, enc_exp,
    enc_pi, enc_sqrt, enc_tan_shifted, enc_transcendental, format_fraction,
    quartic_integral, settle, to_fraction,
)
from nilflow.core.exceptions import DomainError, ParseError

TOL = Fraction(1, 10 ** 30)


def encloses(enc, reference):
    with mpmath.workdps(60):
        lo = mpmath.mpf(enc.lo.numerator) / enc.lo.denominator
        hi = mpmath.mpf(enc.hi.numerator) / enc.hi.denominator
        return lo <= reference <= hi


def test_pi_contains_reference_value():
    result = enc_pi(TOL)
    assert result.width <= TOL
    with mpmath.workdps(60):
        assert encloses(result, +mpmath.pi)


def test_machin_formula_agrees_with_pi():
    """16 arctan(1/5) - 4 arctan(1/239) must overlap the direct enclosure of pi."""
    machin = 16 * enc_arctan(Fraction(1, 5), TOL) - 4 * enc_arctan(Fraction(1, 239), TOL)
    assert machin.overlaps(enc_pi(TOL))
    assert machin.width <= 20 * TOL


def test_sqrt_and_domain():
    with mpmath.workdps(60):
        assert encloses(enc_sqrt(2, TOL), mpmath.sqrt(2))
    assert enc_sqrt(Fraction(9, 4), TOL).contains(Fraction(3, 2))
    with pytest.raises(DomainError):
        enc_sqrt(Enclosure(-1, 1), TOL)


def test_sqrt_of_interval_covers_endpoints():
    result = enc_sqrt(Enclosure(1, 4), Fraction(1, 10 ** 12))
    assert result.contains(Enclosure(1, 2))


def test_arctan_is_odd():
    x = Fraction(1, 3)
    assert enc_arctan(-x, TOL) == -enc_arctan(x, TOL)


def test_arctan_reference():
    with mpmath.workdps(60):
        assert encloses(enc_arctan(Fraction(7, 2), TOL), mpmath.atan(mpmath.mpf(7) / 2))


def test_tan_shifted_is_minus_cot():
    with mpmath.workdps(60):
        assert encloses(enc_tan_shifted(1, TOL), -mpmath.cot(1))
        assert encloses(enc_tan_shifted(Fraction(3), TOL), -mpmath.cot(3))


@pytest.mark.parametrize("theta", [0, Fraction(-1, 2), 4, Enclosure(Fraction(1, 2), 4)])
def test_tan_shifted_rejects_outside_open_interval(theta):
    with pytest.raises(DomainError):
        enc_tan_shifted(theta, TOL)


def test_exp_and_coth_reference():
    with mpmath.workdps(60):
        assert encloses(enc_exp(-3, TOL), mpmath.exp(-3))
        assert encloses(enc_exp(Fraction(5, 7), TOL), mpmath.exp(mpmath.mpf(5) / 7))
        assert encloses(enc_coth(1, TOL), mpmath.coth(1))
    with pytest.raises(DomainError):
        enc_coth(0, TOL)


def test_agm_and_quartic_integral():
    with mpmath.workdps(60):
        assert encloses(enc_agm(1, 2, TOL), mpmath.agm(1, 2))
        # the full-line integral of (1 + u^4)^(-1/2) is Gamma(1/4)^2 / (2 sqrt(pi))
        reference = mpmath.gamma(mpmath.mpf(1) / 4) ** 2 / (2 * mpmath.sqrt(mpmath.pi))
        assert encloses(quartic_integral(TOL), reference)
    with pytest.raises(DomainError):
        enc_agm(0, 1, TOL)


LEVELS = [Fraction(1, 10 ** 3), Fraction(1, 10 ** 9), Fraction(1, 10 ** 30)]


@pytest.mark.parametrize("tol", LEVELS)
def test_series_terminate_at_every_tolerance(tol):
    """Vanishing terms round up to exactly one ulp; the stop tests must still fire."""
    with mpmath.workdps(60):
        checks = [
            (enc_pi(tol), +mpmath.pi),
            (enc_exp(1, tol), mpmath.e),
            (enc_arctan(Fraction(1, 2), tol), mpmath.atan(mpmath.mpf(1) / 2)),
            (enc_tan_shifted(Fraction(1, 2), tol), -mpmath.cot(mpmath.mpf(1) / 2)),
            (enc_coth(Fraction(1, 3), tol), mpmath.coth(mpmath.mpf(1) / 3)),
        ]
        for result, reference in checks:
            assert result.width <= tol
            assert encloses(result, reference)


def test_coarse_results_nest_around_fine_ones():
    coarse = enc_pi(Fraction(1, 10 ** 10))
    fine = enc_pi(Fraction(1, 10 ** 20))
    assert coarse.contains(fine)
    assert coarse.width <= Fraction(1, 10 ** 10)


def test_settle_keeps_width_below_tol():
    tol = Fraction(1, 1000)
    raw = Enclosure(Fraction(1, 3), Fraction(1, 3) + tol / 4)
    out = settle(raw, tol)
    assert out.contains(raw)
    assert out.width <= tol


def test_interval_arithmetic():
    a, b = Enclosure(1, 2), Enclosure(-1, 3)
    assert a + b == Enclosure(0, 5)
    assert a - b == Enclosure(-2, 3)
    assert a * b == Enclosure(-2, 6)
    assert a / Enclosure(2, 4) == Enclosure(Fraction(1, 4), 1)
    assert abs(b) == Enclosure(0, 3)
    assert b ** 2 == Enclosure(0, 9)
    assert b ** 3 == Enclosure(-1, 27)
    with pytest.raises(DomainError):
        a / b


def test_enclosure_validation_and_json():
    with pytest.raises(DomainError):
        Enclosure(2, 1)
    enc = Enclosure(Fraction(-1, 3), Fraction(5, 7))
    assert enc.to_json() == {"lo": "-1/3", "hi": "5/7"}
    assert Enclosure.from_json(enc.to_json()) == enc
    with pytest.raises(ParseError):
        Enclosure.from_json({"lo": "1"})


def test_intersect_and_clamp():
    assert Enclosure(0, 2).intersect(Enclosure(1, 3)) == Enclosure(1, 2)
    with pytest.raises(DomainError):
        Enclosure(0, 1).intersect(Enclosure(2, 3))
    assert Enclosure(-1, 5).clamp(0, 1) == Enclosure(0, 1)
    assert Enclosure(3, 4).clamp(0, 1) == Enclosure(1, 1)


def test_to_fraction_forms():
    assert to_fraction("1e-9") == Fraction(1, 10 ** 9)
    assert to_fraction(" -1/7 ") == Fraction(-1, 7)
    assert to_fraction(0.125) == Fraction(1, 8)
    with pytest.raises(ParseError):
        to_fraction("one third")
    with pytest.raises(DomainError):
        to_fraction(float('inf'))
    assert format_fraction(3) == "3/1"
    assert decimal_string(Fraction(1, 8)) == "0.125"


def test_dispatchers():
    assert enc_arith('width', Enclosure(1, 3)) == 2
    assert enc_arith('contains_zero', Enclosure(-1, 1)) is True
    assert enc_arith('max', Enclosure(0, 2), Enclosure(1, 1)) == Enclosure(1, 2)
    with pytest.raises(ValueError):
        enc_arith('pow', 1, 2)
    assert enc_transcendental('pi', None, TOL) == enc_pi(TOL)
    assert enc_transcendental('sqrt', 4, TOL).contains(2)
    with pytest.raises(ValueError):
        enc_transcendental('sin', 1, TOL)
