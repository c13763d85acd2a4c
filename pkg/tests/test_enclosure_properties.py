"""
Property-based tests for enclosure arithmetic.

Inclusion monotonicity: an operation applied to points drawn from the input
enclosures always lands in the output enclosure.
"""

import unittest
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from nilflow.core.certified_reals import (
    Enclosure, enc_arctan, enc_coth, enc_exp, enc_sqrt, settle,
)

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=1000)
weights = st.fractions(min_value=0, max_value=1, max_denominator=64)


@st.composite
def enclosures(draw):
    a, b = draw(rationals), draw(rationals)
    return Enclosure(min(a, b), max(a, b))


def pick(enc, t):
    return enc.lo + t * (enc.hi - enc.lo)


class TestInclusionProperty(unittest.TestCase):

    @given(enclosures(), enclosures(), weights, weights)
    @settings(max_examples=200, deadline=None)
    def test_ring_operations_contain_pointwise_results(self, a, b, s, t):
        x, y = pick(a, s), pick(b, t)
        self.assertTrue((a + b).contains(x + y))
        self.assertTrue((a - b).contains(x - y))
        self.assertTrue((a * b).contains(x * y))
        self.assertTrue(a.square().contains(x * x))
        self.assertTrue(abs(a).contains(abs(x)))

    @given(enclosures(), enclosures(), weights, weights)
    @settings(max_examples=200, deadline=None)
    def test_division_contains_pointwise_quotient(self, a, b, s, t):
        if b.contains_zero():
            return
        x, y = pick(a, s), pick(b, t)
        self.assertTrue((a / b).contains(x / y))

    @given(enclosures(), st.integers(min_value=1, max_value=40))
    @settings(max_examples=100, deadline=None)
    def test_round_out_only_widens(self, a, bits):
        self.assertTrue(a.round_out(bits).contains(a))

    @given(enclosures(), st.fractions(min_value=Fraction(1, 10 ** 12), max_value=1))
    @settings(max_examples=100, deadline=None)
    def test_settle_contains_raw(self, a, tol):
        raw = Enclosure(a.lo, a.lo + min(a.width, tol / 4))
        out = settle(raw, tol)
        self.assertTrue(out.contains(raw))
        self.assertLessEqual(out.width, tol)


class TestTranscendentalProperty(unittest.TestCase):

    @given(st.fractions(min_value=0, max_value=100, max_denominator=100))
    @settings(max_examples=50, deadline=None)
    def test_sqrt_squares_back(self, x):
        tol = Fraction(1, 10 ** 15)
        r = enc_sqrt(x, tol)
        self.assertTrue(r.square().contains(x))
        self.assertLessEqual(r.width, tol)

    @given(st.fractions(min_value=-5, max_value=5, max_denominator=50),
           st.fractions(min_value=-5, max_value=5, max_denominator=50))
    @settings(max_examples=50, deadline=None)
    def test_exp_is_multiplicative(self, x, y):
        tol = Fraction(1, 10 ** 12)
        self.assertTrue((enc_exp(x, tol) * enc_exp(y, tol)).overlaps(enc_exp(x + y, tol)))

    @given(st.sampled_from([enc_sqrt, enc_arctan, enc_exp, enc_coth]),
           st.fractions(min_value=Fraction(1, 100), max_value=8, max_denominator=200),
           st.sampled_from([Fraction(1, 10 ** 4), Fraction(1, 10 ** 10)]))
    @settings(max_examples=60, deadline=None)
    def test_coarse_tolerance_contains_fine_tolerance(self, fn, x, tol):
        coarse = fn(x, tol)
        fine = fn(x, tol / 100)
        self.assertTrue(coarse.contains(fine))
        self.assertLessEqual(coarse.width, tol)
        self.assertLessEqual(fine.width, tol / 100)


if __name__ == '__main__':
    unittest.main()
