"""
Property-based tests for PL homeomorphisms.

Maps are drawn with random_pl from hypothesis-chosen seeds.
"""

import unittest
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nilflow.core.plmaps import (
    endpoint_character, pl_commutator, pl_compose, pl_fixed_points, pl_inverse, random_pl,
)

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
pieces = st.integers(min_value=1, max_value=6)
points = st.fractions(min_value=0, max_value=1, max_denominator=200)


def draw_map(seed, count):
    return random_pl(np.random.default_rng(seed), count)


class TestPLGroupProperty(unittest.TestCase):

    @given(seeds, pieces)
    @settings(max_examples=100, deadline=None)
    def test_inverse_is_two_sided(self, seed, count):
        f = draw_map(seed, count)
        self.assertTrue(pl_compose(f, pl_inverse(f)).is_identity)
        self.assertTrue(pl_compose(pl_inverse(f), f).is_identity)

    @given(seeds, pieces, seeds, pieces, points)
    @settings(max_examples=100, deadline=None)
    def test_compose_agrees_pointwise(self, s1, c1, s2, c2, x):
        f, g = draw_map(s1, c1), draw_map(s2, c2)
        self.assertEqual(pl_compose(f, g)(x), f(g(x)))

    @given(seeds, pieces, seeds, pieces, seeds, pieces)
    @settings(max_examples=50, deadline=None)
    def test_composition_is_associative(self, s1, c1, s2, c2, s3, c3):
        f, g, h = draw_map(s1, c1), draw_map(s2, c2), draw_map(s3, c3)
        self.assertEqual(pl_compose(f, pl_compose(g, h)), pl_compose(pl_compose(f, g), h))

    @given(seeds, pieces, seeds, pieces)
    @settings(max_examples=100, deadline=None)
    def test_endpoint_character(self, s1, c1, s2, c2):
        f, g = draw_map(s1, c1), draw_map(s2, c2)
        left, right = endpoint_character(pl_compose(f, g))
        self.assertEqual(left, endpoint_character(f)[0] * endpoint_character(g)[0])
        self.assertEqual(right, endpoint_character(f)[1] * endpoint_character(g)[1])
        self.assertEqual(endpoint_character(pl_commutator(f, g)), (Fraction(1), Fraction(1)))


class TestFixedSetProperty(unittest.TestCase):

    @given(seeds, pieces)
    @settings(max_examples=100, deadline=None)
    def test_components_are_fixed_and_disjoint(self, seed, count):
        f = draw_map(seed, count)
        components = pl_fixed_points(f)
        self.assertEqual(components[0].lo, 0)
        self.assertEqual(components[-1].hi, 1)
        for c in components:
            self.assertEqual(f(c.lo), c.lo)
            self.assertEqual(f(c.hi), c.hi)
            self.assertEqual(f((c.lo + c.hi) / 2), (c.lo + c.hi) / 2)
        for a, b in zip(components, components[1:]):
            self.assertLess(a.hi, b.lo)
            # between components the map moves the midpoint
            middle = (a.hi + b.lo) / 2
            self.assertNotEqual(f(middle), middle)


if __name__ == '__main__':
    unittest.main()
