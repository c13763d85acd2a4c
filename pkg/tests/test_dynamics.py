"""
Tests for translation numbers, the fixed-point search and the distortion probe.
"""

import unittest
from fractions import Fraction

import pandas as pd
import pytest

from nilflow.core.certified_reals import Enclosure
from nilflow.core.exceptions import BudgetExhaustedError, DomainError, ParseError, WindowError
from nilflow.core.dynamics import (
    AtomicMeasure, EvaluableMap, distortion_probe, find_fixed_point, parse_measure,
    tau_report, translation_number,
)
from nilflow.core.nilaction import ActionContext
from nilflow.core.staircase import generator, parse_staircase_word

TOL = Fraction(1, 10 ** 9)


def affine(slope, offset):
    """x -> slope * x + offset as an EvaluableMap."""
    return EvaluableMap(f"{slope}x+{offset}", lambda x, tol: Enclosure.point(slope * x + offset))


class TestMeasures(unittest.TestCase):

    def test_integers(self):
        mu = AtomicMeasure.integers(-3, 3)
        self.assertEqual(len(mu.atoms), 7)
        self.assertEqual(mu.mass(Fraction(0), Fraction(2)), 2)
        self.assertEqual(mu.mass(Fraction(-1, 2), Fraction(1, 2)), 1)
        self.assertTrue(mu.in_window(Enclosure(-3, 3)))
        self.assertFalse(mu.in_window(Enclosure(-3, 4)))

    def test_validation(self):
        with self.assertRaises(DomainError):
            AtomicMeasure(((Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))), (0, 1))
        with self.assertRaises(DomainError):
            AtomicMeasure(((Fraction(0), Fraction(0)),), (0, 1))
        with self.assertRaises(DomainError):
            AtomicMeasure((), (1, 0))

    def test_parse(self):
        self.assertEqual(parse_measure('integers').window, (-20, 20))
        self.assertEqual(parse_measure(' integers:-5:5 '), AtomicMeasure.integers(-5, 5))
        mu = parse_measure('atoms: 1/2=2, 0=1, 1')
        self.assertEqual(mu.atoms, ((0, 1), (Fraction(1, 2), 2), (1, 1)))
        self.assertEqual(mu.window, (0, 1))
        for text in ['integers:a:b', 'integers:1', 'gaussian', 'atoms:x=1']:
            with self.assertRaises(ParseError):
                parse_measure(text)


class TestTranslationNumber(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.mu = AtomicMeasure.integers(-10, 10)

    def tau(self, text, x=0):
        return translation_number(EvaluableMap.of_staircase(parse_staircase_word(text)), self.mu, x, TOL)

    def test_translation_has_tau_minus_one(self):
        for x in (0, Fraction(1, 2), -3, Fraction(37, 7)):
            self.assertEqual(self.tau('f', x), Enclosure.point(-1))
        self.assertEqual(self.tau('F'), Enclosure.point(1))
        self.assertEqual(self.tau('f f f'), Enclosure.point(-3))

    def test_bump_maps_have_tau_zero(self):
        for k in range(0, 4):
            for x in (0, Fraction(1, 2), Fraction(-13, 4)):
                self.assertEqual(self.tau(f"h{k}", x), Enclosure.point(0))

    def test_additive_on_words(self):
        self.assertEqual(self.tau('f h1'), Enclosure.point(-1))
        self.assertEqual(self.tau('F H1 f h1', Fraction(5, 2)), Enclosure.point(0))

    def test_window(self):
        with self.assertRaises(WindowError):
            self.tau('f', 100)
        with self.assertRaises(WindowError):
            self.tau('f', -10)

    def test_interval_action_on_unit_interval(self):
        ac = ActionContext.build(2, 1, TOL)
        ends = AtomicMeasure(((Fraction(0), Fraction(1)), (Fraction(1), Fraction(1))), (Fraction(0), Fraction(1)))
        fmap = EvaluableMap.of_action(ac, 's1')
        self.assertEqual(fmap.name, 's1')
        self.assertEqual(translation_number(fmap, ends, Fraction(1, 3), TOL), Enclosure.point(0))


class TestFixedPoints(unittest.TestCase):

    def test_integer_fixed_point(self):
        self.assertEqual(find_fixed_point(EvaluableMap.of_staircase(generator('h1'))), Enclosure.point(0))
        self.assertEqual(find_fixed_point(affine(2, -3), window=(-5, 5)), Enclosure.point(3))

    def test_translation_has_none(self):
        self.assertIsNone(find_fixed_point(EvaluableMap.of_staircase(generator('f')), window=(-2, 2),
                                           grid_bits=6))

    def test_grid_point(self):
        self.assertEqual(find_fixed_point(affine(2, Fraction(-1, 4)), window=(-1, 1), grid_bits=3),
                         Enclosure.point(Fraction(1, 4)))

    def test_bisection(self):
        tol = Fraction(1, 10 ** 6)
        result = find_fixed_point(affine(2, Fraction(-1, 3)), window=(-1, 1), grid_bits=4, tol=tol)
        self.assertTrue(result.contains(Fraction(1, 3)))
        self.assertLessEqual(result.width, tol)

    def test_budget(self):
        with pytest.MonkeyPatch.context() as mp:
            mp.setenv('NILFLOW_BUDGET', '100')
            with self.assertRaises(BudgetExhaustedError):
                find_fixed_point(EvaluableMap.of_staircase(generator('f')), window=(-20, 20))


def test_tau_report():
    words = [parse_staircase_word(w) for w in ('f', 'h1', 'F h2')]
    report = tau_report(words, AtomicMeasure.integers(-10, 10), grid_bits=3)
    assert isinstance(report.words, pd.DataFrame)
    assert report.words['word'].tolist() == ['f', 'h1', 'F h2']
    assert report.words['tau_lo'].tolist() == ['-1/1', '0/1', '1/1']
    assert report.words['has_fixed_point'].tolist() == [False, True, False]
    assert report.words['consistent'].all()
    assert len(report.additivity) == 9
    assert report.additivity['contains_zero'].all()
    assert report.passed


class TestDistortion(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.ac = ActionContext.build(2, 1, TOL)
        cls.frame = distortion_probe(cls.ac, 1, depth=3, tiles=4)

    def test_shape(self):
        self.assertEqual(len(self.frame), 5 * 4)
        self.assertEqual(list(self.frame.columns),
                         ['tile', 'k', 'depth', 'tile_length', 'image_length', 'lipschitz_log_deriv'])
        self.assertEqual(self.frame['tile'].iloc[0], '(1,0)')
        self.assertAlmostEqual(self.frame['tile_length'].iloc[0], 0.5)
        self.assertAlmostEqual(self.frame['image_length'].iloc[0], 1 / 3)

    def test_endpoint_grid_sees_no_distortion(self):
        self.assertTrue((self.frame[self.frame['depth'] == 0]['lipschitz_log_deriv'] == 0).all())

    def test_nested_grids_increase(self):
        for _, group in self.frame.groupby('k'):
            values = group.sort_values('depth')['lipschitz_log_deriv'].to_numpy()
            self.assertTrue((values[1:] - values[:-1] >= -1e-12).all())
            self.assertGreater(values[-1], 0)

    def test_alpha_forms_agree(self):
        by_word = distortion_probe(self.ac, 's1', depth=2, tiles=1)
        by_index = distortion_probe(self.ac, 1, depth=2, tiles=1)
        pd.testing.assert_frame_equal(by_word, by_index)

    def test_errors(self):
        with self.assertRaises(DomainError):
            distortion_probe(self.ac, 1, depth=-1)
        with self.assertRaises(DomainError):
            distortion_probe(self.ac, 1, depth=2, base=(1, 2))
        with self.assertRaises(BudgetExhaustedError):
            distortion_probe(self.ac, 1, depth=10, tiles=2000)


if __name__ == '__main__':
    unittest.main()
