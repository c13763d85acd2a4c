"""
Tests for the acceptance suite runner.

Only the cheap checks run here; the full suite is exercised by
``nilflow verify-all``.
"""

import unittest

import numpy as np
import pytest

from nilflow.core.exceptions import DomainError
from nilflow.verification import acceptance
from nilflow.verification.acceptance import CHECKS, CheckResult, Settings, run_acceptance

VERIFY_ALL_SECONDS = 180

CHEAP = ['pl_character', 'lex_equivariance', 'tile_lengths', 'locate_roundtrip']


class TestCheapChecks(unittest.TestCase):
    """Run the fast checks once and inspect the results."""

    @classmethod
    def setUpClass(cls):
        cls.results = run_acceptance(quick=True, seed=0, only=CHEAP)

    def test_only_selects_in_suite_order(self):
        names = [r.name for r in self.results]
        self.assertEqual(names, ['tile_lengths', 'locate_roundtrip', 'lex_equivariance',
                                 'pl_character'])

    def test_all_pass(self):
        for result in self.results:
            self.assertTrue(result.passed, msg=f"{result.name}: {result.detail}")

    def test_timings_recorded(self):
        for result in self.results:
            self.assertGreaterEqual(result.seconds, 0.0)

    def test_details_mention_counts(self):
        by_name = {r.name: r for r in self.results}
        self.assertIn('20 random pairs', by_name['pl_character'].detail)
        self.assertIn('20 tiles match', by_name['tile_lengths'].detail)


def test_check_names_are_unique():
    names = [check.__name__ for check in CHECKS]
    assert len(names) == len(set(names))
    assert all(name.startswith('check_') for name in names)


def test_settings_count_records_choice():
    quick = Settings(quick=True)
    assert quick.count('pairs', 100, 10) == 10
    full = Settings()
    assert full.count('pairs', 100, 10) == 100
    assert quick.counts == {'pairs': 10}
    assert full.counts == {'pairs': 100}


def test_check_result_json():
    result = CheckResult('demo', True, 'fine', seconds=1.23456)
    assert result.to_json() == {'name': 'demo', 'passed': True, 'detail': 'fine'}
    assert result.to_json(with_time=True)['seconds'] == 1.235


def test_error_inside_check_fails_only_that_check(monkeypatch):
    def check_broken(settings, rng):
        raise DomainError("outside the domain")

    def check_fine(settings, rng):
        return CheckResult('fine', True, 'ok')

    monkeypatch.setattr(acceptance, 'CHECKS', [check_broken, check_fine])
    results = run_acceptance(quick=True)

    assert [r.passed for r in results] == [False, True]
    assert results[0].name == 'broken'
    assert results[0].detail == 'DomainError: outside the domain'


def test_each_check_gets_its_own_seeded_generator(monkeypatch):
    draws = []

    def check_first(settings, rng):
        draws.append(int(rng.integers(1 << 30)))
        return CheckResult('first', True, '')

    def check_second(settings, rng):
        draws.append(int(rng.integers(1 << 30)))
        return CheckResult('second', True, '')

    monkeypatch.setattr(acceptance, 'CHECKS', [check_first, check_second])
    run_acceptance(seed=5)
    run_acceptance(seed=5, only=['second'])

    assert draws[1] == draws[2]
    assert draws[0] == int(np.random.default_rng([5, 0]).integers(1 << 30))


def test_progress_lines(monkeypatch, capsys):
    def check_fine(settings, rng):
        return CheckResult('fine', True, 'all good')

    monkeypatch.setattr(acceptance, 'CHECKS', [check_fine])
    run_acceptance(progress=True)
    out = capsys.readouterr().out
    assert out.startswith('[PASS] fine')
    assert out.rstrip().endswith('all good')

    run_acceptance(progress=False)
    assert capsys.readouterr().out == ''


@pytest.mark.slow
@pytest.mark.timeout(VERIFY_ALL_SECONDS)
def test_quick_suite_passes_within_budget():
    results = run_acceptance(quick=True, seed=0)

    assert [r.name for r in results] == [c.__name__[len('check_'):] for c in CHECKS]
    for result in results:
        assert result.passed, f"{result.name}: {result.detail}"
    assert sum(r.seconds for r in results) < VERIFY_ALL_SECONDS
