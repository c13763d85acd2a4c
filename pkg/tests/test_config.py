"""
Tests for run configuration, the summation budget and glued-action documents.
"""

import json
from argparse import Namespace
from fractions import Fraction

import pytest

from nilflow.core.config import (
    DEFAULT_BUDGET, DEFAULT_TOL, GluedActionConfig, RunConfig, load_bundled_demo,
    summation_budget,
)
from nilflow.core.exceptions import ConfigError


def test_budget_default_and_override(monkeypatch):
    monkeypatch.delenv('NILFLOW_BUDGET', raising=False)
    assert summation_budget() == DEFAULT_BUDGET
    monkeypatch.setenv('NILFLOW_BUDGET', '5000')
    assert summation_budget() == 5000


@pytest.mark.parametrize("raw", ['abc', '0', '-3'])
def test_budget_rejects_bad_values(monkeypatch, raw):
    monkeypatch.setenv('NILFLOW_BUDGET', raw)
    with pytest.raises(ConfigError):
        summation_budget()


def test_run_config_defaults():
    config = RunConfig.from_args(Namespace(command='tile-table'))
    assert config.n == 2
    assert config.K == 1
    assert config.tol == DEFAULT_TOL
    assert config.out is None


def test_run_config_parses_rationals():
    config = RunConfig.from_args(Namespace(command='calibrate', n=3, K='100', tol='1e-6',
                                           eps='1/10', out='k.json'))
    assert config.K == 100
    assert config.tol == Fraction(1, 10 ** 6)
    assert config.eps == Fraction(1, 10)
    assert str(config.out) == 'k.json'


@pytest.mark.parametrize("overrides", [
    {'tol': '0'}, {'tol': '-1/2'}, {'K': '1/2'}, {'n': 0}, {'box': -1}, {'K': 'big'},
])
def test_run_config_rejects_invalid(overrides):
    with pytest.raises(ConfigError):
        RunConfig.from_args(Namespace(command='x', **overrides))


def test_glued_config_from_dict():
    config = GluedActionConfig.from_dict({
        'blocks': [
            {'m': 2, 'n': 3, 'K': 'auto', 'images': {'a': 's1', 'b': 's2'}},
            {'m': 1, 'n': 2, 'K': 100, 'images': {'a': 's1'}},
        ],
        'witnesses': [{'word': 'a b A B', 'block': 2}],
    })
    assert [block.m for block in config.blocks] == [1, 2]
    assert config.blocks[0].K == 100
    assert config.blocks[1].K is None
    assert config.witnesses[0].word == 'a b A B'


@pytest.mark.parametrize("document", [
    {},
    {'blocks': [{'n': 2}]},
    {'blocks': [{'m': 0, 'n': 2}]},
    {'blocks': [{'m': 1, 'n': 2}, {'m': 1, 'n': 3}]},
    {'blocks': [{'m': 1, 'n': 2, 'K': '1/2'}]},
    {'blocks': [{'m': 1, 'n': 2, 'images': ['s1']}]},
    {'blocks': [{'m': 1, 'n': 2}], 'witnesses': [{'word': 'a', 'block': 7}]},
])
def test_glued_config_rejects_malformed(document):
    with pytest.raises(ConfigError):
        GluedActionConfig.from_dict(document)


def test_glued_config_load(tmp_path):
    path = tmp_path / 'glue.json'
    path.write_text(json.dumps({'blocks': [{'m': 1, 'n': 2, 'K': 1}]}), encoding='utf-8')
    config = GluedActionConfig.load(path)
    assert config.source == str(path)
    assert len(config.blocks) == 1

    with pytest.raises(ConfigError, match="not found"):
        GluedActionConfig.load(tmp_path / 'missing.json')
    (tmp_path / 'bad.json').write_text('{not json', encoding='utf-8')
    with pytest.raises(ConfigError):
        GluedActionConfig.load(tmp_path / 'bad.json')


def test_bundled_demo():
    demo = load_bundled_demo()
    assert [block.m for block in demo.blocks] == [1, 2, 3]
    assert all(block.K is None for block in demo.blocks)
    assert len(demo.witnesses) == 10
