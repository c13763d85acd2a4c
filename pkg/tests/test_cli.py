"""
Tests for the nilflow command-line front-end.

Commands run in-process through ``main(argv)``; output goes to tmp_path or is
captured with capsys.
"""

import json

import pandas as pd
import pytest

from nilflow import __version__
from nilflow.cli.cli import build_parser, main


def run_json(capsys, argv):
    code = main(argv)
    assert code == 0, capsys.readouterr().err
    return json.loads(capsys.readouterr().out)


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert 'tile-table' in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(['--version'])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_parser_lists_every_command():
    parser = build_parser()
    text = parser.format_help()
    for command in ('tile-table', 'act-eval', 'act-deriv', 'calibrate', 'phi-profile',
                    'staircase-eval', 'staircase-verify', 'glue-eval', 'tau', 'distortion',
                    'pl-check', 'verify-all', 'test'):
        assert command in text


def test_tile_table_box(tmp_path):
    out = tmp_path / 'tiles.csv'
    assert main(['tile-table', '--n', '2', '--K', '1', '--box', '2', '--out', str(out)]) == 0

    frame = pd.read_csv(out, dtype={'length': str})
    assert len(frame) == 25
    assert list(frame.columns[:4]) == ['q1', 'q2', 'left_lo', 'left_lo_decimal']
    assert 'length_decimal' in frame.columns
    assert frame['q1'].dtype.kind == 'i' and frame['q2'].dtype.kind == 'i'
    assert set(frame['q1']) == set(range(-2, 3))
    # exact lengths 1/B_K(q); q = (0, 0) gives B = 1
    row = frame[(frame['q1'] == 0) & (frame['q2'] == 0)].iloc[0]
    assert row['length'] == '1/1'


def test_tile_table_is_byte_identical(tmp_path):
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    argv = ['tile-table', '--n', '2', '--K', '3/2', '--box', '1']
    assert main(argv + ['--out', str(first)]) == 0
    assert main(argv + ['--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_act_eval_unit_endpoint(capsys):
    payload = run_json(capsys, ['act-eval', '--n', '2', '--K', '1', '--word', 's1',
                                '--x', '0', '--unit'])
    assert payload['domain'] == 'interval'
    assert payload['value']['lo'] == '0/1'
    assert payload['value']['hi'] == '0/1'


def test_act_eval_lattice_reports_total_mass(capsys):
    payload = run_json(capsys, ['act-eval', '--n', '2', '--K', '1', '--word', 's1 S1',
                                '--x', '1/3', '--tol', '1e-6'])
    assert payload['domain'] == 'lattice'
    assert set(payload['S_K']) == {'lo', 'hi', 'decimal'}


def test_bad_word_is_usage_error(capsys):
    code = main(['act-eval', '--n', '2', '--word', 's1 q', '--x', '1/3'])
    assert code == 2
    assert 'Bad generator letter' in capsys.readouterr().err


def test_bad_rational_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(['act-eval', '--n', '2', '--word', 's1', '--x', 'one-third'])
    assert info.value.code == 2


def test_invalid_K_is_config_error(capsys):
    code = main(['tile-table', '--n', '2', '--K', '1/2'])
    assert code == 2


def test_divergent_dimension_exits_one(capsys):
    code = main(['tile-table', '--n', '4', '--K', '1', '--box', '1'])
    assert code == 1
    assert 'DivergentSeriesError' in capsys.readouterr().err


def test_staircase_eval_integer_is_fixed(capsys):
    payload = run_json(capsys, ['staircase-eval', '--word', 'F H1 f h1', '--x', '3'])
    assert payload['word'] == 'F H1 f h1'
    assert payload['value']['lo'] == '3/1'
    assert payload['value']['hi'] == '3/1'


def test_staircase_eval_strategies_agree(capsys):
    values = []
    for strategy in ('recursive', 'exponent-table'):
        payload = run_json(capsys, ['staircase-eval', '--word', 'h2 f', '--x', '7/3',
                                    '--strategy', strategy])
        values.append(payload['value'])
    assert values[0] == values[1]


def test_pl_check_single_map(capsys):
    payload = run_json(capsys, ['pl-check', '--map', 'bp: 1/2; slopes: 1/2, 3/2'])
    assert len(payload['maps']) == 1
    entry = payload['maps'][0]
    assert entry['character'] == ['1/2', '3/2']
    assert entry['fixed_set'] == ['0/1', '1/1']
    assert payload['commutators'] == []


def test_pl_check_commutator_character(capsys):
    payload = run_json(capsys, ['pl-check', '--map', 'bp: 1/2; slopes: 1/2, 3/2',
                                '--map', 'bp: 1/4; slopes: 2, 2/3'])
    assert len(payload['commutators']) == 1
    assert payload['commutators'][0]['pair'] == [0, 1]
    assert payload['commutators'][0]['character'] == ['1/1', '1/1']


def test_pl_check_maps_file(tmp_path, capsys):
    maps = tmp_path / 'maps.txt'
    maps.write_text("# two maps\nbp: 1/2; slopes: 1/2, 3/2\n\nbp: 1/4; slopes: 2, 2/3\n",
                    encoding='utf-8')
    payload = run_json(capsys, ['pl-check', '--maps', str(maps)])
    assert len(payload['maps']) == 2


def test_missing_file_is_usage_error(tmp_path, capsys):
    code = main(['pl-check', '--maps', str(tmp_path / 'missing.txt')])
    assert code == 2
    assert 'File not found' in capsys.readouterr().err


def test_malformed_map_is_usage_error(capsys):
    assert main(['pl-check', '--map', 'bp 1/2 slopes 1']) == 2


def test_non_homeomorphism_exits_one(capsys):
    assert main(['pl-check', '--map', 'bp: 1/2; slopes: 1/2']) == 1


def test_tau_writes_additivity_table(tmp_path):
    out = tmp_path / 'tau.csv'
    code = main(['tau', '--measure', 'integers:-10:10', '--grid-bits', '3', '--out', str(out)])
    assert code == 0

    words = pd.read_csv(out, dtype=str)
    assert list(words['word']) == ['f', 'h1', 'f h1', 'h2', 'F h2']
    additivity = pd.read_csv(tmp_path / 'tau_additivity.csv', dtype=str)
    assert len(additivity) == 25


def test_tau_bad_measure(capsys):
    assert main(['tau', '--measure', 'gaussian']) == 2


def test_verify_all_only(tmp_path, capsys):
    out = tmp_path / 'report.json'
    code = main(['verify-all', '--quick', '--only', 'pl_character,lex_equivariance',
                 '--out', str(out)])
    assert code == 0
    assert '2/2 checks passed' in capsys.readouterr().out

    report = json.loads(out.read_text(encoding='utf-8'))
    assert report['passed'] is True
    assert report['quick'] is True
    assert [c['name'] for c in report['checks']] == ['lex_equivariance', 'pl_character']


def test_log_file_option(tmp_path, capsys):
    log_file = tmp_path / 'logs' / 'run.log'
    run_json(capsys, ['--log-file', str(log_file), 'staircase-eval', '--word', 'f', '--x', '0'])
    assert log_file.exists()
