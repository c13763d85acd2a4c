"""
Tests for the CSV and JSON writers.
"""

import json
import tempfile
from fractions import Fraction
from pathlib import Path

import pandas as pd
import pytest

from nilflow.utils.csv_writer import add_decimal_columns, write_csv_file, write_json_file


def test_write_csv_with_dataframe():
    """Test writing a DataFrame to CSV with fixed formatting."""
    df = pd.DataFrame({
        'q': ['(0, 0)', '(0, 1)', '(1, 0)'],
        'start': ['0', '1/2', '3/4'],
        'length': ['1/2', '1/4', '1/8'],
    })

    with tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.csv') as f:
        temp_path = Path(f.name)

    try:
        write_csv_file(temp_path, df)

        content = temp_path.read_text(encoding='utf-8')
        lines = content.split('\n')

        assert lines[0] == 'q,start,length'
        assert lines[1] == '"(0, 0)",0,1/2'
        assert lines[2].endswith(',1/2,1/4')
        assert lines[3].endswith(',3/4,1/8')
        assert '\r' not in content
    finally:
        temp_path.unlink(missing_ok=True)


def test_write_csv_with_list_of_rows(tmp_path):
    path = tmp_path / 'rows.csv'
    write_csv_file(path, [['s1', '1/3'], ['S2', '2/3']], headers=['word', 'x'])
    assert path.read_text(encoding='utf-8') == 'word,x\ns1,1/3\nS2,2/3\n'


def test_write_csv_list_requires_headers(tmp_path):
    with pytest.raises(ValueError, match="Headers must be provided"):
        write_csv_file(tmp_path / 'rows.csv', [['a', 'b']])


def test_write_csv_to_stdout(capsys):
    write_csv_file(None, pd.DataFrame({'a': ['1/2'], 'b': ['3']}))
    assert capsys.readouterr().out == 'a,b\n1/2,3\n'


def test_identical_input_gives_identical_bytes(tmp_path):
    df = pd.DataFrame({'x': ['1/3', '2/7'], 'y': ['5', '-1/9']})
    first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
    write_csv_file(first, df)
    write_csv_file(second, df.copy())
    assert first.read_bytes() == second.read_bytes()


def test_add_decimal_columns_places_rendering_after_exact_column():
    df = pd.DataFrame({'value': ['1/4', '-3/2'], 'label': ['a', 'b']})
    out = add_decimal_columns(df, ['value'])

    assert list(out.columns) == ['value', 'value_decimal', 'label']
    assert out['value_decimal'].tolist() == ['0.25', '-1.5']
    # input frame untouched
    assert list(df.columns) == ['value', 'label']


def test_add_decimal_columns_digits():
    df = pd.DataFrame({'third': ['1/3']})
    out = add_decimal_columns(df, ['third'], digits=5)
    assert out['third_decimal'].iloc[0] == '0.33333'


def test_write_json_sorted_and_exact(tmp_path):
    path = tmp_path / 'out.json'
    write_json_file(path, {'b': Fraction(1, 3), 'a': [1, Fraction(4, 2)]})
    text = path.read_text(encoding='utf-8')

    assert text.endswith('\n')
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': [1, '2/1'], 'b': '1/3'}


def test_write_json_rejects_unknown_types(tmp_path):
    with pytest.raises(TypeError):
        write_json_file(tmp_path / 'bad.json', {'x': object()})
