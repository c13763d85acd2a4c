"""
CSV and JSON output with fixed formatting.

Numeric columns hold exact 'p/q' strings; ``add_decimal_columns`` appends a
non-authoritative 20-digit decimal rendering next to each of them. Output is
byte-identical for identical input (LF endings, sorted JSON keys).
"""

import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, List, Optional, Union

import pandas as pd

from nilflow.core.certified_reals import decimal_string

DECIMAL_DIGITS = 20


def add_decimal_columns(frame: pd.DataFrame, columns: Iterable[str],
                        digits: int = DECIMAL_DIGITS) -> pd.DataFrame:
    """Copy of frame with '<col>_decimal' after each exact column."""
    out = frame.copy()
    for column in columns:
        position = out.columns.get_loc(column) + 1
        out.insert(position, f"{column}_decimal",
                   [decimal_string(Fraction(v), digits) for v in out[column]])
    return out


def write_csv_file(
    output_path: Union[str, Path, None],
    data: Union[pd.DataFrame, List[List[Any]]],
    headers: Optional[List[str]] = None
) -> None:
    """
    Write a table as CSV: comma delimiter, header row, LF endings, UTF-8.

    Args:
        output_path: Destination file, or None for stdout
        data: DataFrame or list of rows
        headers: Column headers (required for a list of rows)

    Raises:
        ValueError: If data is a list but headers are not provided
    """
    if isinstance(data, pd.DataFrame):
        if output_path is None:
            data.to_csv(sys.stdout, index=False, lineterminator='\n')
            return
        data.to_csv(Path(output_path), index=False, sep=',', encoding='utf-8', lineterminator='\n')
        return

    if headers is None:
        raise ValueError("Headers must be provided when data is a list of rows")

    if output_path is None:
        writer = csv.writer(sys.stdout, delimiter=',', lineterminator='\n')
        writer.writerow(headers)
        writer.writerows(data)
        return
    with open(Path(output_path), 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, delimiter=',', lineterminator='\n')
        writer.writerow(headers)
        writer.writerows(data)


def write_json_file(output_path: Union[str, Path, None], payload: Any) -> None:
    """Indented JSON with sorted keys; Fractions become 'p/q' strings."""
    def default(value):
        if isinstance(value, Fraction):
            return f"{value.numerator}/{value.denominator}"
        raise TypeError(f"Cannot serialize {type(value).__name__}")

    text = json.dumps(payload, indent=2, sort_keys=True, default=default) + '\n'
    if output_path is None:
        sys.stdout.write(text)
        return
    Path(output_path).write_text(text, encoding='utf-8')
