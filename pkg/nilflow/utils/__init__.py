"""Output helpers."""

from nilflow.utils.csv_writer import add_decimal_columns, write_csv_file, write_json_file

__all__ = ["add_decimal_columns", "write_csv_file", "write_json_file"]
