"""Strict CSV loading for the benchmark output schemas.

Schema problems are hard errors raised before any rendering starts, naming
the offending column.
"""

from __future__ import annotations

import csv

__all__ = ["SchemaError", "load_csv", "require_columns"]


class SchemaError(ValueError):
    """The input CSV does not match the documented schema."""


def load_csv(path) -> dict[str, list[str]]:
    """Read a CSV into column lists; empty files are schema errors."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    cols = {name: [] for name in header}
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(f"{path}: row with {len(row)} fields, header has {len(header)}")
        for name, value in zip(header, row):
            cols[name].append(value)
    return cols


def require_columns(cols: dict, names, path="input") -> None:
    for name in names:
        if name not in cols:
            raise SchemaError(f"{path}: missing required column '{name}'")
