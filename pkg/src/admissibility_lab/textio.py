"""Small helpers for the structured-text (TOML) and CSV files the lab reads and writes."""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def loads_toml(text: str) -> dict:
    return tomllib.loads(text)


def dump_toml(data: dict, path) -> None:
    Path(path).write_text(tomli_w.dumps(data))


def format_number(x) -> str:
    """Round-trippable text for a scalar; booleans and strings pass through."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        return "%.17g" % x
    if hasattr(x, "dtype"):
        return format_number(x.item())
    return str(x)


def write_rows(path, header, rows) -> None:
    """Write a CSV with ``%.17g`` floats so output is byte-stable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_number(v) for v in row])


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
