"""Comma-separated output tables.

Layout::

    # key: value          <- zero or more metadata lines (resolved parameters)
    time,p_excited        <- column names
    s,                    <- units
    0,0.97220318473801985 <- numeric rows, 17 significant digits

Labelled tables (``design``) start with ``label`` and ``unit`` columns that
name each row and give its unit; the units row is blank under them.
Numbers are written with ``%.17g`` so that reading a table back gives
bit-identical floats.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

LABEL_COLUMN = "label"
ROW_UNIT_COLUMN = "unit"


class TableFormatError(ValueError):
    pass


@dataclass
class OutputTable:
    columns: list
    units: list
    rows: np.ndarray
    labels: list | None = None
    meta: dict = field(default_factory=dict)
    row_units: list | None = None

    def __post_init__(self):
        self.columns = [str(c) for c in self.columns]
        self.units = [str(u) for u in self.units]
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))
        if len(self.units) != len(self.columns):
            raise TableFormatError("one unit per column is required")
        if self.labels is not None:
            if len(self.labels) != self.rows.shape[0]:
                raise TableFormatError("one label per row is required")
            if self.row_units is None:
                self.row_units = [""] * len(self.labels)
            if len(self.row_units) != len(self.labels):
                raise TableFormatError("one unit per labelled row is required")

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def value(self, label: str, column: str = "value") -> float:
        if self.labels is None:
            raise KeyError("table has no row labels")
        return float(self.rows[self.labels.index(label), self.columns.index(column)])

    def unit_of(self, name: str) -> str:
        if self.labels is not None and name in self.labels:
            return self.row_units[self.labels.index(name)]
        return self.units[self.columns.index(name)]


def format_number(v: float) -> str:
    return "%.17g" % v


def dumps(table: OutputTable) -> str:
    buf = io.StringIO()
    for key, val in table.meta.items():
        if "\n" in str(key) or "\n" in str(val):
            raise TableFormatError("metadata must be single-line")
        buf.write(f"# {key}: {val}\n")
    w = csv.writer(buf, lineterminator="\n")
    lead = [LABEL_COLUMN, ROW_UNIT_COLUMN] if table.labels is not None else []
    w.writerow(lead + table.columns)
    w.writerow([""] * len(lead) + table.units)
    for i, row in enumerate(table.rows):
        cells = [format_number(v) for v in row]
        prefix = [table.labels[i], table.row_units[i]] if table.labels is not None else []
        w.writerow(prefix + cells)
    return buf.getvalue()


def loads(text: str) -> OutputTable:
    lines = text.splitlines()
    meta = {}
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        key, sep, val = lines[start][1:].strip().partition(": ")
        if not sep:
            key, val = key.rstrip(":"), ""
        meta[key] = val
        start += 1
    reader = list(csv.reader(lines[start:]))
    if len(reader) < 2:
        raise TableFormatError("table needs a header row and a units row")
    header, units = reader[0], reader[1]
    if len(units) != len(header):
        raise TableFormatError(f"line {start + 2}: units row has {len(units)} fields, header has {len(header)}")
    labelled = header[:2] == [LABEL_COLUMN, ROW_UNIT_COLUMN]
    lead = 2 if labelled else 0
    ncols = len(header)
    labels = [] if labelled else None
    row_units = [] if labelled else None
    rows = []
    for offset, rec in enumerate(reader[2:]):
        lineno = start + 3 + offset
        if not rec:
            continue
        if len(rec) != ncols:
            raise TableFormatError(f"line {lineno}: row has {len(rec)} fields, expected {ncols}")
        try:
            rows.append([float(c) for c in rec[lead:]])
        except ValueError as exc:
            raise TableFormatError(f"line {lineno}: {exc}") from None
        if labelled:
            labels.append(rec[0])
            row_units.append(rec[1])
    cols, us = header[lead:], units[lead:]
    return OutputTable(cols, us, np.array(rows, dtype=float).reshape(-1, len(cols)), labels, meta, row_units)


def write_table(table: OutputTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps(table))


def read_table(path) -> OutputTable:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
