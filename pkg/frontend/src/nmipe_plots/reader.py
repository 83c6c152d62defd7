"""Parser for the nmipe results-CSV contract.

A results file is:

* line 1: ``# {json}`` — header object with ``format`` = ``nmipe-results``,
  ``columns``, the ``scenario`` echo and the ``normalized`` parameters,
* line 2: the column-header row
  ``kind,method,point_index,aux_index,z,t,value_re,value_im,valid,status``,
* data rows with fixed-format floats.

This module deliberately re-implements the contract from its
documentation; it never imports the producing package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

__all__ = ["MalformedCsvError", "ResultRow", "ResultTable", "read_results"]

_COLUMNS = [
    "kind",
    "method",
    "point_index",
    "aux_index",
    "z",
    "t",
    "value_re",
    "value_im",
    "valid",
    "status",
]


class MalformedCsvError(ValueError):
    """Raised with the offending file/line when a results CSV is invalid."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


@dataclass(frozen=True)
class ResultRow:
    kind: str
    method: str
    point_index: int
    aux_index: int
    z: float
    t: float
    value: complex
    valid: bool
    status: str


@dataclass(frozen=True)
class ResultTable:
    header: dict
    rows: list

    def kernel_rows(self, ok_only: bool = True):
        return [
            r
            for r in self.rows
            if r.kind == "kernel" and (r.status == "ok" or not ok_only)
        ]

    def coherence_rows(self, ok_only: bool = True):
        return [
            r
            for r in self.rows
            if r.kind == "coherence" and (r.status == "ok" or not ok_only)
        ]

    def methods(self):
        return sorted({r.method for r in self.kernel_rows()})


def _parse_row(path, line_no, line):
    parts = line.split(",", len(_COLUMNS) - 1)
    if len(parts) != len(_COLUMNS):
        raise MalformedCsvError(
            path, line_no, f"expected {len(_COLUMNS)} fields, found {len(parts)}"
        )
    d = dict(zip(_COLUMNS, parts))
    try:
        return ResultRow(
            kind=d["kind"],
            method=d["method"],
            point_index=int(d["point_index"]),
            aux_index=int(d["aux_index"]),
            z=float(d["z"]),
            t=float(d["t"]),
            value=complex(float(d["value_re"]), float(d["value_im"])),
            valid=d["valid"] == "1",
            status=d["status"],
        )
    except ValueError as exc:
        raise MalformedCsvError(path, line_no, f"bad field value: {exc}") from None


def read_results(path) -> ResultTable:
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise MalformedCsvError(path, 1, "missing '#'-prefixed JSON header line")
    try:
        header = json.loads(lines[0][1:])
    except json.JSONDecodeError as exc:
        raise MalformedCsvError(path, 1, f"header is not valid JSON: {exc.msg}") from None
    if header.get("format") != "nmipe-results":
        raise MalformedCsvError(path, 1, "header 'format' is not 'nmipe-results'")
    if len(lines) < 2 or lines[1].split(",") != _COLUMNS:
        raise MalformedCsvError(path, 2, "unexpected column-header row")
    rows = []
    for line_no, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        rows.append(_parse_row(path, line_no, line))
    return ResultTable(header=header, rows=rows)
