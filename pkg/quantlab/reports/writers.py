"""Deterministic CSV/JSON writers for matrices, tables, sections and reports."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np

from quantlab.domain.errors import ShapeError
from quantlab.reports.models import Manifest, Report, Table

__all__ = [
    "format_float",
    "read_matrix_csv",
    "read_section_csv",
    "write_manifest",
    "write_matrix",
    "write_report",
    "write_section_csv",
    "write_table",
]


def format_float(value: float) -> str:
    """Shortest round-trip repr; -0.0 is written as 0.0 so output stays stable."""
    value = float(value)
    if value == 0.0:
        return "0.0"
    return repr(value)


def _cell(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        return format_float(value) if math.isfinite(value) else ""
    if isinstance(value, (int, np.integer)):
        return int(value)
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_value(v) for k, v in value.items()}
    return value


def _dump_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _csv_rows(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


# ------------------------
# Matrices
# ------------------------


def write_matrix(
    path: Path,
    matrix: np.ndarray,
    row_labels: Sequence[str],
    col_labels: Sequence[str] | None = None,
    *,
    fmt: str = "csv",
) -> Path:
    """Long format CSV (row, col, re, im) or JSON with labels plus flat re/im arrays."""
    matrix = np.asarray(matrix, dtype=complex)
    col_labels = list(row_labels) if col_labels is None else list(col_labels)
    if matrix.shape != (len(row_labels), len(col_labels)):
        raise ShapeError(
            f"matrix shape {matrix.shape} does not match labels "
            f"({len(row_labels)}, {len(col_labels)})"
        )
    if fmt == "json":
        payload = {
            "rows": [str(r) for r in row_labels],
            "cols": [str(c) for c in col_labels],
            "re": _json_value(matrix.real.ravel().tolist()),
            "im": _json_value(matrix.imag.ravel().tolist()),
        }
        return _dump_json(path.with_suffix(".json"), payload)
    rows = [
        (row_labels[i], col_labels[j], matrix[i, j].real, matrix[i, j].imag)
        for i in range(matrix.shape[0])
        for j in range(matrix.shape[1])
    ]
    return _csv_rows(path.with_suffix(".csv"), ("row", "col", "re", "im"), rows)


def read_matrix_csv(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """Inverse of write_matrix for CSV; labels keep first-seen order."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        records = list(csv.DictReader(fh))
    rows: list[str] = []
    cols: list[str] = []
    for rec in records:
        if rec["row"] not in rows:
            rows.append(rec["row"])
        if rec["col"] not in cols:
            cols.append(rec["col"])
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    r_idx = {r: i for i, r in enumerate(rows)}
    c_idx = {c: j for j, c in enumerate(cols)}
    for rec in records:
        out[r_idx[rec["row"]], c_idx[rec["col"]]] = complex(float(rec["re"]), float(rec["im"]))
    return rows, cols, out


# ------------------------
# Tables
# ------------------------


def write_table(directory: Path, table: Table, *, fmt: str = "csv") -> Path:
    """Write one data table; complex cells are split into `<col>_re` / `<col>_im`."""
    columns: list[str] = []
    complex_cols: set[int] = set()
    for j, name in enumerate(table.columns):
        if any(isinstance(row[j], complex) for row in table.rows):
            complex_cols.add(j)
            columns.extend((f"{name}_re", f"{name}_im"))
        else:
            columns.append(name)
    rows: list[list[Any]] = []
    for row in table.rows:
        flat: list[Any] = []
        for j, value in enumerate(row):
            if j in complex_cols:
                z = complex(value)
                flat.extend((z.real, z.imag))
            else:
                flat.append(value)
        rows.append(flat)
    if fmt == "json":
        payload = {"columns": columns, "rows": [_json_value(r) for r in rows]}
        return _dump_json(directory / f"{table.name}.json", payload)
    return _csv_rows(directory / f"{table.name}.csv", columns, rows)


# ------------------------
# Grid sections
# ------------------------


def write_section_csv(path: Path, values: np.ndarray) -> Path:
    values = np.asarray(values, dtype=complex)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ShapeError(f"section grid must be square, got {values.shape}")
    n = values.shape[0]
    rows = [
        (i, j, values[i, j].real, values[i, j].imag) for i in range(n) for j in range(n)
    ]
    return _csv_rows(Path(path), ("i", "j", "re", "im"), rows)


def read_section_csv(path: Path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        records = list(csv.DictReader(fh))
    n = math.isqrt(len(records))
    if n * n != len(records):
        raise ShapeError(f"{path}: {len(records)} rows is not a square grid")
    out = np.zeros((n, n), dtype=complex)
    for rec in records:
        out[int(rec["i"]), int(rec["j"])] = complex(float(rec["re"]), float(rec["im"]))
    return out


# ------------------------
# Reports
# ------------------------


def write_report(directory: Path, report: Report) -> Path:
    payload = [check.dump() for check in report.checks]
    return _dump_json(directory / "report.json", _json_value(payload))


def write_manifest(directory: Path, manifest: Manifest) -> Path:
    return _dump_json(directory / "manifest.json", _json_value(manifest.model_dump(mode="json")))
