from __future__ import annotations

import json

import numpy as np
import numpy.testing as npt
import pytest

from quantlab.domain.errors import ConsistencyError, ShapeError
from quantlab.reports.models import CheckResult, Manifest, Report, Table
from quantlab.reports.writers import (
    format_float,
    read_matrix_csv,
    read_section_csv,
    write_manifest,
    write_matrix,
    write_report,
    write_section_csv,
    write_table,
)


def test_format_float():
    assert format_float(-0.0) == "0.0"
    assert format_float(0.1) == "0.1"
    assert float(format_float(1 / 3)) == 1 / 3


def test_check_result_serialization():
    ok = CheckResult.below("verlinde.integrality", 1e-12, 1e-8, n=2, k=3)
    assert ok.passed
    data = ok.dump()
    assert data == {
        "check": "verlinde.integrality",
        "inputs": {"n": 2, "k": 3},
        "residual": 1e-12,
        "tolerance": 1e-8,
        "pass": True,
    }


def test_non_finite_residual_fails_and_serializes_as_null():
    bad = CheckResult.below("toeplitz.gap", float("nan"), 1e-8)
    assert not bad.passed
    assert bad.dump()["residual"] is None


def test_slope_check():
    assert CheckResult.at_most("star.order0", -1.02, -0.9).passed
    assert not CheckResult.at_most("star.order0", -0.5, -0.9).passed
    exact = CheckResult.at_most("star.order0", None, -0.9, exact=True)
    assert exact.passed and exact.inputs["exact"] is True


def test_failure_from_error():
    err = ConsistencyError("holonomy is scalar", 0.25)
    check = CheckResult.failure("loop.defect", err, k=4)
    data = check.dump()
    assert data["pass"] is False
    assert data["error_code"] == err.code
    assert data["residual"] == 0.25
    assert "holonomy" in data["message"]


def test_report_helpers():
    report = Report(
        command="toeplitz",
        checks=[
            CheckResult.below("a", 0.0, 1.0),
            CheckResult.below("b", 2.0, 1.0),
        ],
    )
    assert not report.passed
    assert [c.check for c in report.failing] == ["b"]


def test_matrix_csv(tmp_path):
    S = np.array([[1.0, 2.0 - 1.0j], [0.5j, -0.0]])
    path = write_matrix(tmp_path / "s", S, ["()", "(1)"])
    assert path.suffix == ".csv"
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "row,col,re,im"
    assert lines[2] == "(),(1),2.0,-1.0"
    assert lines[4] == "(1),(1),0.0,0.0"
    rows, cols, back = read_matrix_csv(path)
    assert rows == cols == ["()", "(1)"]
    npt.assert_array_equal(back, S)


def test_matrix_json(tmp_path):
    path = write_matrix(tmp_path / "s", np.eye(2), ["a", "b"], fmt="json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload == {"rows": ["a", "b"], "cols": ["a", "b"],
                       "re": [1.0, 0.0, 0.0, 1.0], "im": [0.0, 0.0, 0.0, 0.0]}


def test_matrix_label_mismatch(tmp_path):
    with pytest.raises(ShapeError):
        write_matrix(tmp_path / "s", np.eye(2), ["only"])


def test_table_splits_complex_columns(tmp_path):
    table = Table(name="spectrum", columns=["mu", "value"], rows=[["()", 1 + 2j], ["(1)", 0.5]])
    path = write_table(tmp_path, table)
    assert path.read_text(encoding="utf-8").splitlines() == [
        "mu,value_re,value_im",
        "(),1.0,2.0",
        "(1),0.5,0.0",
    ]


def test_table_json_nulls(tmp_path):
    table = Table(name="gap", columns=["k", "gap"], rows=[[8, float("inf")]])
    payload = json.loads(write_table(tmp_path, table, fmt="json").read_text(encoding="utf-8"))
    assert payload == {"columns": ["k", "gap"], "rows": [[8, None]]}


def test_section_csv(tmp_path):
    values = np.arange(9).reshape(3, 3) * (1 - 1j)
    path = write_section_csv(tmp_path / "section.csv", values)
    npt.assert_array_equal(read_section_csv(path), values)
    with pytest.raises(ShapeError):
        write_section_csv(tmp_path / "bad.csv", np.zeros((2, 3)))


def test_report_and_manifest_files(tmp_path):
    report = Report(command="verlinde", checks=[CheckResult.below("v", 0.0, 1e-8, g=2)])
    payload = json.loads(write_report(tmp_path, report).read_text(encoding="utf-8"))
    assert payload == [
        {"check": "v", "inputs": {"g": 2}, "residual": 0.0, "tolerance": 1e-8, "pass": True}
    ]
    manifest = Manifest(
        command="verlinde",
        config={"seed": 0},
        versions={"numpy": "2.0"},
        timings_ms={"total": 1.5},
        started_at="2026-01-01T00:00:00+00:00",
    )
    data = json.loads(write_manifest(tmp_path, manifest).read_text(encoding="utf-8"))
    assert data["command"] == "verlinde"
    assert data["timings_ms"] == {"total": 1.5}
