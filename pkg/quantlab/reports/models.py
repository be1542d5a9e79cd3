from __future__ import annotations

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator


class CheckResult(BaseModel):
    """Outcome of one acceptance check; serialized as {check, inputs, residual, tolerance, pass}."""

    model_config = ConfigDict(populate_by_name=True)

    check: str
    inputs: dict[str, Any] = Field(default_factory=dict)
    residual: float | None = None
    tolerance: float | None = None
    passed: bool = Field(alias="pass")
    error_code: str | None = None
    message: str | None = None

    @field_validator("residual", "tolerance")
    @classmethod
    def _finite_or_none(cls, value: float | None) -> float | None:
        if value is None or not math.isfinite(value):
            return None
        return float(value)

    @classmethod
    def below(
        cls, check: str, residual: float, tolerance: float, **inputs: Any
    ) -> CheckResult:
        """Pass when residual < tolerance."""
        ok = math.isfinite(residual) and residual < tolerance
        return cls(check=check, inputs=inputs, residual=residual, tolerance=tolerance, passed=ok)

    @classmethod
    def at_most(
        cls,
        check: str,
        value: float | None,
        threshold: float,
        *,
        exact: bool = False,
        **inputs: Any,
    ) -> CheckResult:
        """Slope-style check: pass when value <= threshold, or the series is exact."""
        ok = exact or (value is not None and value <= threshold)
        return cls(
            check=check,
            inputs={**inputs, "exact": exact},
            residual=value,
            tolerance=threshold,
            passed=ok,
        )

    @classmethod
    def failure(cls, check: str, error: Exception, **inputs: Any) -> CheckResult:
        code = getattr(error, "code", "unexpected_error")
        residual = getattr(error, "residual", None)
        return cls(
            check=check,
            inputs=inputs,
            residual=residual,
            passed=False,
            error_code=code,
            message=str(error),
        )

    def dump(self) -> dict[str, Any]:
        data = self.model_dump(mode="json", by_alias=True)
        for key in ("error_code", "message"):
            if data[key] is None:
                del data[key]
        return data


class Table(BaseModel):
    """Named data table written next to the report."""

    name: str
    columns: list[str]
    rows: list[list[Any]]


class Report(BaseModel):
    command: str
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failing(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


class Manifest(BaseModel):
    """Config echo, package versions and timings for one run."""

    command: str
    config: dict[str, Any]
    versions: dict[str, str]
    timings_ms: dict[str, float]
    started_at: str
