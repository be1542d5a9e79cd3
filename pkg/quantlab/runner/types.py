from __future__ import annotations

import time
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

COMMANDS: tuple[str, ...] = (
    "smatrix",
    "curve-spectrum",
    "verlinde",
    "gram-check",
    "toeplitz",
    "identities",
    "star-residual",
    "eqcond",
    "transport",
    "loop-defect",
    "endo-flatness",
    "formal-checks",
)


class ConfigError(ValueError):
    """Raised for unusable configuration: bad values, unknown keys, unreadable files."""

    code = "config_error"


class RunConfig(BaseModel):
    """Resolved configuration of one invocation."""

    command: str
    n: int | None = Field(default=None, ge=2)
    k: int | None = Field(default=None, ge=0)
    k_list: list[int] | None = None
    sigma: tuple[float, float] | None = None
    N: int | None = Field(default=None, ge=8)
    tolerances: dict[str, float] = Field(default_factory=dict)
    output: Path = Path("out")
    format: Literal["csv", "json"] = "csv"
    seed: int = Field(default=0, ge=0)
    genus: int | None = Field(default=None, ge=0)
    labels: list[tuple[int, ...]] = Field(default_factory=list)
    threads: int | None = Field(default=None, ge=1)

    @field_validator("command")
    @classmethod
    def _known_command(cls, value: str) -> str:
        if value != "all" and value not in COMMANDS:
            raise ValueError(f"unknown command {value!r}")
        return value

    @field_validator("tolerances")
    @classmethod
    def _positive_tolerances(cls, value: dict[str, float]) -> dict[str, float]:
        bad = sorted(name for name, tol in value.items() if not tol > 0)
        if bad:
            raise ValueError(f"tolerances must be > 0: {', '.join(bad)}")
        return value

    @field_validator("sigma")
    @classmethod
    def _upper_half_plane(cls, value: tuple[float, float] | None) -> tuple[float, float] | None:
        if value is not None and not value[1] > 0:
            raise ValueError(f"sigma must have positive imaginary part, got {value}")
        return value

    @field_validator("k_list")
    @classmethod
    def _levels(cls, value: list[int] | None) -> list[int] | None:
        if value is not None and (not value or any(k < 0 for k in value)):
            raise ValueError("k_list must be a non-empty list of levels >= 0")
        return value

    @model_validator(mode="after")
    def _single_level(self) -> RunConfig:
        if self.k is not None and self.k_list is not None:
            raise ValueError("give either k or k_list, not both")
        return self

    def levels(self, default: list[int]) -> list[int]:
        if self.k_list is not None:
            return list(self.k_list)
        if self.k is not None:
            return [self.k]
        return list(default)

    def tol(self, name: str, default: float) -> float:
        return self.tolerances.get(name, default)

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def now_ms() -> float:
    return time.perf_counter() * 1000.0
