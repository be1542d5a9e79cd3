"""Configuration sources: `key = value` file, environment, command-line flags.

Precedence, lowest first: model defaults, config file, environment, flags.
"""
from __future__ import annotations

import os
import re
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from quantlab.runner.types import ConfigError, RunConfig

__all__ = [
    "FILE_KEYS",
    "build_config",
    "get_output_from_env",
    "get_seed_from_env",
    "get_threads_from_env",
    "load_config_file",
    "parse_k_list",
    "parse_label",
    "parse_sigma",
]

FILE_KEYS = frozenset(
    {"n", "k", "k_list", "sigma", "N", "output", "format", "seed", "genus", "labels", "threads"}
)
_TOL_PREFIX = "tol."
_NUMBER = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"


def parse_sigma(text: str) -> tuple[float, float]:
    """Accepts `i`, `2i`, `1+i`, `0.3+0.7i`, `-0.5+1.5i` (and `j` for `i`)."""
    raw = text.strip().replace(" ", "").replace("j", "i")
    m = re.fullmatch(rf"(?:([-+]?{_NUMBER})(?=[-+]))?([-+]?)({_NUMBER})?i", raw)
    if m is None:
        raise ConfigError(f"cannot parse sigma {text!r}")
    real = float(m.group(1)) if m.group(1) is not None else 0.0
    sign = -1.0 if m.group(2) == "-" else 1.0
    imag = sign * (float(m.group(3)) if m.group(3) is not None else 1.0)
    if not imag > 0:
        raise ConfigError(f"sigma must lie in the upper half-plane, got {text!r}")
    return real, imag


def parse_label(text: str) -> tuple[int, ...]:
    """`()`, `1`, `2,1` or `(2,1)` to row lengths."""
    raw = text.strip().strip("()").replace(" ", "")
    if not raw:
        return ()
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError as e:
        raise ConfigError(f"cannot parse label {text!r}") from e


def parse_k_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as e:
        raise ConfigError(f"cannot parse level list {text!r}") from e


def _int(name: str, raw: str) -> int:
    try:
        return int(raw, 10)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e


def _float(name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from e


def load_config_file(path: Path) -> dict[str, Any]:
    """Parse `key = value` lines; `#` starts a comment, `tol.<name>` sets a tolerance."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    values: dict[str, Any] = {}
    tolerances: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = (part.strip() for part in line.partition("="))
        if not sep or not key:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`")
        if key.startswith(_TOL_PREFIX):
            tolerances[key[len(_TOL_PREFIX):]] = _float(key, raw)
        elif key in FILE_KEYS:
            values[key] = _coerce(key, raw)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if tolerances:
        values["tolerances"] = tolerances
    return values


def _coerce(key: str, raw: str) -> Any:
    if key in ("n", "k", "N", "seed", "genus", "threads"):
        return _int(key, raw)
    if key == "k_list":
        return parse_k_list(raw)
    if key == "sigma":
        return parse_sigma(raw)
    if key == "labels":
        return [parse_label(part) for part in raw.split(";")]
    return raw


# ------------------------
# Environment
# ------------------------
def get_seed_from_env(env: Mapping[str, str] | None = None) -> int | None:
    raw = (os.environ if env is None else env).get("QUANTLAB_SEED")
    return None if raw is None else _int("QUANTLAB_SEED", raw)


def get_threads_from_env(env: Mapping[str, str] | None = None) -> int | None:
    raw = (os.environ if env is None else env).get("QUANTLAB_THREADS")
    if raw is None:
        return None
    val = _int("QUANTLAB_THREADS", raw)
    if val < 1:
        raise ConfigError("QUANTLAB_THREADS must be >= 1")
    return val


def get_output_from_env(env: Mapping[str, str] | None = None) -> Path | None:
    raw = (os.environ if env is None else env).get("QUANTLAB_OUTPUT")
    return None if not raw else Path(raw)


def build_config(
    command: str,
    *,
    file_values: Mapping[str, Any] | None = None,
    env: Mapping[str, str] | None = None,
    flags: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Merge the sources into a validated RunConfig; tolerances merge key by key."""
    merged: dict[str, Any] = dict(file_values or {})
    env_values = {
        "seed": get_seed_from_env(env),
        "threads": get_threads_from_env(env),
        "output": get_output_from_env(env),
    }
    merged.update({k: v for k, v in env_values.items() if v is not None})
    tolerances = dict(merged.pop("tolerances", {}))
    for key, value in (flags or {}).items():
        if value is None:
            continue
        if key == "tolerances":
            tolerances.update(value)
        else:
            merged[key] = value
    try:
        return RunConfig(command=command, tolerances=tolerances, **merged)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e
