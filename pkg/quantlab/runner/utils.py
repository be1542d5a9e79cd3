from __future__ import annotations

from importlib import metadata

from quantlab.reports.models import CheckResult
from quantlab.service.suites import SuiteOutcome

_PACKAGES = ("numpy", "scipy", "pydantic")


def package_versions() -> dict[str, str]:
    """Installed versions of the numerical stack, for the run manifest."""
    versions: dict[str, str] = {}
    for name in _PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def _failure(command: str, check: CheckResult) -> dict:
    detail = {"command": command, "check": check.check, "residual": check.residual}
    if check.error_code:
        detail["error_code"] = check.error_code
    if check.inputs:
        detail["inputs"] = check.inputs
    return detail


def summarize(outcomes: list[SuiteOutcome], timings_ms: dict[str, float]) -> tuple[dict, int]:
    """Compute the summary dict and exit code: 0 if every check passed, else 1."""
    total = sum(len(o.checks) for o in outcomes)
    failures = [_failure(o.command, c) for o in outcomes for c in o.checks if not c.passed]
    per_command = {
        o.command: {
            "checks": len(o.checks),
            "failed": sum(1 for c in o.checks if not c.passed),
        }
        for o in outcomes
    }
    summary = {
        "component": "runner",
        "event": "summary",
        "checks": total,
        "passed": total - len(failures),
        "failed": len(failures),
        "per_command": per_command,
        "timings_ms": {name: round(ms, 2) for name, ms in timings_ms.items()},
        "failures": failures,
    }
    exit_code = 0 if not failures and total > 0 else 1
    return summary, exit_code
