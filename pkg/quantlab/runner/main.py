#!/usr/bin/env python3
"""Entry point: resolve the configuration, run the suites, write reports, exit.

Exit codes: 0 when every invoked check passes, 1 when any check fails, 2 on a
configuration or usage error.
"""
from __future__ import annotations

import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from quantlab.logging_conf import get_logger, setup_logging
from quantlab.reports.models import Manifest, Report
from quantlab.reports.writers import write_manifest, write_matrix, write_report, write_table
from quantlab.runner.cli import flags_of, parse_args
from quantlab.runner.config import build_config, load_config_file
from quantlab.runner.types import COMMANDS, ConfigError, RunConfig, now_ms
from quantlab.runner.utils import package_versions, summarize
from quantlab.service.suites import SuiteOutcome, run_suite

UTC = timezone.utc  # datetime.UTC requires Python 3.11

setup_logging()
logger = get_logger("quantlab.runner")


def write_outcome(outcome: SuiteOutcome, config: RunConfig, elapsed_ms: float) -> Path:
    """Write report, tables, matrices and manifest under <output>/<command>/."""
    directory = config.output / outcome.command
    directory.mkdir(parents=True, exist_ok=True)
    write_report(directory, Report(command=outcome.command, checks=outcome.checks))
    for table in outcome.tables:
        write_table(directory, table, fmt=config.format)
    for art in outcome.matrices:
        write_matrix(directory / art.name, art.matrix, art.rows, art.cols, fmt=config.format)
    manifest = Manifest(
        command=outcome.command,
        config=config.echo(),
        versions=package_versions(),
        timings_ms={"total": round(elapsed_ms, 3)},
        started_at=datetime.now(UTC).isoformat(timespec="seconds"),
    )
    write_manifest(directory, manifest)
    return directory


def run(config: RunConfig) -> int:
    if config.threads is not None:
        os.environ["QUANTLAB_THREADS"] = str(config.threads)
    commands = list(COMMANDS) if config.command == "all" else [config.command]
    outcomes: list[SuiteOutcome] = []
    timings: dict[str, float] = {}
    for command in commands:
        started = now_ms()
        outcome = run_suite(command, config)
        timings[command] = now_ms() - started
        directory = write_outcome(outcome, config, timings[command])
        logger.info(
            "runner.suite_written",
            extra={"event": "suite_written", "command": command, "directory": str(directory)},
        )
        outcomes.append(outcome)
    summary, exit_code = summarize(outcomes, timings)
    logger.info("runner.summary", extra=summary)
    print(json.dumps(summary, sort_keys=True, default=str))
    return exit_code


def resolve_config(argv: list[str]) -> RunConfig:
    args = parse_args(argv)
    file_values = load_config_file(args.config) if args.config is not None else None
    return build_config(args.command, file_values=file_values, flags=flags_of(args))


def main(argv: list[str] | None = None) -> None:
    try:
        config = resolve_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as e:
        logger.error("runner.config_error", extra={"event": "config_error", "error": str(e)})
        print(f"quantlab: error: {e}", file=sys.stderr)
        raise SystemExit(2) from e
    raise SystemExit(run(config))


if __name__ == "__main__":
    main()
