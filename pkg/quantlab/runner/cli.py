from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any

from quantlab.runner.config import parse_k_list, parse_label, parse_sigma
from quantlab.runner.types import COMMANDS, ConfigError

HELP = {
    "smatrix": "S-matrix invariants; writes S as CSV (row, col, re, im) for an explicit --n/--k",
    "curve-spectrum": "curve operator eigenvalues R_{lam,mu} for one --label",
    "verlinde": "Verlinde dimensions and their integrality",
    "gram-check": "theta basis holomorphicity and Gram checks",
    "toeplitz": "closed-form vs quadrature Toeplitz matrices, mode products, abelian gap",
    "identities": "projection identities on random sections (uses --seed)",
    "star-residual": "Toeplitz product expansion slopes and c1 axioms",
    "eqcond": "preservation condition residual on theta sections",
    "transport": "parallel transport: reversal, heat flow, holomorphicity",
    "loop-defect": "holonomy of the square loop up to a scalar",
    "endo-flatness": "decay of the endomorphism derivative of Toeplitz operators",
    "formal-checks": "formal connection, trivialization and induced star product",
    "all": "every suite in sequence",
}


def _sigma(text: str) -> tuple[float, float]:
    try:
        return parse_sigma(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _label(text: str) -> tuple[int, ...]:
    try:
        return parse_label(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _k_list(text: str) -> list[int]:
    try:
        return parse_k_list(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, raw = text.partition("=")
    try:
        if not sep or not name:
            raise ValueError
        return name.strip(), float(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}") from e


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="key = value config file")
    common.add_argument("--n", type=int, default=None, help="rank input of SU(n)")
    common.add_argument("--k", type=int, default=None, help="single level")
    common.add_argument("--k-list", type=_k_list, default=None, dest="k_list")
    common.add_argument("--sigma", type=_sigma, default=None, help="e.g. i, 1+i, 0.3+0.7i")
    common.add_argument("--grid", type=int, default=None, dest="N", help="grid size N")
    common.add_argument(
        "--tol", type=_tolerance, action="append", default=None, dest="tol", metavar="NAME=VALUE"
    )
    common.add_argument("--output", type=Path, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--genus", type=int, default=None)
    common.add_argument("--label", type=_label, action="append", default=None, dest="labels")
    common.add_argument("--threads", type=int, default=None)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantlab", description="Numerical checks for quantization on the torus and SU(n)"
    )
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)
    common = _common()
    for name in (*COMMANDS, "all"):
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    """Parse CLI arguments; usage errors exit with status 2."""
    return build_parser().parse_args(argv)


def flags_of(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values that override the file and environment (None means not given)."""
    keys = ("n", "k", "k_list", "sigma", "N", "output", "format", "seed", "genus", "labels",
            "threads")
    flags = {key: getattr(args, key) for key in keys}
    flags["tolerances"] = dict(args.tol) if args.tol else None
    return flags
