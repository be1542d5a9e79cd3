#!/usr/bin/env python3
"""Regenerate fixtures/golden/*.csv from the SU(2) sine closed form.

The closed form is evaluated here directly, not through `s_matrix`, so the goldens
stay an independent oracle for the character-based construction.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from quantlab.reports.writers import write_matrix

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "fixtures" / "golden"

LEVELS = (1, 2)


def su2_s(k: int) -> np.ndarray:
    idx = np.arange(1, k + 2)
    return math.sqrt(2.0 / (k + 2)) * np.sin(np.outer(idx, idx) * math.pi / (k + 2))


def su2_labels(k: int) -> list[str]:
    return ["()"] + [f"({a})" for a in range(1, k + 1)]


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    written = []
    for k in LEVELS:
        S = su2_s(k)
        # unitary and symmetric before it is allowed to become a golden
        if np.max(np.abs(S @ S.T - np.eye(k + 1))) > 1e-12:
            raise SystemExit(f"closed form is not orthogonal at k={k}")
        written.append(write_matrix(GOLDEN / f"smatrix_n2_k{k}", S, su2_labels(k)))
    print("Wrote goldens:")
    for path in written:
        print(" -", path.relative_to(ROOT))


if __name__ == "__main__":
    main()
