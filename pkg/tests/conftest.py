from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from quantlab.domain.torus_model import TeichPoint
from quantlab.domain.trigpoly import TrigPoly

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "fixtures" / "golden"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def sigma_i() -> TeichPoint:
    return TeichPoint(0.0, 1.0)


@pytest.fixture(params=[1j, 1 + 1j, 0.3 + 0.7j], ids=["i", "1+i", "0.3+0.7i"])
def sigma(request) -> TeichPoint:
    return TeichPoint.from_complex(request.param)


@pytest.fixture
def f_poly() -> TrigPoly:
    return TrigPoly.cos(1, 0) + TrigPoly.sin(0, 1) * 0.5


@pytest.fixture
def g_poly() -> TrigPoly:
    return TrigPoly.sin(1, 1) + TrigPoly.cos(0, 1) * 0.5


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN
