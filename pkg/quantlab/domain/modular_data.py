"""SU(n) level-k labels, Weyl characters at Cartan points, the S-matrix and Verlinde sums.

Characters are evaluated as ratios of alternants at the unit-modulus eigenvalues of
exp(-2*pi*i*(mu + rho)/(k + n)); when that Vandermonde system is badly conditioned the
column falls back to the Jacobi-Trudi determinant in complete symmetric polynomials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from quantlab.domain.errors import ConsistencyError, ParameterDomainError, SingularityError
from quantlab.logging_conf import get_logger
from quantlab.parallel import ordered_map

__all__ = [
    "Label",
    "CartanPoint",
    "ModularData",
    "VerlindeResult",
    "build_label_set",
    "dual",
    "weyl_dimension",
    "cartan_point",
    "schur_alternant",
    "schur_jacobi_trudi",
    "char_ratio",
    "quantum_dimension",
    "s_matrix",
    "dual_permutation",
    "curve_spectrum",
    "verlinde_dim",
]

logger = get_logger("quantlab.modular")

S_TOL = 1e-10
ALTERNANT_COND_MAX = 1e8
DENOMINATOR_FLOOR = 1e-13
INTEGRALITY_TOL = 1e-6


# ------------------------
# Labels
# ------------------------
@dataclass(frozen=True)
class Label:
    """Young diagram given by its row lengths; trailing zero rows are dropped."""

    rows: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rows = tuple(int(r) for r in self.rows)
        if any(r < 0 for r in rows):
            raise ParameterDomainError(f"negative row length in {rows}")
        if any(a < b for a, b in zip(rows, rows[1:], strict=False)):
            raise ParameterDomainError(f"rows must be non-increasing: {rows}")
        while rows and rows[-1] == 0:
            rows = rows[:-1]
        object.__setattr__(self, "rows", rows)

    @property
    def size(self) -> int:
        return sum(self.rows)

    def padded(self, length: int) -> tuple[int, ...]:
        return self.rows + (0,) * (length - len(self.rows))

    def is_trivial(self) -> bool:
        return not self.rows

    def __str__(self) -> str:
        return "(" + ",".join(str(r) for r in self.rows) + ")"


TRIVIAL = Label()


@dataclass(frozen=True)
class CartanPoint:
    """Eigenphases of a diagonal SU(n) element; they sum to zero."""

    angles: tuple[float, ...]

    def __post_init__(self) -> None:
        if abs(math.fsum(self.angles)) > 1e-12:
            raise ParameterDomainError("Cartan angles must sum to 0")

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.angles))


def _check_rank_level(n: int, k: int) -> None:
    if n < 2:
        raise ParameterDomainError(f"rank input n must be >= 2, got {n}")
    if k < 0:
        raise ParameterDomainError(f"level k must be >= 0, got {k}")


def _partitions(max_rows: int, max_part: int) -> list[tuple[int, ...]]:
    if max_rows == 0:
        return [()]
    out: list[tuple[int, ...]] = []
    for first in range(max_part, -1, -1):
        if first == 0:
            out.append(())
            continue
        for rest in _partitions(max_rows - 1, first):
            out.append((first,) + rest)
    return out


def _order_key(label: Label, n: int) -> tuple:
    # Graded by box count; inside a grade, lexicographically descending.
    return (label.size, tuple(-r for r in label.padded(n - 1)))


def build_label_set(n: int, k: int) -> list[Label]:
    """All diagrams with at most n-1 rows and first row at most k, trivial first."""
    _check_rank_level(n, k)
    labels = [Label(p) for p in _partitions(n - 1, k)]
    return sorted(labels, key=lambda lab: _order_key(lab, n))


def _require_member(label: Label, n: int, k: int) -> None:
    if len(label.rows) > n - 1 or (label.rows and label.rows[0] > k):
        raise ParameterDomainError(f"label {label} is not in the level-{k} SU({n}) label set")


def dual(label: Label, n: int, k: int) -> Label:
    """Label of the dual representation (complement of the diagram inside its first row)."""
    _check_rank_level(n, k)
    _require_member(label, n, k)
    rows = label.padded(n)
    return Label(tuple(rows[0] - rows[n - 1 - i] for i in range(n)))


def weyl_dimension(label: Label, n: int) -> int:
    """Dimension of the irreducible SU(n) representation with highest weight `label`."""
    rows = label.padded(n)
    num = 1
    den = 1
    for i in range(n):
        for j in range(i + 1, n):
            num *= rows[i] - rows[j] + j - i
            den *= j - i
    return num // den


# ------------------------
# Characters
# ------------------------
def cartan_point(mu: Label, n: int, k: int) -> CartanPoint:
    """Eigenphases of exp(-2*pi*i*(mu + rho)/(k + n)) in the traceless normalization."""
    shifted = np.array([m + n - 1 - j for j, m in enumerate(mu.padded(n))], dtype=float)
    shifted -= shifted.mean()
    angles = -2.0 * np.pi * shifted / (k + n)
    angles -= angles.mean()
    return CartanPoint(tuple(float(a) for a in angles))


def _vandermonde(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    return x[:, None] ** np.arange(n - 1, -1, -1)[None, :]


def schur_alternant(label: Label, x: np.ndarray) -> complex:
    """Schur polynomial as det(x_i^(lambda_j + n - j)) / det(x_i^(n - j))."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    exps = np.array(label.padded(n)) + np.arange(n - 1, -1, -1)
    den = np.linalg.det(_vandermonde(x))
    if abs(den) < DENOMINATOR_FLOOR:
        raise SingularityError(f"alternant denominator {abs(den):.3e} below floor")
    return complex(np.linalg.det(x[:, None] ** exps[None, :]) / den)


def _complete_symmetric(x: np.ndarray, top: int) -> np.ndarray:
    # Newton: m h_m = sum_{r=1..m} p_r h_{m-r}
    p = np.array([np.sum(x**r) for r in range(top + 1)])
    h = np.zeros(top + 1, dtype=complex)
    h[0] = 1.0
    for m in range(1, top + 1):
        h[m] = np.dot(p[1 : m + 1], h[m - 1 :: -1][:m]) / m
    return h


def schur_jacobi_trudi(label: Label, x: np.ndarray) -> complex:
    """Schur polynomial as det(h_(lambda_i - i + j))."""
    x = np.asarray(x, dtype=complex)
    rows = label.rows
    if not rows:
        return 1.0 + 0.0j
    ell = len(rows)
    h = _complete_symmetric(x, rows[0] + ell)
    mat = np.zeros((ell, ell), dtype=complex)
    for i in range(ell):
        for j in range(ell):
            idx = rows[i] - i + j
            mat[i, j] = h[idx] if 0 <= idx < h.shape[0] else 0.0
    return complex(np.linalg.det(mat))


def _ratio_column(labels: list[Label], mu: Label, n: int, k: int) -> np.ndarray:
    x = cartan_point(mu, n, k).eigenvalues
    vander = _vandermonde(x)
    den = np.linalg.det(vander)
    if abs(den) < DENOMINATOR_FLOOR:
        raise SingularityError(f"alternant denominator {abs(den):.3e} at mu={mu}")
    if np.linalg.cond(vander) > ALTERNANT_COND_MAX:
        logger.info(
            "character.jacobi_trudi",
            extra={"event": "character_fallback", "n": n, "k": k, "mu": str(mu)},
        )
        return np.array([schur_jacobi_trudi(lab, x) for lab in labels])
    exps = np.array([lab.padded(n) for lab in labels]) + np.arange(n - 1, -1, -1)[None, :]
    stacked = x[None, :, None] ** exps[:, None, :]
    return np.linalg.det(stacked) / den


def char_ratio(lam: Label, mu: Label, n: int, k: int) -> complex:
    """S_{lam,mu} / S_{0,mu}: the character of `lam` at the Cartan point of `mu`."""
    _check_rank_level(n, k)
    _require_member(lam, n, k)
    _require_member(mu, n, k)
    return complex(_ratio_column([lam], mu, n, k)[0])


def quantum_dimension(lam: Label, n: int, k: int) -> float:
    return char_ratio(lam, TRIVIAL, n, k).real


# ------------------------
# S-matrix
# ------------------------
@dataclass(frozen=True, eq=False)
class ModularData:
    n: int
    k: int
    labels: tuple[Label, ...]
    S: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)

    @cached_property
    def index(self) -> dict[Label, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def residuals(self) -> dict[str, float]:
        size = len(self.labels)
        perm = dual_permutation(self)
        return {
            "unitarity": float(np.max(np.abs(self.S @ self.S.conj().T - np.eye(size)))),
            "symmetry": float(np.max(np.abs(self.S - self.S.T))),
            "s_squared_dual": float(np.max(np.abs(self.S @ self.S - perm))),
            "first_row_positive": float(max(0.0, -np.min(self.S[0].real))),
        }


def dual_permutation(data: ModularData) -> np.ndarray:
    """Permutation matrix of the dual involution on the label set."""
    size = len(data.labels)
    perm = np.zeros((size, size))
    for i, lab in enumerate(data.labels):
        perm[i, data.index[dual(lab, data.n, data.k)]] = 1.0
    return perm


def s_matrix(n: int, k: int) -> ModularData:
    """Build R from characters, normalize columns to S, then assert the S-matrix invariants."""
    _check_rank_level(n, k)
    labels = build_label_set(n, k)
    columns = ordered_map(lambda mu: _ratio_column(labels, mu, n, k), labels)
    R = np.column_stack(columns)
    s0 = 1.0 / np.sqrt(np.sum(np.abs(R) ** 2, axis=0))
    S = R * s0[None, :]
    data = ModularData(n=n, k=k, labels=tuple(labels), S=S, R=R)

    res = data.residuals()
    logger.info(
        "smatrix.built",
        extra={"event": "smatrix_built", "n": n, "k": k, "labels": len(labels), **res},
    )
    for name, value in res.items():
        if value > S_TOL:
            raise ConsistencyError(name, value)
    return data


def curve_spectrum(lam: Label, n: int, k: int) -> list[tuple[complex, Label]]:
    """Eigenvalues R_{lam,mu} of the curve operator, indexed by mu."""
    _check_rank_level(n, k)
    _require_member(lam, n, k)
    labels = build_label_set(n, k)
    return [(complex(_ratio_column([lam], mu, n, k)[0]), mu) for mu in labels]


@dataclass(frozen=True)
class VerlindeResult:
    value: float
    nearest: int
    deviation: float


def verlinde_dim(
    n: int,
    k: int,
    g: int,
    boundary_labels: list[Label] | tuple[Label, ...] = (),
    *,
    data: ModularData | None = None,
) -> VerlindeResult:
    """Sum over mu of S_{0mu}^(2-2g) times the product of boundary ratios."""
    if g < 0:
        raise ParameterDomainError(f"genus must be >= 0, got {g}")
    data = data if data is not None else s_matrix(n, k)
    for lab in boundary_labels:
        _require_member(lab, n, k)
    terms = data.S[0].real ** (2 - 2 * g)
    weights = np.ones(len(data.labels), dtype=complex)
    for lab in boundary_labels:
        weights = weights * data.R[data.index[lab]]
    total = complex(np.sum(terms * weights))
    nearest = round(total.real)
    deviation = max(abs(total.real - nearest), abs(total.imag))
    if deviation > INTEGRALITY_TOL or nearest < 0:
        raise ConsistencyError("verlinde_integrality", deviation)
    return VerlindeResult(value=total.real, nearest=int(nearest), deviation=deviation)
