"""Toeplitz operators at level k as k x k matrices in the orthonormal theta frame.

Closed form: for the mode e_(p,q) the matrix sends e_j to e_(j+p mod k) with entry
    exp(-2*pi*i*q*j/k) * exp(-(pi^2/k) g^-1(nu, nu) - i*pi*p*q/k),    nu = (p, q).
Products of modes obey T_a T_b = exp(pi*Phi_ab/k) T_(a+b) exactly, where
pi*Phi_ab e_(a+b) = c1(e_a, e_b).
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import scipy.linalg
from numpy.polynomial import polynomial as npoly

from quantlab.domain.convergence import SlopeFit, fit_slope
from quantlab.domain.errors import ConsistencyError, ParameterDomainError
from quantlab.domain.theta_sections import (
    ThetaBasis,
    compress,
    covariant_derivative,
    inner_product_values,
    laplace_section,
    nabla_x,
    nabla_y,
    random_smooth_section,
    section_norm,
    theta_basis,
)
from quantlab.domain.torus_model import (
    TangentVector,
    TeichPoint,
    divergence,
    hamiltonian_field,
    holomorphic_frame,
    inverse_metric,
    type_parts,
    variation_inverse_metric,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField
from quantlab.logging_conf import get_logger
from quantlab.parallel import ordered_map

__all__ = [
    "CompressedOp",
    "ParamConvention",
    "StarSeries",
    "IdentityResidual",
    "ExpansionRow",
    "GapRow",
    "mode_damping",
    "toeplitz",
    "toeplitz_closed_form",
    "toeplitz_closed_form_variation",
    "toeplitz_quadrature",
    "operator_norm",
    "compressed_identities",
    "c1_symbol",
    "c1_modes",
    "c1_hamiltonian",
    "c1_variation",
    "mode_product_phase",
    "expansion_residual",
    "reparametrize_series",
    "shift_operator",
    "abelian_curve_operator_gap",
]

logger = get_logger("quantlab.toeplitz")

HERMITIAN_TOL = 1e-10
DUAL_PATH_TOL = 1e-8
IDENTITY_TOL = 1e-6


# ------------------------
# Compressed operators
# ------------------------
@dataclass(frozen=True, eq=False)
class CompressedOp:
    k: int
    sigma: TeichPoint
    matrix: np.ndarray = field(repr=False)
    closed_form: bool = True

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.matrix)):
            raise ConsistencyError("finite entries", float("inf"))

    @property
    def hermitian(self) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) < HERMITIAN_TOL)

    def __matmul__(self, other: CompressedOp) -> CompressedOp:
        return CompressedOp(self.k, self.sigma, self.matrix @ other.matrix, self.closed_form)

    def __sub__(self, other: CompressedOp) -> CompressedOp:
        return CompressedOp(self.k, self.sigma, self.matrix - other.matrix, self.closed_form)

    def __add__(self, other: CompressedOp) -> CompressedOp:
        return CompressedOp(self.k, self.sigma, self.matrix + other.matrix, self.closed_form)

    def __mul__(self, scalar: complex) -> CompressedOp:
        return CompressedOp(self.k, self.sigma, self.matrix * scalar, self.closed_form)

    __rmul__ = __mul__


def operator_norm(M: CompressedOp | np.ndarray) -> float:
    """Largest singular value."""
    mat = M.matrix if isinstance(M, CompressedOp) else np.asarray(M)
    if mat.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(mat)[0])


def mode_damping(k: int, sigma: TeichPoint, p: int, q: int) -> complex:
    """Band entry factor exp(-(pi^2/k) g^-1(nu, nu) - i*pi*p*q/k) of the mode e_(p,q)."""
    ginv = inverse_metric(sigma).T
    quad = ginv[0, 0] * p * p + 2.0 * ginv[0, 1] * p * q + ginv[1, 1] * q * q
    return complex(np.exp(-(math.pi**2 / k) * quad - 1j * math.pi * p * q / k))


def toeplitz_closed_form(k: int, sigma: TeichPoint, f: TrigPoly) -> CompressedOp:
    mat = np.zeros((k, k), dtype=complex)
    cols = np.arange(k)
    for (p, q), a in f.coeffs.items():
        rows = (cols + p) % k
        mat[rows, cols] += a * np.exp(-2j * np.pi * q * cols / k) * mode_damping(k, sigma, p, q)
    return CompressedOp(k, sigma, mat, closed_form=True)


def toeplitz_closed_form_variation(
    k: int, sigma: TeichPoint, V: TangentVector, f: TrigPoly
) -> np.ndarray:
    """Exact V[M] of the closed-form matrix; only the damping factor depends on sigma."""
    d_ginv = variation_inverse_metric(sigma, V)
    mat = np.zeros((k, k), dtype=complex)
    cols = np.arange(k)
    for (p, q), a in f.coeffs.items():
        rows = (cols + p) % k
        d_quad = d_ginv[0, 0] * p * p + 2.0 * d_ginv[0, 1] * p * q + d_ginv[1, 1] * q * q
        entry = a * mode_damping(k, sigma, p, q) * (-(math.pi**2 / k) * d_quad)
        mat[rows, cols] += entry * np.exp(-2j * np.pi * q * cols / k)
    return mat


def toeplitz_quadrature(basis: ThetaBasis, f: TrigPoly) -> CompressedOp:
    f_grid = f.on_grid(basis.N)
    mat = compress(basis, lambda v: f_grid * v)
    return CompressedOp(basis.k, basis.sigma, mat, closed_form=False)


def toeplitz(
    k: int,
    sigma: TeichPoint,
    f: TrigPoly,
    *,
    basis: ThetaBasis | None = None,
    cross_check: bool = False,
) -> CompressedOp:
    """T_f at level k; closed form inside the band |m|, |n| < k/2, quadrature otherwise."""
    if k < 1:
        raise ParameterDomainError(f"level k must be >= 1, got {k}")
    in_band = f.within_band(k / 2.0)
    if not in_band:
        logger.warning(
            "toeplitz.quadrature_fallback",
            extra={"event": "toeplitz_fallback", "k": k, "degree": f.degree},
        )
        basis = basis if basis is not None else theta_basis(k, sigma)
        return toeplitz_quadrature(basis, f)

    closed = toeplitz_closed_form(k, sigma, f)
    if cross_check:
        basis = basis if basis is not None else theta_basis(k, sigma)
        quad = toeplitz_quadrature(basis, f)
        gap = float(np.max(np.abs(closed.matrix - quad.matrix)))
        if gap > DUAL_PATH_TOL:
            raise ConsistencyError("toeplitz closed form vs quadrature", gap)
    return closed


# ------------------------
# First-order star product coefficient
# ------------------------
def c1_symbol(sigma: TeichPoint, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """c1(f, g) = -g^-1(df^(1,0), dg^(0,1)) by tensor contraction."""
    frame = holomorphic_frame(sigma)
    pairing = complex(frame.dz_form @ inverse_metric(sigma).T @ frame.dzbar_form)
    f_z = f.derivative(*frame.dz_vec)
    g_zbar = g.derivative(*frame.dzbar_vec)
    return f_z * g_zbar * (-pairing)


def _phi(sigma: TeichPoint, a: tuple[int, int], b: tuple[int, int]) -> complex:
    s = sigma.sigma
    (p, q), (pp, qq) = a, b
    return (q - np.conj(s) * p) * (qq - s * pp) / sigma.sigma2


def c1_modes(sigma: TeichPoint, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """c1 by expanding f and g in modes: c1(e_a, e_b) = pi*Phi_ab e_(a+b)."""
    out: dict[tuple[int, int], complex] = {}
    for a, ca in f.coeffs.items():
        for b, cb in g.coeffs.items():
            key = (a[0] + b[0], a[1] + b[1])
            out[key] = out.get(key, 0.0) + ca * cb * math.pi * _phi(sigma, a, b)
    return TrigPoly(out)


def c1_hamiltonian(sigma: TeichPoint, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """c1(f, g) = i X''_f[g]."""
    _, anti = type_parts(sigma, hamiltonian_field(f))
    return anti(g) * 1j


def c1_variation(sigma: TeichPoint, V: TangentVector, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """Exact V[c1](f, g), differentiating Phi_ab in sigma."""
    s = sigma.sigma
    ds = V.dsigma
    out: dict[tuple[int, int], complex] = {}
    for a, ca in f.coeffs.items():
        for b, cb in g.coeffs.items():
            (p, q), (pp, qq) = a, b
            phi = _phi(sigma, a, b)
            d_phi = (
                -np.conj(ds) * p * (qq - s * pp) - (q - np.conj(s) * p) * ds * pp
            ) / sigma.sigma2 - phi * ds.imag / sigma.sigma2
            key = (p + pp, q + qq)
            out[key] = out.get(key, 0.0) + ca * cb * math.pi * d_phi
    return TrigPoly(out)


def mode_product_phase(
    k: int, sigma: TeichPoint, a: tuple[int, int], b: tuple[int, int]
) -> complex:
    """exp(pi*Phi_ab/k) with T_a T_b = exp(pi*Phi_ab/k) T_(a+b)."""
    return complex(np.exp(math.pi * _phi(sigma, a, b) / k))


# ------------------------
# Compressed identities
# ------------------------
@dataclass(frozen=True)
class IdentityResidual:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual < self.tolerance


def _ortho_norm(basis: ThetaBasis, values: np.ndarray) -> float:
    """Norm of the projection of `values` onto H^0."""
    return float(np.linalg.norm(basis.orthonormal_coefficients(values)))


def _relative(residual: float, scale: float) -> float:
    return float(residual) / scale if scale > 0.0 else float(residual)


def compressed_identities(
    k: int,
    sigma: TeichPoint,
    X: VectorField,
    X1: VectorField,
    X2: VectorField,
    B: np.ndarray,
    *,
    rng: np.random.Generator,
    batch: int = 20,
    general: VectorField | None = None,
    basis: ThetaBasis | None = None,
    tolerance: float = IDENTITY_TOL,
) -> list[IdentityResidual]:
    """Evaluate the projection identities for (1,0) fields X, X1, X2 and a (2,0) bivector B.

    Every residual is relative to the size of the unprojected operand. `general` (default
    X + conj(X)) is the field used for the adjoint formula, which holds for any X.
    """
    basis = basis if basis is not None else theta_basis(k, sigma)
    N = basis.N
    general = general if general is not None else X + X.conj()
    div_X = divergence(X).on_grid(N)
    div_X1 = divergence(X1)
    div_X2 = divergence(X2)
    two_symbol = (div_X2 * div_X1 + X2(div_X1)).on_grid(N)
    div_gbar = divergence(general.conj()).on_grid(N)
    B = np.asarray(B)

    sections = [random_smooth_section(basis, rng) for _ in range(batch)]
    partners = [random_smooth_section(basis, rng) for _ in range(batch)]

    worst: dict[str, float] = {
        "first_order_projection": 0.0,
        "second_order_projection": 0.0,
        "adjoint_formula": 0.0,
        "laplace_projection_vanishes": 0.0,
        "laplace_adjoint": 0.0,
    }
    for s, t in zip(sections, partners, strict=True):
        grad = covariant_derivative(X, s).values
        lhs = basis.orthonormal_coefficients(grad)
        rhs = -basis.orthonormal_coefficients(div_X * s.values)
        first = _relative(np.linalg.norm(lhs - rhs), section_norm(grad))

        twice = covariant_derivative(X1, covariant_derivative(X2, s)).values
        lhs2 = basis.orthonormal_coefficients(twice)
        rhs2 = basis.orthonormal_coefficients(two_symbol * s.values)
        second = _relative(np.linalg.norm(lhs2 - rhs2), section_norm(twice))

        grad_g = covariant_derivative(general, s).values
        grad_gbar_t = covariant_derivative(general.conj(), t).values
        bilinear = (
            inner_product_values(grad_g, t.values)
            + inner_product_values(s.values, grad_gbar_t)
            + inner_product_values(s.values, div_gbar * t.values)
        )
        adjoint_form = _relative(abs(bilinear), section_norm(grad_g) * t.norm())

        lap = laplace_section(B, s.values, k)
        lap_scale = section_norm(lap)
        vanish = _relative(_ortho_norm(basis, lap), lap_scale)

        lap_bar_t = laplace_section(B.conj(), t.values, k)
        skew = inner_product_values(lap, t.values) - inner_product_values(s.values, lap_bar_t)
        lap_adjoint = _relative(abs(skew), lap_scale * t.norm())

        batch_residuals = (first, second, adjoint_form, vanish, lap_adjoint)
        for name, value in zip(worst, batch_residuals, strict=True):
            worst[name] = max(worst[name], value)

    # pi (nabla_X)^* pi = -T_{delta(conj X)} on H^0, as k x k matrices.
    grid_X = X.components_on_grid(N)
    nabla_mat = compress(basis, lambda v: grid_X[0] * nabla_x(v, k) + grid_X[1] * nabla_y(v, k))
    adjoint = nabla_mat.conj().T
    div_xbar = divergence(X.conj()).on_grid(N)
    target = -compress(basis, lambda v: div_xbar * v)
    ortho = basis.orthonormal_values()
    scale = max(
        section_norm(grid_X[0] * nabla_x(ortho[j], k) + grid_X[1] * nabla_y(ortho[j], k))
        for j in range(k)
    )
    adjoint_residual = _relative(operator_norm(adjoint - target), scale)

    results = [IdentityResidual(name, float(res), tolerance) for name, res in worst.items()]
    results.append(IdentityResidual("adjoint_projection", adjoint_residual, tolerance))
    logger.info(
        "toeplitz.identities",
        extra={
            "event": "compressed_identities",
            "k": k,
            "sigma": str(sigma),
            "residuals": {r.name: r.residual for r in results},
        },
    )
    return results


# ------------------------
# Asymptotic expansion
# ------------------------
@dataclass(frozen=True)
class ExpansionRow:
    k: int
    e0: float
    e1: float


def _expansion_row(f: TrigPoly, g: TrigPoly, sigma: TeichPoint, k: int) -> ExpansionRow:
    Tf = toeplitz(k, sigma, f)
    Tg = toeplitz(k, sigma, g)
    Tfg = toeplitz(k, sigma, f * g)
    Tc1 = toeplitz(k, sigma, c1_symbol(sigma, f, g))
    zeroth = Tf @ Tg - Tfg
    first = zeroth - Tc1 * (1.0 / k)
    return ExpansionRow(k=k, e0=operator_norm(zeroth), e1=operator_norm(first))


def expansion_residual(
    f: TrigPoly, g: TrigPoly, sigma: TeichPoint, k_list: Sequence[int]
) -> tuple[list[ExpansionRow], SlopeFit, SlopeFit]:
    """e0(k), e1(k) and their least-squares slopes in log k."""
    for k in k_list:
        if not 8 <= k <= 256:
            raise ParameterDomainError(f"expansion levels must lie in [8, 256], got {k}")
    rows = ordered_map(lambda k: _expansion_row(f, g, sigma, k), list(k_list))
    ks = [r.k for r in rows]
    fit0 = fit_slope(ks, [r.e0 for r in rows])
    fit1 = fit_slope(ks, [r.e1 for r in rows])
    for name, fit in (("e0", fit0), ("e1", fit1)):
        if not fit.monotone:
            logger.warning(
                "toeplitz.non_monotone", extra={"event": "non_monotone", "series": name}
            )
    return rows, fit0, fit1


# ------------------------
# Reparametrization of the star series
# ------------------------
class ParamConvention(str, Enum):
    inverse_k = "1/k"
    shifted = "1/(k+n/2)"


@dataclass(frozen=True, eq=False)
class StarSeries:
    """c^(0) + c^(1) h + ... with h = 1/k or h = 1/(k + n/2)."""

    terms: tuple[Any, ...]
    convention: ParamConvention = ParamConvention.inverse_k

    @property
    def order(self) -> int:
        return len(self.terms) - 1


def reparametrize_series(series: StarSeries, n: int) -> StarSeries:
    """Rewrite a 1/k series in hbar = 1/(k + n/2), i.e. substitute h = 2*hbar/(2 - n*hbar).

    Orders 0 and 1 are unchanged; order 2 picks up (n/2) c^(1).
    """
    if series.convention is not ParamConvention.inverse_k:
        raise ParameterDomainError("series must be in the 1/k convention")
    L = series.order
    # h(hbar) = hbar * sum_m (n/2)^m hbar^m, truncated at order L
    h_of_hbar = np.array([0.0] + [(n / 2.0) ** m for m in range(L)])
    power = np.array([1.0])
    weights = np.zeros((L + 1, L + 1))  # weights[l, target] = [hbar^target] h^l
    for ell in range(L + 1):
        padded = np.zeros(L + 1)
        padded[: min(L + 1, power.shape[0])] = power[: L + 1]
        weights[ell] = padded
        power = npoly.polymul(power, h_of_hbar)[: L + 1]
    new_terms = []
    for target in range(L + 1):
        acc = None
        for ell in range(L + 1):
            w = weights[ell, target]
            if w == 0.0:
                continue
            term = series.terms[ell] * w
            acc = term if acc is None else acc + term
        new_terms.append(acc if acc is not None else series.terms[target] * 0.0)
    return StarSeries(tuple(new_terms), ParamConvention.shifted)


# ------------------------
# Abelian curve operator
# ------------------------
@dataclass(frozen=True)
class GapRow:
    k: int
    gap: float
    closed_form: float
    unitarity: float


def shift_operator(k: int, p: int, q: int) -> np.ndarray:
    """Unitary U[j + p, j] = exp(-2 pi i q j / k - i pi p q / k), built from indices alone."""
    j = np.arange(k)
    phase = np.exp(-2j * np.pi * q * j / k - 1j * np.pi * p * q / k)
    return np.roll(np.eye(k, dtype=complex), p, axis=0) * phase[None, :]


def abelian_curve_operator_gap(
    k_list: Sequence[int], sigma: TeichPoint, *, mode: tuple[int, int] = (1, 0)
) -> tuple[list[GapRow], SlopeFit]:
    """||U - T_{e_(p,q)}|| against 1 - exp(-(pi^2/k) g^-1(nu, nu)) for the index shift U."""
    p, q = mode
    if (p, q) == (0, 0):
        raise ParameterDomainError("curve operator gap needs a non-constant mode")
    ginv = inverse_metric(sigma).T
    quad = ginv[0, 0] * p * p + 2.0 * ginv[0, 1] * p * q + ginv[1, 1] * q * q
    rows: list[GapRow] = []
    for k in k_list:
        if k < 2:
            raise ParameterDomainError(f"curve operator gap needs k >= 2, got {k}")
        T = toeplitz_closed_form(k, sigma, TrigPoly.mode(p, q)).matrix
        U = shift_operator(k, p, q)
        unitarity = float(np.max(np.abs(U @ U.conj().T - np.eye(k))))
        closed = 1.0 - math.exp(-(math.pi**2 / k) * quad)
        rows.append(
            GapRow(k=k, gap=operator_norm(U - T), closed_form=closed, unitarity=unitarity)
        )
    fit = fit_slope([r.k for r in rows], [r.gap for r in rows])
    return rows, fit
