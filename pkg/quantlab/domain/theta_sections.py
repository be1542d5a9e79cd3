"""Level-k sections of the prequantum line bundle in the gauge A = -2*pi*i*k*x dy.

Sections are sampled on the N x N grid {(i/N, j/N)} (first index along x) and obey
    psi(x + 1, y) = exp(2*pi*i*k*y) psi(x, y),    psi(x, y + 1) = psi(x, y),
so |psi|^2 is periodic and the trapezoid rule is spectrally accurate.

The holomorphic sections at sigma are spanned by the lattice Gaussians
    theta_j(x, y) = sum_{m in Z + j/k} exp(pi*i*k*sigma*(y + m)^2 + 2*pi*i*k*x*(y + m)),
j = 0..k-1, whose Gram matrix is 2*pi/sqrt(2*k*sigma2) times the identity.
"""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft
import scipy.linalg

from quantlab.domain.errors import (
    ConstructionError,
    ParameterDomainError,
    ShapeError,
    TruncationError,
)
from quantlab.domain.torus_model import (
    OMEGA_SCALE,
    TeichPoint,
    complex_structure,
    holomorphic_frame,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField, grid_points
from quantlab.logging_conf import get_logger

__all__ = [
    "DEFAULT_TAIL_TOL",
    "Method",
    "Gauge",
    "GridSection",
    "OneFormSection",
    "ThetaBasis",
    "default_resolution",
    "gram_closed_form",
    "theta_basis",
    "inner_product",
    "gram_of",
    "project",
    "project_section",
    "embed",
    "nabla_x",
    "nabla_y",
    "nabla_z",
    "nabla_zbar",
    "covariant_derivative",
    "dolbeault_split",
    "holomorphicity_residual",
    "curvature_residual",
    "random_smooth_section",
    "compress",
    "section_norm",
    "laplace_section",
]

logger = get_logger("quantlab.theta")

DEFAULT_TAIL_TOL = 1e-16
MAX_LATTICE_TERMS = 64
HOLO_TOL = 1e-8
GRAM_OFFDIAG_TOL = 1e-10
INDEPENDENCE_TOL = 1e-8

Method = Literal["spectral", "fd4"]
Array = np.ndarray


def default_resolution(k: int) -> int:
    """16k points per side (8k beyond k = 16, which still resolves the Gaussians), at least 32."""
    return max(32, 16 * k if k <= 16 else 8 * k)


# ------------------------
# Gauge and grid sections
# ------------------------
@dataclass(frozen=True)
class Gauge:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ParameterDomainError(f"level k must be >= 1, got {self.k}")

    def boundary_phase(self, y: Array) -> Array:
        """Factor relating psi(x + 1, y) to psi(x, y)."""
        return np.exp(2j * np.pi * self.k * y)

    def connection_form(self, x: Array) -> tuple[Array, Array]:
        """(A_x, A_y) on the fundamental domain."""
        return np.zeros_like(x, dtype=complex), -2j * np.pi * self.k * np.asarray(x)

    @property
    def curvature(self) -> complex:
        """F(d/dx, d/dy) = -i*k*omega(d/dx, d/dy)."""
        return -1j * self.k * OMEGA_SCALE


@dataclass(frozen=True, eq=False)
class GridSection:
    k: int
    values: Array = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1]:
            raise ShapeError(f"grid section needs an N x N array, got {vals.shape}")
        if vals.shape[0] < 8 * self.k:
            raise ShapeError(f"resolution N={vals.shape[0]} below the floor 8k={8 * self.k}")
        if not np.all(np.isfinite(vals)):
            raise ShapeError("grid section has non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def _same_grid(self, other: GridSection) -> None:
        if other.k != self.k or other.N != self.N:
            raise ShapeError(
                f"grid mismatch: (k={self.k}, N={self.N}) vs (k={other.k}, N={other.N})"
            )

    def __add__(self, other: GridSection) -> GridSection:
        self._same_grid(other)
        return GridSection(self.k, self.values + other.values)

    def __sub__(self, other: GridSection) -> GridSection:
        self._same_grid(other)
        return GridSection(self.k, self.values - other.values)

    def __mul__(self, factor: complex | TrigPoly) -> GridSection:
        if isinstance(factor, TrigPoly):
            return GridSection(self.k, factor.on_grid(self.N) * self.values)
        return GridSection(self.k, factor * self.values)

    __rmul__ = __mul__

    def norm(self) -> float:
        return section_norm(self.values)


@dataclass(frozen=True, eq=False)
class OneFormSection:
    """Section-valued 1-form alpha = dx * alpha_x + dy * alpha_y."""

    k: int
    dx: Array = field(repr=False)
    dy: Array = field(repr=False)

    def compose(self, A: Array) -> OneFormSection:
        """alpha o A for an endomorphism A of the tangent space."""
        return OneFormSection(
            self.k,
            self.dx * A[0, 0] + self.dy * A[1, 0],
            self.dx * A[0, 1] + self.dy * A[1, 1],
        )

    def __add__(self, other: OneFormSection) -> OneFormSection:
        return OneFormSection(self.k, self.dx + other.dx, self.dy + other.dy)

    def __mul__(self, scalar: complex) -> OneFormSection:
        return OneFormSection(self.k, self.dx * scalar, self.dy * scalar)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(section_norm(self.dx), section_norm(self.dy))


def section_norm(values: Array) -> float:
    return math.sqrt(max(inner_product_values(values, values).real, 0.0))


def inner_product_values(a: Array, b: Array) -> complex:
    N = a.shape[-1]
    return complex(OMEGA_SCALE * np.vdot(b, a) / (N * N))


def inner_product(s1: GridSection, s2: GridSection) -> complex:
    """<s1, s2> = 2*pi * integral s1 * conj(s2) dx dy, linear in the first slot."""
    s1._same_grid(s2)
    return inner_product_values(s1.values, s2.values)


# ------------------------
# Covariant derivatives
# ------------------------
def _frequencies(N: int) -> Array:
    freq = 2j * np.pi * scipy.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        freq[N // 2] = 0.0
    return freq


def _spectral_dx(values: Array, k: int) -> Array:
    N = values.shape[-1]
    x, y = grid_points(N)
    phase = np.exp(2j * np.pi * k * x * y)
    periodic = values * np.conj(phase)
    d_periodic = scipy.fft.ifft(
        scipy.fft.fft(periodic, axis=-2) * _frequencies(N)[:, None], axis=-2
    )
    return phase * d_periodic + 2j * np.pi * k * y * values


def _spectral_dy(values: Array) -> Array:
    N = values.shape[-1]
    return scipy.fft.ifft(scipy.fft.fft(values, axis=-1) * _frequencies(N)[None, :], axis=-1)


def _shifted(values: Array, k: int, s: int, axis: int) -> Array:
    """Samples at index i + s along `axis`, continued through the gauge boundary phase."""
    N = values.shape[-1]
    rolled = np.roll(values, -s, axis=axis)
    if axis == -2 and s != 0:
        boundary = Gauge(k).boundary_phase(np.arange(N) / N)
        idx = np.arange(N) + s
        phase = np.ones((N, N), dtype=complex)
        phase[idx >= N, :] = boundary[None, :]
        phase[idx < 0, :] = np.conj(boundary)[None, :]
        rolled = rolled * phase
    return rolled


def _fd4(values: Array, k: int, axis: int) -> Array:
    N = values.shape[-1]
    return (
        -_shifted(values, k, 2, axis)
        + 8.0 * _shifted(values, k, 1, axis)
        - 8.0 * _shifted(values, k, -1, axis)
        + _shifted(values, k, -2, axis)
    ) * (N / 12.0)


def nabla_x(values: Array, k: int, method: Method = "spectral") -> Array:
    return _spectral_dx(values, k) if method == "spectral" else _fd4(values, k, -2)


def nabla_y(values: Array, k: int, method: Method = "spectral") -> Array:
    N = values.shape[-1]
    x, _ = grid_points(N)
    d = _spectral_dy(values) if method == "spectral" else _fd4(values, k, -1)
    _, A_y = Gauge(k).connection_form(x)
    return d + A_y * values


def nabla_z(sigma: TeichPoint, values: Array, k: int, method: Method = "spectral") -> Array:
    vz = holomorphic_frame(sigma).dz_vec
    return vz[0] * nabla_x(values, k, method) + vz[1] * nabla_y(values, k, method)


def nabla_zbar(sigma: TeichPoint, values: Array, k: int, method: Method = "spectral") -> Array:
    vzb = holomorphic_frame(sigma).dzbar_vec
    return vzb[0] * nabla_x(values, k, method) + vzb[1] * nabla_y(values, k, method)


def covariant_derivative(
    X: VectorField, s: GridSection, *, method: Method = "spectral"
) -> GridSection:
    """nabla_X s = X[s] + A(X) s for a vector field with trigonometric coefficients."""
    cx, cy = X.components_on_grid(s.N)
    return GridSection(
        s.k, cx * nabla_x(s.values, s.k, method) + cy * nabla_y(s.values, s.k, method)
    )


def laplace_section(B: Array, values: Array, k: int, method: Method = "spectral") -> Array:
    """Delta_B s = B^{ab} nabla_a nabla_b s for a constant bivector (its symmetric part is used)."""
    bxy = 0.5 * (B[0, 1] + B[1, 0])
    dx = nabla_x(values, k, method)
    dy = nabla_y(values, k, method)
    out = B[0, 0] * nabla_x(dx, k, method) + B[1, 1] * nabla_y(dy, k, method)
    if bxy != 0:
        out = out + bxy * (nabla_x(dy, k, method) + nabla_y(dx, k, method))
    return out


def dolbeault_split(
    sigma: TeichPoint, s: GridSection, *, method: Method = "spectral"
) -> tuple[OneFormSection, OneFormSection]:
    """(nabla^{1,0} s, nabla^{0,1} s) = ((1 - iI) nabla s / 2, (1 + iI) nabla s / 2)."""
    I = complex_structure(sigma).T
    full = OneFormSection(s.k, nabla_x(s.values, s.k, method), nabla_y(s.values, s.k, method))
    rotated = full.compose(I)
    return full * 0.5 + rotated * (-0.5j), full * 0.5 + rotated * 0.5j


def holomorphicity_residual(
    sigma: TeichPoint, s: GridSection, *, method: Method = "spectral"
) -> float:
    """||nabla_{d/dzbar} s|| / ||s||."""
    norm = s.norm()
    if norm == 0.0:
        return 0.0
    return section_norm(nabla_zbar(sigma, s.values, s.k, method)) / norm


def curvature_residual(s: GridSection, *, method: Method = "spectral") -> float:
    """||[nabla_x, nabla_y] s + i*k*omega(d/dx, d/dy) s|| / ||s||."""
    k = s.k
    xy = nabla_x(nabla_y(s.values, k, method), k, method)
    yx = nabla_y(nabla_x(s.values, k, method), k, method)
    residual = xy - yx + 1j * k * OMEGA_SCALE * s.values
    return section_norm(residual) / s.norm()


# ------------------------
# Theta basis
# ------------------------
def gram_closed_form(k: int, sigma: TeichPoint) -> float:
    """<theta_j, theta_j> = 2*pi * integral over R of exp(-2*pi*k*sigma2*t^2) dt."""
    return 2.0 * math.pi / math.sqrt(2.0 * k * sigma.sigma2)


def _lattice_offsets(k: int, j: int, sigma: TeichPoint, tail_tol: float) -> Array:
    reach = math.sqrt(-math.log(tail_tol) / (math.pi * k * sigma.sigma2))
    shift = j / k
    lo = math.floor(-reach - shift - 1.0)
    hi = math.ceil(reach - shift)
    count = hi - lo + 1
    if count > MAX_LATTICE_TERMS:
        raise TruncationError(
            f"theta series needs {count} lattice terms (> {MAX_LATTICE_TERMS}); sigma2 too small"
        )
    return np.arange(lo, hi + 1) + shift


def _theta_values(k: int, sigma: TeichPoint, N: int, tail_tol: float) -> tuple[Array, int]:
    x, y = grid_points(N)
    out = np.zeros((k, N, N), dtype=complex)
    longest = 0
    for j in range(k):
        offsets = _lattice_offsets(k, j, sigma, tail_tol)
        longest = max(longest, offsets.shape[0])
        for m in offsets:
            t = y + m
            out[j] += np.exp(1j * np.pi * k * sigma.sigma * t * t + 2j * np.pi * k * x * t)
    return out, longest


@dataclass(frozen=True, eq=False)
class ThetaBasis:
    k: int
    sigma: TeichPoint
    N: int
    truncation: int
    values: Array = field(repr=False)
    gram: Array = field(repr=False)

    def section(self, j: int) -> GridSection:
        return GridSection(self.k, self.values[j])

    def inner_products(self, values: Array) -> Array:
        """<s, theta_i> for i = 0..k-1."""
        flat = self.values.reshape(self.k, -1)
        return OMEGA_SCALE * (flat.conj() @ values.reshape(-1)) / (self.N * self.N)

    @cached_property
    def gram_inv_sqrt(self) -> Array:
        """Positive Hermitian root of the inverse Gram matrix."""
        w, U = scipy.linalg.eigh(self.gram)
        return (U * (1.0 / np.sqrt(w))[None, :]) @ U.conj().T

    def orthonormal_values(self) -> Array:
        """e_j = sum_i theta_i (Gram^-1/2)_{ij}."""
        return np.einsum("ij,ixy->jxy", self.gram_inv_sqrt, self.values)

    def orthonormal_coefficients(self, values: Array) -> Array:
        """<s, e_i> for the orthonormal frame."""
        return self.gram_inv_sqrt.conj().T @ self.inner_products(values)


def gram_of(values: Array) -> Array:
    """Gram matrix G_ij = <s_i, s_j> of a stack of sections."""
    N = values.shape[-1]
    flat = values.reshape(values.shape[0], -1)
    return OMEGA_SCALE * (flat @ flat.conj().T) / (N * N)


def theta_basis(
    k: int,
    sigma: TeichPoint,
    tail_tol: float = DEFAULT_TAIL_TOL,
    *,
    N: int | None = None,
    check: bool = True,
) -> ThetaBasis:
    """Build the canonical holomorphic basis at sigma and assert its invariants."""
    if k < 1:
        raise ParameterDomainError(f"level k must be >= 1, got {k}")
    if not tail_tol > 0:
        raise ParameterDomainError("tail_tol must be > 0")
    N = default_resolution(k) if N is None else N
    if N < 8 * k:
        raise ShapeError(f"resolution N={N} below the floor 8k={8 * k}")

    values, truncation = _theta_values(k, sigma, N, tail_tol)
    gram = gram_of(values)
    basis = ThetaBasis(k=k, sigma=sigma, N=N, truncation=truncation, values=values, gram=gram)
    if check:
        _check_basis(basis)
    return basis


def _check_basis(basis: ThetaBasis) -> None:
    holo = max(holomorphicity_residual(basis.sigma, basis.section(j)) for j in range(basis.k))
    off = basis.gram - np.diag(np.diag(basis.gram))
    offdiag = float(np.max(np.abs(off))) if basis.k > 1 else 0.0
    diag = np.diag(basis.gram).real
    eig = np.linalg.eigvalsh(basis.gram)
    logger.info(
        "theta.basis",
        extra={
            "event": "theta_basis",
            "k": basis.k,
            "sigma": str(basis.sigma),
            "N": basis.N,
            "truncation": basis.truncation,
            "holo_residual": holo,
            "gram_offdiag": offdiag,
        },
    )
    if holo >= HOLO_TOL:
        raise ConstructionError("holomorphicity", f"holomorphicity residual {holo:.3e}")
    if offdiag >= GRAM_OFFDIAG_TOL:
        raise ConstructionError("gram_diagonal", f"off-diagonal Gram entry {offdiag:.3e}")
    if np.min(diag) <= 0:
        raise ConstructionError("gram_positive")
    if eig[0] <= INDEPENDENCE_TOL * eig[-1]:
        raise ConstructionError("dimension_k", "theta sections are numerically dependent")


# ------------------------
# Projection
# ------------------------
def project(basis: ThetaBasis, s: GridSection) -> Array:
    """Coefficients c with pi(s) = sum_j c_j theta_j, c_j = sum_i <s, theta_i> h^-1_ij."""
    if s.k != basis.k or s.N != basis.N:
        raise ShapeError("section and basis live on different grids")
    b = basis.inner_products(s.values)
    return np.linalg.solve(basis.gram.T, b)


def embed(basis: ThetaBasis, coefficients: Array) -> GridSection:
    return GridSection(basis.k, np.tensordot(coefficients, basis.values, axes=1))


def project_section(basis: ThetaBasis, s: GridSection) -> GridSection:
    return embed(basis, project(basis, s))


def random_smooth_section(
    basis: ThetaBasis, rng: np.random.Generator, *, degree: int = 1
) -> GridSection:
    """sum_j f_j theta_j with random trigonometric f_j: smooth, generally not holomorphic."""
    out = np.zeros((basis.N, basis.N), dtype=complex)
    for j in range(basis.k):
        out += TrigPoly.random(rng, degree).on_grid(basis.N) * basis.values[j]
    values = out / section_norm(out)
    return GridSection(basis.k, values)


def compress(basis: ThetaBasis, op: Callable[[Array], Array]) -> Array:
    """Matrix <op e_j, e_i> of pi o op restricted to H^0, in the orthonormal frame."""
    k = basis.k
    theta_matrix = np.empty((k, k), dtype=complex)
    for j in range(k):
        theta_matrix[:, j] = basis.inner_products(op(basis.values[j]))
    R = basis.gram_inv_sqrt
    return R.conj().T @ theta_matrix @ R
