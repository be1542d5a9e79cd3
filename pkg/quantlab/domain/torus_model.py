"""The flat torus (R^2/Z^2, 2*pi dx^dy) with its family of complex structures over the upper
half-plane.

Conventions used everywhere in the package:
- tensors are 2x2 arrays in the (d/dx, d/dy) frame, omega(X, Y) = X^T W Y;
- complex coordinate z = x + sigma*y, so dz = (1, sigma) and d/dz = (-conj(sigma), 1)/(2i*sigma2);
- bivectors B act on covectors, and a variation of I is written V[I] = G W;
- X_f is defined by i_{X_f} omega = df and {f, g} = omega(X_f, X_g).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from quantlab.domain.errors import ConsistencyError, ParameterDomainError
from quantlab.domain.trigpoly import TrigPoly, VectorField

__all__ = [
    "OMEGA_SCALE",
    "CHERN_INTEGER",
    "TeichPoint",
    "TangentVector",
    "TensorKind",
    "ConstTensor",
    "Bivectors",
    "HolomorphicFrame",
    "symplectic_matrix",
    "complex_structure",
    "metric",
    "inverse_metric",
    "holomorphic_frame",
    "variation_I",
    "variation_I_parts",
    "variation_inverse_metric",
    "g_bivectors",
    "divergence",
    "laplace_bivector",
    "laplace_symbol",
    "laplacian",
    "variation_laplacian",
    "hamiltonian_field",
    "poisson",
    "type_parts",
    "ricci_potential",
]

OMEGA_SCALE = 2.0 * math.pi
CHERN_INTEGER = 0
FD_STEP = 1e-5
FD_TOL = 1e-8
IDENTITY_TOL = 1e-10


# ------------------------
# Points and tangent vectors of Teichmueller space
# ------------------------
@dataclass(frozen=True)
class TeichPoint:
    sigma1: float
    sigma2: float

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0.0) or not math.isfinite(self.sigma1):
            raise ParameterDomainError(f"sigma2 must be > 0, got {self.sigma2}")

    @classmethod
    def from_complex(cls, sigma: complex) -> TeichPoint:
        sigma = complex(sigma)
        return cls(sigma.real, sigma.imag)

    @property
    def sigma(self) -> complex:
        return complex(self.sigma1, self.sigma2)

    def shifted(self, V: TangentVector, t: float) -> TeichPoint:
        return TeichPoint.from_complex(self.sigma + t * V.dsigma)

    def __str__(self) -> str:
        return f"{self.sigma1:g}{self.sigma2:+g}i"


@dataclass(frozen=True)
class TangentVector:
    """Real tangent vector whose action on sigma is the complex increment `dsigma`."""

    dsigma: complex

    @classmethod
    def zero(cls) -> TangentVector:
        return cls(0j)

    @classmethod
    def d_sigma1(cls) -> TangentVector:
        return cls(1.0 + 0j)

    @classmethod
    def d_sigma2(cls) -> TangentVector:
        return cls(1j)

    def __mul__(self, scalar: float) -> TangentVector:
        return TangentVector(self.dsigma * scalar)

    __rmul__ = __mul__

    def reversed(self) -> TangentVector:
        return TangentVector(-self.dsigma)


# ------------------------
# Constant tensors
# ------------------------
class TensorKind(str, Enum):
    complex_structure = "complex-structure"
    metric = "metric"
    inverse_metric = "inverse-metric"
    bivector = "bivector"
    vector = "vector"
    endomorphism = "endomorphism"


@dataclass(frozen=True, eq=False)
class ConstTensor:
    kind: TensorKind
    components: np.ndarray

    def __post_init__(self) -> None:
        comp = np.array(self.components)
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)
        if self.kind is TensorKind.vector:
            if comp.shape != (2,):
                raise ParameterDomainError(f"vector needs shape (2,), got {comp.shape}")
            return
        if comp.shape != (2, 2):
            raise ParameterDomainError(f"{self.kind.value} needs shape (2, 2), got {comp.shape}")
        if self.kind is TensorKind.complex_structure:
            residual = np.max(np.abs(comp @ comp + np.eye(2)))
            if residual > 1e-12:
                raise ConsistencyError("I^2 = -Id", residual)
        elif self.kind in (TensorKind.metric, TensorKind.inverse_metric):
            if np.max(np.abs(comp - comp.T)) > 1e-12 or np.min(np.linalg.eigvalsh(comp)) <= 0:
                raise ConsistencyError(f"{self.kind.value} symmetric positive", 0.0)
        elif self.kind is TensorKind.bivector:
            asym = np.max(np.abs(comp - comp.T))
            if asym > IDENTITY_TOL:
                raise ConsistencyError("bivector symmetric", asym)

    @property
    def T(self) -> np.ndarray:
        return self.components

    def norm(self) -> float:
        return float(np.max(np.abs(self.components)))


def symplectic_matrix() -> np.ndarray:
    """W with omega(X, Y) = X^T W Y."""
    return OMEGA_SCALE * np.array([[0.0, 1.0], [-1.0, 0.0]])


_W = symplectic_matrix()
_W_INV = np.linalg.inv(_W)


def complex_structure(sigma: TeichPoint) -> ConstTensor:
    s1, s2 = sigma.sigma1, sigma.sigma2
    mat = np.array([[-s1, -(s1 * s1 + s2 * s2)], [1.0, s1]]) / s2
    return ConstTensor(TensorKind.complex_structure, mat)


def metric(sigma: TeichPoint) -> ConstTensor:
    """g(X, Y) = omega(X, I Y)."""
    return ConstTensor(TensorKind.metric, _W @ complex_structure(sigma).T)


def inverse_metric(sigma: TeichPoint) -> ConstTensor:
    s1, s2 = sigma.sigma1, sigma.sigma2
    mat = np.array([[s1 * s1 + s2 * s2, -s1], [-s1, 1.0]]) / (OMEGA_SCALE * s2)
    return ConstTensor(TensorKind.inverse_metric, mat)


@dataclass(frozen=True)
class HolomorphicFrame:
    """Components of d/dz, d/dzbar, dz and dzbar in the real frame."""

    dz_vec: np.ndarray
    dzbar_vec: np.ndarray
    dz_form: np.ndarray
    dzbar_form: np.ndarray


def holomorphic_frame(sigma: TeichPoint) -> HolomorphicFrame:
    s = sigma.sigma
    dz_vec = np.array([-np.conj(s), 1.0]) / (2j * sigma.sigma2)
    dz_form = np.array([1.0, s])
    return HolomorphicFrame(dz_vec, np.conj(dz_vec), dz_form, np.conj(dz_form))


# ------------------------
# Variations along Teichmueller space
# ------------------------
def _dI_dsigma1(sigma: TeichPoint) -> np.ndarray:
    s1, s2 = sigma.sigma1, sigma.sigma2
    return np.array([[-1.0 / s2, -2.0 * s1 / s2], [0.0, 1.0 / s2]])


def _dI_dsigma2(sigma: TeichPoint) -> np.ndarray:
    s1, s2 = sigma.sigma1, sigma.sigma2
    return np.array(
        [[s1 / s2**2, -1.0 + s1 * s1 / s2**2], [-1.0 / s2**2, -s1 / s2**2]]
    )


def variation_I_parts(sigma: TeichPoint, V: TangentVector) -> tuple[np.ndarray, np.ndarray]:
    """(V'[I], V''[I]): the parts coming from dsigma * d/dsigma and its conjugate."""
    d_sigma = 0.5 * (_dI_dsigma1(sigma) - 1j * _dI_dsigma2(sigma))
    holo = V.dsigma * d_sigma
    return holo, np.conj(holo)


def variation_I(sigma: TeichPoint, V: TangentVector, *, check: bool = True) -> ConstTensor:
    """V[I] from the closed form; optionally compared with central differences in sigma."""
    a, b = V.dsigma.real, V.dsigma.imag
    closed = a * _dI_dsigma1(sigma) + b * _dI_dsigma2(sigma)
    I = complex_structure(sigma).T
    anti = float(np.max(np.abs(closed @ I + I @ closed)))
    if anti > 1e-12:
        raise ConsistencyError("V[I] anticommutes with I", anti)
    if check and V.dsigma != 0:
        plus = complex_structure(sigma.shifted(V, FD_STEP)).T
        minus = complex_structure(sigma.shifted(V, -FD_STEP)).T
        fd = (plus - minus) / (2.0 * FD_STEP)
        residual = float(np.max(np.abs(fd - closed)))
        if residual > FD_TOL * max(1.0, float(np.max(np.abs(closed)))):
            raise ConsistencyError("V[I] finite-difference agreement", residual)
    return ConstTensor(TensorKind.endomorphism, closed)


def variation_inverse_metric(sigma: TeichPoint, V: TangentVector) -> np.ndarray:
    """Closed-form V[g^-1], differentiated directly from the inverse-metric formula."""
    s1, s2 = sigma.sigma1, sigma.sigma2
    P = np.array([[s1 * s1 + s2 * s2, -s1], [-s1, 1.0]])
    d1 = np.array([[2.0 * s1, -1.0], [-1.0, 0.0]]) / (OMEGA_SCALE * s2)
    d2 = np.array([[2.0 * s2, 0.0], [0.0, 0.0]]) / (OMEGA_SCALE * s2) - P / (OMEGA_SCALE * s2**2)
    return V.dsigma.real * d1 + V.dsigma.imag * d2


@dataclass(frozen=True, eq=False)
class Bivectors:
    """G~(V) = G(V) + conj(G(V)); G(V) = coefficient * d/dz (x) d/dz."""

    tilde: ConstTensor
    holomorphic: ConstTensor
    antiholomorphic: ConstTensor
    coefficient: complex


def g_bivectors(sigma: TeichPoint, V: TangentVector) -> Bivectors:
    holo_I, anti_I = variation_I_parts(sigma, V)
    full_I = variation_I(sigma, V).T
    tilde = full_I @ _W_INV
    G = holo_I @ _W_INV
    Gbar = anti_I @ _W_INV

    residual = float(np.max(np.abs(tilde + variation_inverse_metric(sigma, V))))
    if residual > IDENTITY_TOL:
        raise ConsistencyError("G~(V) = -V[g^-1]", residual)
    split = float(np.max(np.abs(tilde - G - Gbar)))
    if split > IDENTITY_TOL:
        raise ConsistencyError("G~(V) = G(V) + conj G(V)", split)

    vz = holomorphic_frame(sigma).dz_vec
    coefficient = complex(G[1, 1] / vz[1] ** 2)
    rank_one = float(np.max(np.abs(G - coefficient * np.outer(vz, vz))))
    if rank_one > IDENTITY_TOL:
        raise ConsistencyError("G(V) of type (2,0)", rank_one)
    return Bivectors(
        tilde=ConstTensor(TensorKind.bivector, tilde.real),
        holomorphic=ConstTensor(TensorKind.bivector, G),
        antiholomorphic=ConstTensor(TensorKind.bivector, Gbar),
        coefficient=coefficient,
    )


# ------------------------
# Calculus on trigonometric polynomials
# ------------------------
def divergence(X: VectorField, sigma: TeichPoint | None = None) -> TrigPoly:
    """delta(X) = Lambda d(i_X omega); `sigma` is accepted for symmetry and plays no role."""
    # i_X omega = omega(X, .) = -2pi X^y dx + 2pi X^x dy
    alpha_x = X.y * (-OMEGA_SCALE)
    alpha_y = X.x * OMEGA_SCALE
    two_form = alpha_y.dx() - alpha_x.dy()  # coefficient of dx^dy
    return two_form / OMEGA_SCALE  # Lambda(dx^dy) = 1/(2pi)


def laplace_symbol(B: np.ndarray, m: int, n: int) -> complex:
    return -4.0 * math.pi**2 * (B[0, 0] * m * m + (B[0, 1] + B[1, 0]) * m * n + B[1, 1] * n * n)


def laplace_bivector(
    B: ConstTensor | np.ndarray, f: TrigPoly, sigma: TeichPoint | None = None
) -> TrigPoly:
    """Delta_B f = delta(B df) for a constant symmetric bivector B."""
    comp = B.T if isinstance(B, ConstTensor) else np.asarray(B)
    return f.apply_symbol(lambda m, n: laplace_symbol(comp, m, n))


def laplacian(sigma: TeichPoint, f: TrigPoly) -> TrigPoly:
    """Laplace-Beltrami operator Delta_sigma = Delta_{g^-1}."""
    return laplace_bivector(inverse_metric(sigma), f)


def variation_laplacian(
    sigma: TeichPoint, V: TangentVector, f: TrigPoly, *, step: float
) -> TrigPoly:
    """V[Delta] f by a central difference in sigma."""
    plus = laplacian(sigma.shifted(V, step), f)
    minus = laplacian(sigma.shifted(V, -step), f)
    return (plus - minus) / (2.0 * step)


def hamiltonian_field(f: TrigPoly) -> VectorField:
    """X_f with i_{X_f} omega = df."""
    return VectorField(f.dy() / OMEGA_SCALE, -f.dx() / OMEGA_SCALE)


def poisson(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """{f, g} = omega(X_f, X_g) = (f_x g_y - f_y g_x) / (2 pi)."""
    return (f.dx() * g.dy() - f.dy() * g.dx()) / OMEGA_SCALE


def type_parts(sigma: TeichPoint, X: VectorField) -> tuple[VectorField, VectorField]:
    """(X', X''): X'' = (X + i I X)/2 lies in the (0,1) directions."""
    I = complex_structure(sigma).T
    IX = VectorField(X.x * I[0, 0] + X.y * I[0, 1], X.x * I[1, 0] + X.y * I[1, 1])
    anti = VectorField((X.x + IX.x * 1j) * 0.5, (X.y + IX.y * 1j) * 0.5)
    holo = VectorField(X.x - anti.x, X.y - anti.y)
    return holo, anti


def ricci_potential(sigma: TeichPoint) -> TrigPoly:
    """The flat metric has vanishing Ricci potential at every sigma."""
    return TrigPoly.zero()
