"""Formal Hitchin connection on formal functions f_0 + f_1 h + f_2 h^2 over trigonometric
polynomials, the first-order trivialization and the induced star product.

The product used by D is the Berezin-Toeplitz product re-expanded in 1/(k + n/2), truncated
after its first-order coefficient. On the torus n = 0 and the Ricci potential F vanishes.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from quantlab.domain.convergence import SlopeFit, fit_slope, richardson_ratio
from quantlab.domain.errors import ConsistencyError, TruncationError
from quantlab.domain.hitchin_connection import endo_derivative, holomorphic_bivector
from quantlab.domain.theta_sections import compress, laplace_section, theta_basis
from quantlab.domain.toeplitz_calculus import (
    ParamConvention,
    StarSeries,
    c1_symbol,
    c1_variation,
    operator_norm,
    reparametrize_series,
    toeplitz,
)
from quantlab.domain.torus_model import (
    CHERN_INTEGER,
    TangentVector,
    TeichPoint,
    g_bivectors,
    hamiltonian_field,
    laplace_bivector,
    laplacian,
    poisson,
    type_parts,
    variation_inverse_metric,
    variation_laplacian,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField
from quantlab.logging_conf import get_logger
from quantlab.parallel import ordered_map

__all__ = [
    "MAX_ORDER",
    "FormalFunction",
    "SigmaFamily",
    "ConstantFamily",
    "TrivializedFamily",
    "StarProductFamily",
    "FlatnessCheck",
    "EHRow",
    "EndoRow",
    "star_tilde",
    "formal_D",
    "E_and_H",
    "eh_cross_validation",
    "P_order1",
    "P_inverse_order1",
    "trivialization_flatness",
    "star_order1",
    "star_order1_direct",
    "expected_star",
    "derivation_residual",
    "bivector_pairing",
    "c1_variation_residual",
    "endo_formal_residual",
]

logger = get_logger("quantlab.formal")

MAX_ORDER = 2
STAR_ORDER = 1
EXACT_TOL = 1e-10
EH_FLOOR = 1e-8


# ------------------------
# Formal functions
# ------------------------
@dataclass(frozen=True, eq=False)
class FormalFunction:
    """sum_l orders[l] h^l, at most up to h^2."""

    orders: tuple[TrigPoly, ...]

    def __post_init__(self) -> None:
        orders = tuple(self.orders) or (TrigPoly.zero(),)
        if len(orders) - 1 > MAX_ORDER:
            raise TruncationError(
                f"formal functions stop at order {MAX_ORDER}, got {len(orders) - 1}"
            )
        object.__setattr__(self, "orders", orders)

    @classmethod
    def of(cls, *orders: TrigPoly | complex) -> FormalFunction:
        return cls(tuple(o if isinstance(o, TrigPoly) else TrigPoly.constant(o) for o in orders))

    @classmethod
    def zero(cls, order: int = 0) -> FormalFunction:
        return cls(tuple(TrigPoly.zero() for _ in range(order + 1)))

    @property
    def order(self) -> int:
        return len(self.orders) - 1

    def coefficient(self, index: int) -> TrigPoly:
        return self.orders[index] if index <= self.order else TrigPoly.zero()

    def truncate(self, order: int) -> FormalFunction:
        return FormalFunction(tuple(self.coefficient(i) for i in range(order + 1)))

    def shift(self) -> FormalFunction:
        """Multiplication by h, dropping what falls beyond MAX_ORDER."""
        return FormalFunction((TrigPoly.zero(),) + self.orders[:MAX_ORDER])

    def map(self, fn: Callable[[TrigPoly], TrigPoly]) -> FormalFunction:
        return FormalFunction(tuple(fn(o) for o in self.orders))

    def __add__(self, other: FormalFunction) -> FormalFunction:
        top = max(self.order, other.order)
        return FormalFunction(
            tuple(self.coefficient(i) + other.coefficient(i) for i in range(top + 1))
        )

    def __neg__(self) -> FormalFunction:
        return self.map(lambda o: -o)

    def __sub__(self, other: FormalFunction) -> FormalFunction:
        return self + (-other)

    def __mul__(self, other: FormalFunction | TrigPoly | complex) -> FormalFunction:
        """Pointwise (commutative) product, truncated at MAX_ORDER."""
        if not isinstance(other, FormalFunction):
            return self.map(lambda o: o * other)
        top = min(self.order + other.order, MAX_ORDER)
        out = []
        for total in range(top + 1):
            acc = TrigPoly.zero()
            for i in range(total + 1):
                acc = acc + self.coefficient(i) * other.coefficient(total - i)
            out.append(acc)
        return FormalFunction(tuple(out))

    __rmul__ = __mul__

    def max_norm(self) -> float:
        return max(o.max_norm() for o in self.orders)

    def allclose(self, other: FormalFunction, tol: float = 1e-12) -> bool:
        return (self - other).max_norm() <= tol


# ------------------------
# sigma-dependent families
# ------------------------
@runtime_checkable
class SigmaFamily(Protocol):
    """A formal function depending on sigma, with its exact variation along V."""

    def at(self, sigma: TeichPoint) -> FormalFunction: ...

    def variation(self, sigma: TeichPoint, V: TangentVector) -> FormalFunction: ...


@dataclass(frozen=True, eq=False)
class ConstantFamily:
    f: FormalFunction

    def at(self, sigma: TeichPoint) -> FormalFunction:
        return self.f

    def variation(self, sigma: TeichPoint, V: TangentVector) -> FormalFunction:
        return FormalFunction.zero(self.f.order)


@dataclass(frozen=True, eq=False)
class TrivializedFamily:
    """sigma -> P_sigma(f) = f - (h/4) Delta_sigma f."""

    f: TrigPoly

    def at(self, sigma: TeichPoint) -> FormalFunction:
        return P_order1(sigma, self.f)

    def variation(self, sigma: TeichPoint, V: TangentVector) -> FormalFunction:
        d_lap = laplace_bivector(variation_inverse_metric(sigma, V), self.f)
        return FormalFunction((TrigPoly.zero(), d_lap * -0.25))


@dataclass(frozen=True, eq=False)
class StarProductFamily:
    """sigma -> f star~_sigma g for sigma-independent f and g."""

    f: FormalFunction
    g: FormalFunction
    n: int = CHERN_INTEGER

    def at(self, sigma: TeichPoint) -> FormalFunction:
        return star_tilde(self.f, self.g, sigma, n=self.n)

    def variation(self, sigma: TeichPoint, V: TangentVector) -> FormalFunction:
        d_c1 = c1_variation(sigma, V, self.f.coefficient(0), self.g.coefficient(0))
        return FormalFunction((TrigPoly.zero(), d_c1))


def _resolve(
    f: FormalFunction | SigmaFamily, sigma: TeichPoint, V: TangentVector
) -> tuple[FormalFunction, FormalFunction]:
    if isinstance(f, FormalFunction):
        return f, FormalFunction.zero(f.order)
    return f.at(sigma), f.variation(sigma, V)


# ------------------------
# Star product
# ------------------------
def star_tilde(
    f: FormalFunction,
    g: FormalFunction,
    sigma: TeichPoint,
    *,
    n: int = CHERN_INTEGER,
    order: int = STAR_ORDER,
) -> FormalFunction:
    """f star~ g through first order in h; higher orders have no closed form here."""
    if order > STAR_ORDER:
        raise TruncationError(f"star product is only available through order {STAR_ORDER}")
    f0, g0 = f.coefficient(0), g.coefficient(0)
    series = StarSeries((f0 * g0, c1_symbol(sigma, f0, g0)), ParamConvention.inverse_k)
    tilde = reparametrize_series(series, n) if n else series
    zeroth = tilde.terms[0]
    first = tilde.terms[1] + f0 * g.coefficient(1) + f.coefficient(1) * g0
    return FormalFunction((zeroth, first)).truncate(order)


# ------------------------
# Formal connection
# ------------------------
def bivector_pairing(B: np.ndarray, f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """B(df, dg) = B^{ab} d_a f d_b g."""
    fx, fy = f.gradient()
    gx, gy = g.gradient()
    return fx * gx * B[0, 0] + fx * gy * B[0, 1] + fy * gx * B[1, 0] + fy * gy * B[1, 1]


def _bivector_field(B: np.ndarray, F: TrigPoly) -> VectorField:
    """The vector field B dF."""
    Fx, Fy = F.gradient()
    return VectorField(Fx * B[0, 0] + Fy * B[0, 1], Fx * B[1, 0] + Fy * B[1, 1])


def formal_D(
    V: TangentVector,
    sigma: TeichPoint,
    f: FormalFunction | SigmaFamily,
    *,
    F: TrigPoly | None = None,
    n: int = CHERN_INTEGER,
    order: int = STAR_ORDER,
) -> FormalFunction:
    """D_V f = V[f] - (h/4) Delta_G~ f + (h/2) nabla_{G~ dF} f + V[F] *~ f - V[F] f
    - (h/2)(Delta_G~(F) *~ f + n V[F] *~ f - Delta_G~(F) f - n V[F] f).

    F is taken sigma-independent, so V[F] = 0. Output is truncated at `order`; order 2 is
    available only when F = 0, where every star-product term vanishes.
    """
    F = F if F is not None else TrigPoly.zero()
    flat = F.allclose(0.0)
    if order > MAX_ORDER or (order > STAR_ORDER and not flat):
        raise TruncationError(f"formal_D output order {order} is beyond the truncation order")
    value, variation = _resolve(f, sigma, V)
    G_tilde = g_bivectors(sigma, V).tilde.T

    lap = value.map(lambda o: laplace_bivector(G_tilde, o)) * -0.25
    drift = value.map(_bivector_field(G_tilde, F)) * 0.5
    V_F = FormalFunction.of(TrigPoly.zero())
    lap_F = FormalFunction.of(laplace_bivector(G_tilde, F))
    star_terms = star_tilde(V_F, value, sigma, n=n) - V_F * value
    correction = (
        star_tilde(lap_F, value, sigma, n=n)
        + star_tilde(V_F * n, value, sigma, n=n)
        - lap_F * value
        - V_F * n * value
    ) * -0.5

    F_terms = {
        "ricci_drift": drift.shift(),
        "ricci_star": star_terms,
        "ricci_correction": correction.shift(),
    }
    if flat:
        for name, term in F_terms.items():
            if term.max_norm() != 0.0:
                raise ConsistencyError(f"{name} vanishes for F = 0", term.max_norm())

    total = variation + lap.shift()
    for term in F_terms.values():
        total = total + term
    result = total.truncate(order)

    residual = (result.coefficient(0) - variation.coefficient(0)).max_norm()
    if residual > 0.0:
        raise ConsistencyError("order-0 part of D equals V[f_0]", residual)
    return result


def E_and_H(
    V: TangentVector,
    sigma: TeichPoint,
    f: TrigPoly,
    *,
    F: TrigPoly | None = None,
) -> tuple[TrigPoly, TrigPoly]:
    """E(V)(f) = -1/4 (Delta_G~(f) - 2 nabla_{G~ dF}(f) - 2 Delta_G~(F) f - 2n V[F] f), H = E(V)(1).

    F is sigma-independent, so the n V[F] terms drop out for every n.
    """
    F = F if F is not None else TrigPoly.zero()
    G_tilde = g_bivectors(sigma, V).tilde.T

    def apply(u: TrigPoly) -> TrigPoly:
        # V[F] = 0 for sigma-independent F
        inner = (
            laplace_bivector(G_tilde, u)
            - _bivector_field(G_tilde, F)(u) * 2.0
            - laplace_bivector(G_tilde, F) * u * 2.0
        )
        return inner * -0.25

    E_f = apply(f)
    H = apply(TrigPoly.constant(1.0))
    expected_H = laplace_bivector(G_tilde, F) * 0.5
    gap = (H - expected_H).max_norm()
    if gap > EXACT_TOL:
        raise ConsistencyError("H(V) = E(V)(1)", gap)
    return E_f, H


@dataclass(frozen=True)
class EHRow:
    k: int
    residual: float
    shadow: float


def _eh_row(V: TangentVector, sigma: TeichPoint, f: TrigPoly, k: int) -> EHRow:
    basis = theta_basis(k, sigma, check=False)
    N = basis.N
    G = holomorphic_bivector(sigma, V)
    G_bar = G.conj()
    f_grid = f.on_grid(N)
    E_f, _ = E_and_H(V, sigma, f)

    # pi o* f pi + pi f o pi with o = -Delta_G / 4
    adjoint_part = compress(basis, lambda v: -0.25 * laplace_section(G_bar, f_grid * v, k))
    direct_part = compress(basis, lambda v: -0.25 * f_grid * laplace_section(G, v, k))
    target = toeplitz(k, sigma, E_f, basis=basis).matrix
    scale = max(operator_norm(adjoint_part), operator_norm(direct_part), 1.0)
    residual = operator_norm(adjoint_part + direct_part - target) / scale

    # pi f Delta_G pi = pi Delta_G(f) pi
    lap_f = laplace_bivector(G, f).on_grid(N)
    shadow_lhs = compress(basis, lambda v: f_grid * laplace_section(G, v, k))
    shadow_rhs = compress(basis, lambda v: lap_f * v)
    shadow = operator_norm(shadow_lhs - shadow_rhs) / max(operator_norm(shadow_rhs), 1.0)
    return EHRow(k=k, residual=residual, shadow=shadow)


def eh_cross_validation(
    V: TangentVector, sigma: TeichPoint, f: TrigPoly, k_list: Sequence[int]
) -> tuple[list[EHRow], SlopeFit]:
    """Compare T_{E(V) f} with the compressed operator it is defined by, over a k sweep."""
    rows = ordered_map(lambda k: _eh_row(V, sigma, f, k), list(k_list))
    fit = fit_slope([r.k for r in rows], [r.residual for r in rows], floor=EH_FLOOR)
    logger.info(
        "formal.eh_cross_validation",
        extra={
            "event": "eh_cross_validation",
            "ks": list(k_list),
            "residuals": [r.residual for r in rows],
            "exact": fit.exact,
            "slope": fit.slope,
        },
    )
    if not fit.passes(-0.9):
        raise ConsistencyError("E(V) defining property converges", rows[-1].residual)
    return rows, fit


# ------------------------
# Trivialization
# ------------------------
def _xf_term(sigma: TeichPoint, F: TrigPoly, f: TrigPoly) -> TrigPoly:
    """i nabla_{X''_F} f."""
    _, anti = type_parts(sigma, hamiltonian_field(F))
    return anti(f) * 1j


def P_order1(sigma: TeichPoint, f: TrigPoly, *, F: TrigPoly | None = None) -> FormalFunction:
    """P(f) = f - h (Delta_sigma f / 4 + i nabla_{X''_F} f)."""
    F = F if F is not None else TrigPoly.zero()
    first = laplacian(sigma, f) * 0.25 + _xf_term(sigma, F, f)
    return FormalFunction((f, -first))


def P_inverse_order1(
    sigma: TeichPoint, u: FormalFunction, *, F: TrigPoly | None = None
) -> FormalFunction:
    """(Id + h P^(1)) u through first order."""
    F = F if F is not None else TrigPoly.zero()
    u0 = u.coefficient(0)
    correction = laplacian(sigma, u0) * 0.25 + _xf_term(sigma, F, u0)
    return FormalFunction((u0, u.coefficient(1) + correction))


@dataclass(frozen=True)
class FlatnessCheck:
    """First-order flatness of P and the finite-difference confirmation of V[Delta]."""

    flatness: float
    steps: tuple[float, ...]
    fd_residuals: tuple[float, ...]
    ratio: float

    def passes(self, lo: float = 3.7, hi: float = 4.3) -> bool:
        return self.flatness < EXACT_TOL and lo <= self.ratio <= hi


def trivialization_flatness(
    sigma: TeichPoint,
    V: TangentVector,
    f: TrigPoly,
    *,
    steps: Sequence[float] = (1e-2, 5e-3),
) -> FlatnessCheck:
    """Order-1 coefficient of D_V(P(f)) and ||V[Delta] f + Delta_G~ f|| at two step sizes."""
    parallel = formal_D(V, sigma, TrivializedFamily(f))
    flatness = parallel.coefficient(1).max_norm()

    G_tilde = g_bivectors(sigma, V).tilde.T
    exact = laplace_bivector(G_tilde, f) * -1.0
    fd = tuple(
        (variation_laplacian(sigma, V, f, step=step) - exact).max_norm() for step in steps
    )
    ratio = richardson_ratio(fd[0], fd[1])
    logger.info(
        "formal.trivialization",
        extra={
            "event": "trivialization_flatness",
            "flatness": flatness,
            "fd": list(fd),
            "ratio": ratio,
        },
    )
    return FlatnessCheck(flatness=flatness, steps=tuple(steps), fd_residuals=fd, ratio=ratio)


# ------------------------
# Induced star product
# ------------------------
def star_order1(f: TrigPoly, g: TrigPoly, sigma: TeichPoint) -> FormalFunction:
    """P^-1(P(f) star~ P(g)) through first order."""
    product = star_tilde(P_order1(sigma, f), P_order1(sigma, g), sigma)
    return P_inverse_order1(sigma, product)


def star_order1_direct(
    f: TrigPoly, g: TrigPoly, sigma: TeichPoint, *, F: TrigPoly | None = None
) -> FormalFunction:
    """fg + h (c1(f, g) - (f Delta g + g Delta f)/4 + Delta(fg)/4 + X''_F terms)."""
    F = F if F is not None else TrigPoly.zero()

    def lap(u: TrigPoly) -> TrigPoly:
        return laplacian(sigma, u)

    first = (
        c1_symbol(sigma, f, g)
        - (f * lap(g) + g * lap(f)) * 0.25
        + lap(f * g) * 0.25
        + _xf_term(sigma, F, f * g)
        - _xf_term(sigma, F, f) * g
        - f * _xf_term(sigma, F, g)
    )
    return FormalFunction((f * g, first))


def expected_star(f: TrigPoly, g: TrigPoly) -> FormalFunction:
    """fg - (i/2) h {f, g}."""
    return FormalFunction((f * g, poisson(f, g) * -0.5j))


def derivation_residual(
    V: TangentVector, sigma: TeichPoint, f: TrigPoly, g: TrigPoly
) -> float:
    """max |D_V(f *~ g) - D_V(f) *~ g - f *~ D_V(g)| over Fourier coefficients, orders <= 1."""
    ff, gg = FormalFunction.of(f), FormalFunction.of(g)
    lhs = formal_D(V, sigma, StarProductFamily(ff, gg))
    rhs = star_tilde(formal_D(V, sigma, ff), gg, sigma) + star_tilde(
        ff, formal_D(V, sigma, gg), sigma
    )
    return (lhs - rhs).truncate(STAR_ORDER).max_norm()


def c1_variation_residual(
    sigma: TeichPoint, V: TangentVector, f: TrigPoly, g: TrigPoly, *, step: float = 1e-5
) -> tuple[float, float]:
    """(|V[c1](f, g) - G~(df, dg)/2|, |V[c1] - central difference of c1|)."""
    exact = c1_variation(sigma, V, f, g)
    G_tilde = g_bivectors(sigma, V).tilde.T
    identity = (exact - bivector_pairing(G_tilde, f, g) * 0.5).max_norm()
    plus = c1_symbol(sigma.shifted(V, step), f, g)
    minus = c1_symbol(sigma.shifted(V, -step), f, g)
    fd = (exact - (plus - minus) / (2.0 * step)).max_norm()
    return identity, fd


@dataclass(frozen=True)
class EndoRow:
    k: int
    residual: float


def endo_formal_residual(
    f: TrigPoly,
    sigma: TeichPoint,
    V: TangentVector,
    k_list: Sequence[int],
    *,
    n: int = CHERN_INTEGER,
) -> tuple[list[EndoRow], SlopeFit]:
    """||nabla^e_V T_f - T_{(D_V f)_1} / (k + n/2)|| over a k sweep.

    On the torus n = 0 and the two sides agree exactly; any other n leaves an O(k^-2) gap.
    """
    first = formal_D(V, sigma, FormalFunction.of(f)).coefficient(1)

    def row(k: int) -> EndoRow:
        D = endo_derivative(f, sigma, V, k, method="closed").matrix
        target = toeplitz(k, sigma, first).matrix / (k + n / 2.0)
        return EndoRow(k=k, residual=operator_norm(D - target))

    rows = ordered_map(row, list(k_list))
    return rows, fit_slope([r.k for r in rows], [r.residual for r in rows], floor=1e-9)
