"""Hitchin connection on the bundle of level-k theta spaces over the upper half-plane.

u(V) = -1/(4k + 2n) (Delta_G(V) + 2 nabla_{G(V) dF} + 4k V'[F]), with n = 0 and F = 0 on the torus,
so u(V) = -Delta_G(V) / (4k). Parallel sections solve d/dt s = u(sigma(t))(sigma'(t)) s.
"""
from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from quantlab.domain.convergence import SlopeFit, fit_slope
from quantlab.domain.errors import (
    AccuracyError,
    DegenerateTraceError,
    ParameterDomainError,
    PreconditionError,
    StepSizeError,
)
from quantlab.domain.theta_sections import (
    GridSection,
    ThetaBasis,
    dolbeault_split,
    holomorphicity_residual,
    laplace_section,
    nabla_x,
    nabla_y,
    section_norm,
    theta_basis,
)
from quantlab.domain.toeplitz_calculus import (
    CompressedOp,
    operator_norm,
    toeplitz_closed_form,
    toeplitz_closed_form_variation,
    toeplitz_quadrature,
)
from quantlab.domain.torus_model import (
    CHERN_INTEGER,
    TangentVector,
    TeichPoint,
    symplectic_matrix,
    variation_I,
    variation_I_parts,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField
from quantlab.logging_conf import get_logger
from quantlab.parallel import ordered_map

__all__ = [
    "ConnectionOperator",
    "TransportLogRow",
    "TransportResult",
    "LoopDefect",
    "FlatnessRow",
    "holomorphic_bivector",
    "connection_operator",
    "eqcond_residual",
    "parallel_transport",
    "heat_flow_residual",
    "loop_defect",
    "standard_square_loop",
    "connection_matrix_closed_form",
    "endo_derivative",
    "toeplitz_flatness",
]

logger = get_logger("quantlab.hitchin")

HOLOMORPHIC_INPUT_TOL = 1e-7
HOLO_DRIFT_LIMIT = 1e-4
MIN_SIGMA2 = 0.05
DEFAULT_STEP_TOL = 1e-6
INITIAL_STEPS = 64
MAX_STEPS = 2**14
TRACE_FLOOR = 1e-8
CLOSE_TOL = 1e-12
FD_STEP = 1e-4

# classical fourth-order tableau
RK4_A = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]])
RK4_B = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
RK4_C = np.array([0.0, 0.5, 0.5, 1.0])

_W_INV = np.linalg.inv(symplectic_matrix())


def holomorphic_bivector(sigma: TeichPoint, V: TangentVector) -> np.ndarray:
    """G(V) = V'[I] W^-1, a constant multiple of d/dz (x) d/dz."""
    holo, _ = variation_I_parts(sigma, V)
    return holo @ _W_INV


# ------------------------
# Connection operator
# ------------------------
PotentialFamily = Callable[[TeichPoint], TrigPoly]


@dataclass(frozen=True, eq=False)
class ConnectionOperator:
    """u(V) = -1/(4k + 2n) (Delta_G(V) + 2 nabla_{G(V) dF} + 4k V'[F]).

    F is either a fixed trigonometric polynomial or a family sigma -> F_sigma; V'[F] is taken by
    central differences of the family and vanishes for a fixed F.
    """

    sigma: TeichPoint
    V: TangentVector
    k: int
    n: int = CHERN_INTEGER
    F: TrigPoly | PotentialFamily = field(default_factory=TrigPoly.zero)
    G: np.ndarray = field(init=False, repr=False)
    G_dF: VectorField = field(init=False, repr=False)
    V_F: TrigPoly = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ParameterDomainError(f"level k must be >= 1, got {self.k}")
        if self.n < 0:
            raise ParameterDomainError(f"n must be >= 0, got {self.n}")
        G = holomorphic_bivector(self.sigma, self.V)
        F = self.potential()
        fx, fy = F.gradient()
        object.__setattr__(self, "G", G)
        object.__setattr__(
            self, "G_dF", VectorField(fx * G[0, 0] + fy * G[0, 1], fx * G[1, 0] + fy * G[1, 1])
        )
        object.__setattr__(self, "V_F", self._holomorphic_variation())

    def potential(self) -> TrigPoly:
        return self.F if isinstance(self.F, TrigPoly) else self.F(self.sigma)

    def _holomorphic_variation(self) -> TrigPoly:
        """V'[F] = dsigma * dF/dsigma, with d/dsigma = (d/dsigma1 - i d/dsigma2) / 2."""
        if isinstance(self.F, TrigPoly) or self.V.dsigma == 0:
            return TrigPoly.zero()
        partial = []
        for direction in (TangentVector.d_sigma1(), TangentVector.d_sigma2()):
            plus = self.F(self.sigma.shifted(direction, FD_STEP))
            minus = self.F(self.sigma.shifted(direction, -FD_STEP))
            partial.append((plus - minus) / (2.0 * FD_STEP))
        return (partial[0] - partial[1] * 1j) * (0.5 * self.V.dsigma)

    def ricci_terms(self) -> tuple[float, float]:
        """(max |G(V) dF|, max |V'[F]|) over Fourier coefficients."""
        return max(self.G_dF.x.max_norm(), self.G_dF.y.max_norm()), self.V_F.max_norm()

    @property
    def prefactor(self) -> float:
        return -1.0 / (4.0 * self.k + 2.0 * self.n)

    def _dF_term(self, values: np.ndarray) -> np.ndarray:
        """2 nabla_{G dF} s."""
        cx, cy = self.G_dF.components_on_grid(values.shape[-1])
        return 2.0 * (cx * nabla_x(values, self.k) + cy * nabla_y(values, self.k))

    def _potential_term(self, values: np.ndarray) -> np.ndarray:
        """4k V'[F] s."""
        return 4.0 * self.k * self.V_F.on_grid(values.shape[-1]) * values

    def apply(self, values: np.ndarray) -> np.ndarray:
        """u(V) on grid samples; accepts a single section or a stack along the leading axis."""
        if self.V.dsigma == 0:
            return np.zeros_like(values, dtype=complex)
        total = laplace_section(self.G, values, self.k)
        dF, VF = self.ricci_terms()
        # both vanish for the constant Ricci potential of the flat torus
        if dF > 0.0:
            total = total + self._dF_term(values)
        if VF > 0.0:
            total = total + self._potential_term(values)
        return self.prefactor * total

    def __call__(self, s: GridSection) -> GridSection:
        return GridSection(s.k, self.apply(s.values))


def connection_operator(
    sigma: TeichPoint,
    V: TangentVector,
    k: int,
    *,
    n: int = CHERN_INTEGER,
    F: TrigPoly | PotentialFamily | None = None,
) -> ConnectionOperator:
    return ConnectionOperator(
        sigma=sigma, V=V, k=k, n=n, F=F if F is not None else TrigPoly.zero()
    )


# ------------------------
# Preservation of holomorphic sections
# ------------------------
def eqcond_residual(
    sigma: TeichPoint,
    V: TangentVector,
    k: int,
    s: GridSection,
    *,
    part: Literal["full", "antiholomorphic"] = "full",
) -> float:
    """||(i/2) V[I] nabla^{1,0} s + nabla^{0,1} u(V) s|| / ||s|| for holomorphic s.

    part="antiholomorphic" keeps only V''[I] and u = 0, which must vanish on its own.
    """
    holo = holomorphicity_residual(sigma, s)
    if holo >= HOLOMORPHIC_INPUT_TOL:
        raise PreconditionError(f"section is not holomorphic (residual {holo:.3e})")
    if V.dsigma == 0:
        return 0.0

    dI = variation_I(sigma, V).T if part == "full" else variation_I_parts(sigma, V)[1]
    one_zero, _ = dolbeault_split(sigma, s)
    total = one_zero.compose(dI) * 0.5j
    if part == "full":
        us = connection_operator(sigma, V, k)(s)
        _, moved = dolbeault_split(sigma, us)
        total = total + moved
    return total.norm() / s.norm()


# ------------------------
# Parallel transport
# ------------------------
@dataclass(frozen=True)
class TransportLogRow:
    t: float
    sigma1: float
    sigma2: float
    holo_residual: float
    drift: float


@dataclass(frozen=True, eq=False)
class TransportResult:
    path: tuple[TeichPoint, ...]
    k: int
    steps: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    max_holo_residual: float
    max_drift: float
    drift_per_length: float
    log: tuple[TransportLogRow, ...] = field(repr=False)

    @property
    def scalar(self) -> complex:
        return complex(np.trace(self.matrix) / self.k)


def _rk4_step(
    rhs: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float
) -> np.ndarray:
    stages = np.empty((4,) + y.shape, dtype=complex)
    for i, (a, c) in enumerate(zip(RK4_A, RK4_C, strict=True)):
        dy = np.tensordot(a[:i], stages[:i], axes=1) if i else 0.0
        stages[i] = rhs(t + c * h, y + h * dy)
    return y + h * np.tensordot(RK4_B, stages, axes=1)


def _stack_holo_residual(basis: ThetaBasis, stack: np.ndarray) -> float:
    return max(holomorphicity_residual(basis.sigma, GridSection(basis.k, s)) for s in stack)


def _reproject(basis: ThetaBasis, stack: np.ndarray) -> tuple[np.ndarray, float]:
    """Orthogonal projection of every section onto H^0 and the largest relative change."""
    ortho = basis.orthonormal_values()
    out = np.empty_like(stack)
    drift = 0.0
    for j, s in enumerate(stack):
        coeffs = basis.orthonormal_coefficients(s)
        out[j] = np.tensordot(coeffs, ortho, axes=1)
        drift = max(drift, section_norm(s - out[j]) / section_norm(s))
    return out, drift


def _integrate_segment(
    start: TeichPoint,
    end: TeichPoint,
    k: int,
    N: int,
    state: np.ndarray,
    steps: int,
    t0: float,
) -> tuple[np.ndarray, list[TransportLogRow]]:
    V = TangentVector(end.sigma - start.sigma)
    h = 1.0 / steps

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        return connection_operator(start.shifted(V, t), V, k).apply(y)

    rows: list[TransportLogRow] = []
    y = state
    for i in range(steps):
        t = i * h
        y = _rk4_step(rhs, t, y, h)
        here = start.shifted(V, t + h)
        basis = theta_basis(k, here, N=N, check=False)
        holo = _stack_holo_residual(basis, y)
        if holo > HOLO_DRIFT_LIMIT:
            raise AccuracyError(
                f"transported sections left H^0 (residual {holo:.3e}); "
                "use more steps or a finer grid",
                residual=holo,
            )
        y, drift = _reproject(basis, y)
        logger.debug(
            "transport.step",
            extra={"event": "transport_step", "t": t0 + t + h, "holo": holo, "drift": drift},
        )
        rows.append(TransportLogRow(t0 + t + h, here.sigma1, here.sigma2, holo, drift))
    return y, rows


def parallel_transport(
    path: Sequence[TeichPoint],
    k: int,
    step_tol: float = DEFAULT_STEP_TOL,
    *,
    N: int | None = None,
    initial_steps: int = INITIAL_STEPS,
    max_steps: int = MAX_STEPS,
) -> TransportResult:
    """Transport the orthonormal frame at path[0] along the polyline.

    Each segment starts with `initial_steps` RK4 steps and doubles until the endpoint matrix
    moves by less than `step_tol`. Sections are re-projected onto H^0 after every step.
    """
    if len(path) < 2:
        raise ParameterDomainError("a path needs at least two points")
    if any(p.sigma2 <= MIN_SIGMA2 for p in path):
        raise ParameterDomainError(f"path must stay in sigma2 > {MIN_SIGMA2}")
    if not step_tol > 0:
        raise ParameterDomainError("step_tol must be > 0")

    first = theta_basis(k, path[0], N=N)
    N = first.N
    state = first.orthonormal_values()
    log: list[TransportLogRow] = []
    used: list[int] = []
    for index, (a, b) in enumerate(zip(path[:-1], path[1:], strict=True)):
        end_basis = theta_basis(k, b, N=N, check=False)
        if a == b:
            used.append(0)
            continue
        steps = initial_steps
        prev_state, prev_rows = _integrate_segment(a, b, k, N, state, steps, float(index))
        prev_matrix = _frame_matrix(end_basis, prev_state)
        while True:
            if 2 * steps > max_steps:
                raise AccuracyError(
                    f"step refinement did not settle below {step_tol:g} within {max_steps} steps",
                    residual=float("nan"),
                )
            steps *= 2
            new_state, new_rows = _integrate_segment(a, b, k, N, state, steps, float(index))
            new_matrix = _frame_matrix(end_basis, new_state)
            change = float(np.max(np.abs(new_matrix - prev_matrix)))
            logger.info(
                "transport.refine",
                extra={
                    "event": "transport_refine",
                    "segment": index,
                    "steps": steps,
                    "change": change,
                },
            )
            prev_state, prev_rows, prev_matrix = new_state, new_rows, new_matrix
            if change < step_tol:
                break
        state = prev_state
        log.extend(prev_rows)
        used.append(steps)

    final_basis = theta_basis(k, path[-1], N=N, check=False)
    matrix = _frame_matrix(final_basis, state)
    smallest = float(np.linalg.svd(matrix, compute_uv=False)[-1])
    if smallest <= TRACE_FLOOR:
        raise AccuracyError("transport matrix is singular", residual=smallest)

    length = sum(abs(b.sigma - a.sigma) for a, b in zip(path[:-1], path[1:], strict=True))
    total_drift = sum(r.drift for r in log)
    result = TransportResult(
        path=tuple(path),
        k=k,
        steps=tuple(used),
        matrix=matrix,
        max_holo_residual=max((r.holo_residual for r in log), default=0.0),
        max_drift=max((r.drift for r in log), default=0.0),
        drift_per_length=total_drift / length if length > 0 else 0.0,
        log=tuple(log),
    )
    logger.info(
        "transport.done",
        extra={
            "event": "transport_done",
            "k": k,
            "segments": len(path) - 1,
            "steps": list(used),
            "max_holo_residual": result.max_holo_residual,
            "drift_per_length": result.drift_per_length,
        },
    )
    return result


def _frame_matrix(basis: ThetaBasis, stack: np.ndarray) -> np.ndarray:
    """M_ij = <s_j, e_i> in the orthonormal frame at the basis point."""
    return np.stack([basis.orthonormal_coefficients(s) for s in stack], axis=1)


def heat_flow_residual(result: TransportResult) -> float:
    """Distance of the transported frame from one common multiple of the endpoint frame."""
    return _scalar_defect(result.matrix)


def _scalar_defect(M: np.ndarray) -> float:
    k = M.shape[0]
    scalar = np.trace(M) / k
    if abs(scalar) < TRACE_FLOOR:
        raise DegenerateTraceError(
            f"|tr M / k| = {abs(scalar):.3e} below {TRACE_FLOOR:g}", residual=abs(scalar)
        )
    return operator_norm(M - scalar * np.eye(k)) / abs(scalar)


# ------------------------
# Projective flatness
# ------------------------
@dataclass(frozen=True)
class LoopDefect:
    k: int
    defect: float
    deviation: float
    scalar: complex
    steps: tuple[int, ...]


def standard_square_loop(center: complex = 1j, side: float = 0.2) -> list[TeichPoint]:
    half = side / 2.0
    corners = [(-half, -half), (half, -half), (half, half), (-half, half), (-half, -half)]
    return [TeichPoint.from_complex(center + complex(dx, dy)) for dx, dy in corners]


def loop_defect(loop: Sequence[TeichPoint], k: int, **transport_kwargs) -> LoopDefect:
    """||M - (tr M / k) Id|| / |tr M / k| for the holonomy M around a closed polyline."""
    if len(loop) < 2 or abs(loop[0].sigma - loop[-1].sigma) > CLOSE_TOL:
        raise ParameterDomainError("loop must start and end at the same point")
    result = parallel_transport(loop, k, **transport_kwargs)
    M = result.matrix
    defect = _scalar_defect(M)
    deviation = operator_norm(M - np.eye(k))
    logger.info(
        "transport.loop_defect",
        extra={"event": "loop_defect", "k": k, "defect": defect, "deviation": deviation},
    )
    return LoopDefect(
        k=k, defect=defect, deviation=deviation, scalar=result.scalar, steps=result.steps
    )


# ------------------------
# Induced connection on endomorphisms
# ------------------------
def connection_matrix_closed_form(sigma: TeichPoint, V: TangentVector, k: int) -> np.ndarray:
    """<V[e_j] - u(V) e_j, e_i> for the orthonormal theta frame: a multiple of the identity."""
    ds = V.dsigma
    scalar = (1j * ds + ds.imag) / (4.0 * sigma.sigma2)
    return scalar * np.eye(k, dtype=complex)


def _connection_matrix_grid(
    sigma: TeichPoint, V: TangentVector, k: int, step: float, N: int | None
) -> np.ndarray:
    plus = theta_basis(k, sigma.shifted(V, step), N=N, check=False).orthonormal_values()
    minus = theta_basis(k, sigma.shifted(V, -step), N=N, check=False).orthonormal_values()
    basis = theta_basis(k, sigma, N=N, check=False)
    d_frame = (plus - minus) / (2.0 * step)
    u = connection_operator(sigma, V, k)
    moved = d_frame - u.apply(basis.orthonormal_values())
    return _frame_matrix(basis, moved)


def _grid_endo(
    f: TrigPoly, sigma: TeichPoint, V: TangentVector, k: int, step: float, N: int | None
) -> np.ndarray:
    def matrix_at(point: TeichPoint) -> np.ndarray:
        return toeplitz_quadrature(theta_basis(k, point, N=N, check=False), f).matrix

    plus = matrix_at(sigma.shifted(V, step))
    minus = matrix_at(sigma.shifted(V, -step))
    here = matrix_at(sigma)
    dM = (plus - minus) / (2.0 * step)
    A = _connection_matrix_grid(sigma, V, k, step, N)
    return dM + A @ here - here @ A


def endo_derivative(
    f: TrigPoly,
    sigma: TeichPoint,
    V: TangentVector,
    k: int,
    *,
    method: Literal["closed", "grid"] = "closed",
    step: float = FD_STEP,
    N: int | None = None,
) -> CompressedOp:
    """Matrix of the induced connection applied to T_f: V[M] + [A, M] in the orthonormal frame.

    `grid` takes central differences of quadrature matrices and builds A from u(V) on the grid,
    checking the result against the half step. `closed` differentiates the closed-form matrix
    exactly and uses the scalar connection matrix.
    """
    if method == "closed":
        here = toeplitz_closed_form(k, sigma, f).matrix
        A = connection_matrix_closed_form(sigma, V, k)
        D = toeplitz_closed_form_variation(k, sigma, V, f) + A @ here - here @ A
        return CompressedOp(k, sigma, D, closed_form=True)
    if method != "grid":
        raise ParameterDomainError(f"unknown method {method!r}")

    coarse = _grid_endo(f, sigma, V, k, step, N)
    fine = _grid_endo(f, sigma, V, k, step / 2.0, N)
    gap = float(np.max(np.abs(coarse - fine)))
    if gap > 1e-6 + 1e-3 * float(np.max(np.abs(fine))):
        raise StepSizeError(f"central differences unstable at step {step:g} (change {gap:.3e})")
    return CompressedOp(k, sigma, fine, closed_form=False)


@dataclass(frozen=True)
class FlatnessRow:
    k: int
    norm: float


def toeplitz_flatness(
    f: TrigPoly,
    k_list: Sequence[int],
    *,
    sigma: TeichPoint | None = None,
    V: TangentVector | None = None,
    method: Literal["closed", "grid"] = "closed",
) -> tuple[list[FlatnessRow], SlopeFit]:
    """log ||nabla^e_V T_f|| against log k; O(1/k) means slope near -1."""
    sigma = sigma if sigma is not None else TeichPoint(0.0, 1.0)
    V = V if V is not None else TangentVector.d_sigma2()

    def row(k: int) -> FlatnessRow:
        D = endo_derivative(f, sigma, V, k, method=method)
        return FlatnessRow(k=k, norm=operator_norm(D))

    rows = ordered_map(row, list(k_list))
    fit = fit_slope([r.k for r in rows], [r.norm for r in rows])
    logger.info(
        "hitchin.flatness",
        extra={"event": "toeplitz_flatness", "ks": list(k_list), "slope": fit.slope},
    )
    return rows, fit
