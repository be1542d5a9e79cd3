"""Verification suites behind the runner subcommands.

Each suite turns a `RunConfig` into a `SuiteOutcome`: pass/fail checks plus the data
tables and matrices the run writes next to its report. A `QuantLabError` raised while a
check is computed is recorded as a failed check carrying the error code; it never aborts
the rest of the suite.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from quantlab.domain.errors import QuantLabError
from quantlab.domain.formal_hitchin import (
    FormalFunction,
    c1_variation_residual,
    derivation_residual,
    eh_cross_validation,
    endo_formal_residual,
    expected_star,
    formal_D,
    star_order1,
    star_order1_direct,
    trivialization_flatness,
)
from quantlab.domain.hitchin_connection import (
    endo_derivative,
    eqcond_residual,
    heat_flow_residual,
    loop_defect,
    parallel_transport,
    standard_square_loop,
    toeplitz_flatness,
)
from quantlab.domain.modular_data import (
    Label,
    cartan_point,
    curve_spectrum,
    dual,
    quantum_dimension,
    s_matrix,
    schur_jacobi_trudi,
    verlinde_dim,
    weyl_dimension,
)
from quantlab.domain.theta_sections import (
    gram_closed_form,
    holomorphicity_residual,
    theta_basis,
)
from quantlab.domain.toeplitz_calculus import (
    StarSeries,
    abelian_curve_operator_gap,
    c1_hamiltonian,
    c1_modes,
    c1_symbol,
    compressed_identities,
    expansion_residual,
    mode_product_phase,
    operator_norm,
    reparametrize_series,
    toeplitz_closed_form,
    toeplitz_quadrature,
)
from quantlab.domain.torus_model import (
    TangentVector,
    TeichPoint,
    g_bivectors,
    holomorphic_frame,
    poisson,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField
from quantlab.logging_conf import get_logger
from quantlab.reports.models import CheckResult, Table
from quantlab.runner.types import RunConfig

logger = get_logger(__name__)

__all__ = ["MatrixArtifact", "SUITES", "SuiteOutcome", "run_suite", "su2_closed_form"]

S_TOL = 1e-10
VERLINDE_TOL = 1e-6
HOLO_TOL = 1e-8
GRAM_TOL = 1e-10
GRAM_CLOSED_TOL = 1e-8
IDENTITY_TOL = 1e-6
EQCOND_TOL = 1e-5
EXACT_TOL = 1e-12
LOOP_TOL = 1e-3
TRANSPORT_TOL = 1e-4
SLOPE_ORDER0 = -0.9
SLOPE_ORDER1 = -1.8
CLASSICAL_K = 4096

DEFAULT_SIGMAS = (1j, 1 + 1j, 0.3 + 0.7j)


@dataclass(frozen=True, eq=False)
class MatrixArtifact:
    name: str
    matrix: np.ndarray
    rows: list[str]
    cols: list[str]


@dataclass
class SuiteOutcome:
    command: str
    checks: list[CheckResult] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    matrices: list[MatrixArtifact] = field(default_factory=list)

    def guard(
        self, check: str, fn: Callable[[], Iterable[CheckResult] | None], **inputs
    ) -> None:
        """Run `fn`, keeping its checks; a QuantLabError becomes one failed check."""
        try:
            produced = fn()
        except QuantLabError as e:
            logger.warning(
                "suite.check_error",
                extra={"event": "check_error", "check": check, "code": e.code, "error": str(e)},
            )
            self.checks.append(CheckResult.failure(check, e, **inputs))
            return
        if produced is not None:
            self.checks.extend(produced)

    def table(self, name: str, columns: list[str]) -> Table:
        table = Table(name=name, columns=columns, rows=[])
        self.tables.append(table)
        return table


# ------------------------
# Shared inputs
# ------------------------
def _sigmas(config: RunConfig, default: Iterable[complex] = DEFAULT_SIGMAS) -> list[TeichPoint]:
    if config.sigma is not None:
        return [TeichPoint(*config.sigma)]
    return [TeichPoint.from_complex(s) for s in default]


def _rng(config: RunConfig, *salt: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, *salt])


def _symbol_pairs() -> list[tuple[str, TrigPoly, TrigPoly]]:
    return [
        ("cos_x|cos_y", TrigPoly.cos(1, 0), TrigPoly.cos(0, 1)),
        (
            "sin_xy|cos_x+cos_2y",
            TrigPoly.sin(1, 1),
            TrigPoly.cos(1, 0) + TrigPoly.cos(0, 2) * 0.5,
        ),
        (
            "cos_x+sin_y|cos_x-sin_xy",
            TrigPoly.cos(1, 0) + TrigPoly.sin(0, 1) * 0.5,
            TrigPoly.cos(1, 0) - TrigPoly.sin(1, 1) * 0.25,
        ),
    ]


def _test_symbol() -> TrigPoly:
    return TrigPoly.cos(1, 0) + TrigPoly.sin(0, 1) * 0.5


def su2_closed_form(k: int) -> np.ndarray:
    """sqrt(2/(k+2)) sin((a+1)(b+1) pi/(k+2)) in graded label order."""
    idx = np.arange(k + 1) + 1
    return math.sqrt(2.0 / (k + 2)) * np.sin(np.outer(idx, idx) * math.pi / (k + 2))


# ------------------------
# Modular data
# ------------------------
def run_smatrix(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("smatrix")
    explicit = config.n is not None or config.k is not None or config.k_list is not None
    if explicit:
        n = config.n if config.n is not None else 2
        pairs = [(n, k) for k in config.levels([1])]
    else:
        pairs = [(n, k) for n in (2, 3) for k in range(21)] + [(4, k) for k in range(7)]
    tol = config.tol("smatrix", S_TOL)
    residuals = out.table(
        "smatrix_residuals",
        ["n", "k", "labels", "unitarity", "symmetry", "s_squared_dual", "first_row_positive"],
    )

    for n, k in pairs:

        def one(n: int = n, k: int = k) -> list[CheckResult]:
            data = s_matrix(n, k)
            res = data.residuals()
            residuals.rows.append([n, k, len(data.labels), *res.values()])
            worst = max(res, key=res.get)
            check = CheckResult.below("smatrix.invariants", res[worst], tol, n=n, k=k)
            check.message = f"worst invariant: {worst}"
            checks = [check]
            if n == 2:
                gap = float(np.max(np.abs(data.S - su2_closed_form(k))))
                checks.append(CheckResult.below("smatrix.su2_closed_form", gap, tol, k=k))
            if explicit:
                names = [str(lab) for lab in data.labels]
                out.matrices.append(MatrixArtifact(f"smatrix_n{n}_k{k}", data.S, names, names))
            return checks

        out.guard("smatrix.invariants", one, n=n, k=k)
    return out


def run_curve_spectrum(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("curve-spectrum")
    n = config.n if config.n is not None else 2
    k = config.k if config.k is not None else 2
    lam = Label(config.labels[0]) if config.labels else Label((1,))
    tol = config.tol("curve_spectrum", S_TOL)
    inputs = {"n": n, "k": k, "label": str(lam)}
    table = out.table("curve_spectrum", ["mu", "eigenvalue"])

    def spectrum() -> list[CheckResult]:
        values = curve_spectrum(lam, n, k)
        table.rows.extend([str(mu), value] for value, mu in values)
        # characters at the Cartan points, through the Jacobi-Trudi path
        cartan = max(
            abs(value - schur_jacobi_trudi(lam, cartan_point(mu, n, k).eigenvalues))
            for value, mu in values
        )
        bound = max(0.0, max(abs(v) for v, _ in values) - weyl_dimension(lam, n))
        checks = [
            CheckResult.below("curve_spectrum.cartan_character", cartan, tol, **inputs),
            CheckResult.below("curve_spectrum.character_bound", bound, tol, **inputs),
        ]
        if dual(lam, n, k) == lam:
            imag = max(abs(v.imag) for v, _ in values)
            checks.append(CheckResult.below("curve_spectrum.self_dual_real", imag, tol, **inputs))
        return checks

    def classical_limit() -> list[CheckResult]:
        gap = abs(quantum_dimension(lam, n, CLASSICAL_K) - weyl_dimension(lam, n))
        return [
            CheckResult.below(
                "curve_spectrum.classical_limit", gap, 1e-3, n=n, k=CLASSICAL_K, label=str(lam)
            )
        ]

    out.guard("curve_spectrum.cartan_character", spectrum, **inputs)
    out.guard("curve_spectrum.classical_limit", classical_limit, **inputs)
    return out


def run_verlinde(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("verlinde")
    n = config.n if config.n is not None else 2
    genera = [config.genus] if config.genus is not None else [0, 1, 2, 3]
    boundary = [Label(rows) for rows in config.labels]
    tol = config.tol("verlinde", VERLINDE_TOL)
    table = out.table("verlinde", ["n", "k", "genus", "value", "nearest", "deviation"])

    for k in config.levels(list(range(1, 13))):

        def one(k: int = k) -> list[CheckResult]:
            data = s_matrix(n, k)
            checks = []
            for g in genera:
                result = verlinde_dim(n, k, g, boundary, data=data)
                table.rows.append([n, k, g, result.value, result.nearest, result.deviation])
                checks.append(
                    CheckResult.below(
                        "verlinde.integrality", result.deviation, tol, n=n, k=k, genus=g
                    )
                )
                if n == 2 and k == 1 and g == 2 and not boundary:
                    checks.append(
                        CheckResult.below(
                            "verlinde.su2_k1_genus2", abs(result.value - 4.0), tol, n=n, k=k
                        )
                    )
            return checks

        out.guard("verlinde.integrality", one, n=n, k=k)
    return out


# ------------------------
# Theta sections
# ------------------------
def run_gram_check(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("gram-check")
    table = out.table(
        "theta_basis",
        ["k", "sigma", "N", "truncation", "holo_residual", "gram_offdiag", "gram_closed_form"],
    )
    levels = config.levels(list(range(1, 17)))
    for sigma in _sigmas(config):
        worst = {"holo": 0.0, "offdiag": 0.0, "closed": 0.0}
        for k in levels:

            def one(k: int = k, sigma: TeichPoint = sigma) -> None:
                basis = theta_basis(k, sigma, N=config.N, check=False)
                holo = max(holomorphicity_residual(sigma, basis.section(j)) for j in range(k))
                diag = np.diag(basis.gram).real
                off = np.abs(basis.gram - np.diag(np.diag(basis.gram)))
                offdiag = float(np.max(off) / np.max(diag))
                closed = gram_closed_form(k, sigma)
                agree = float(np.max(np.abs(diag - closed)) / closed)
                table.rows.append([k, str(sigma), basis.N, basis.truncation, holo, offdiag, agree])
                worst["holo"] = max(worst["holo"], holo)
                worst["offdiag"] = max(worst["offdiag"], offdiag)
                worst["closed"] = max(worst["closed"], agree)

            out.guard("theta.basis", one, k=k, sigma=str(sigma))
        inputs = {"sigma": str(sigma), "k_list": levels}
        out.checks += [
            CheckResult.below(
                "theta.holomorphicity", worst["holo"], config.tol("holo", HOLO_TOL), **inputs
            ),
            CheckResult.below(
                "theta.gram_diagonal", worst["offdiag"], config.tol("gram", GRAM_TOL), **inputs
            ),
            CheckResult.below(
                "theta.gram_closed_form",
                worst["closed"],
                config.tol("gram_closed_form", GRAM_CLOSED_TOL),
                **inputs,
            ),
        ]
    return out


# ------------------------
# Toeplitz calculus
# ------------------------
def run_toeplitz(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("toeplitz")
    f = TrigPoly.cos(1, 0) + TrigPoly.sin(1, 1) * 0.5 + TrigPoly.cos(0, 1) * 0.25
    paths = out.table("toeplitz_paths", ["k", "sigma", "closed_vs_quadrature"])
    sigmas = _sigmas(config, (1j, 1 + 1j))

    for sigma in sigmas:
        for k in config.levels([4, 8, 12]):

            def agree(k: int = k, sigma: TeichPoint = sigma) -> list[CheckResult]:
                closed = toeplitz_closed_form(k, sigma, f)
                quad = toeplitz_quadrature(theta_basis(k, sigma, N=config.N), f)
                gap = float(np.max(np.abs(closed.matrix - quad.matrix)))
                paths.rows.append([k, str(sigma), gap])
                return [
                    CheckResult.below(
                        "toeplitz.closed_vs_quadrature",
                        gap,
                        config.tol("toeplitz", 1e-8),
                        k=k,
                        sigma=str(sigma),
                    )
                ]

            out.guard("toeplitz.closed_vs_quadrature", agree, k=k, sigma=str(sigma))

    modes = [((1, 0), (0, 1)), ((1, 1), (-1, 2)), ((2, -1), (1, 1))]
    for sigma in sigmas:

        def product_rule(sigma: TeichPoint = sigma) -> list[CheckResult]:
            worst = 0.0
            for k in (8, 12):
                for a, b in modes:
                    Ta = toeplitz_closed_form(k, sigma, TrigPoly.mode(*a)).matrix
                    Tb = toeplitz_closed_form(k, sigma, TrigPoly.mode(*b)).matrix
                    ab = (a[0] + b[0], a[1] + b[1])
                    Tab = toeplitz_closed_form(k, sigma, TrigPoly.mode(*ab)).matrix
                    phase = mode_product_phase(k, sigma, a, b)
                    worst = max(worst, float(np.max(np.abs(Ta @ Tb - phase * Tab))))
            return [
                CheckResult.below("toeplitz.mode_product_rule", worst, S_TOL, sigma=str(sigma))
            ]

        out.guard("toeplitz.mode_product_rule", product_rule, sigma=str(sigma))

    def abelian() -> list[CheckResult]:
        sigma = _sigmas(config, (1j,))[0]
        levels = config.k_list if config.k_list is not None else [8, 16, 32, 64, 128]
        rows, fit = abelian_curve_operator_gap(levels, sigma)
        gaps = out.table("abelian_gap", ["k", "gap", "closed_form", "unitarity"])
        gaps.rows.extend([r.k, r.gap, r.closed_form, r.unitarity] for r in rows)
        inputs = {"sigma": str(sigma), "k_list": list(levels)}
        closed = max(abs(r.gap - r.closed_form) for r in rows)
        return [
            CheckResult.at_most(
                "abelian.gap_slope", fit.slope, SLOPE_ORDER0, exact=fit.exact, **inputs
            ),
            CheckResult.below("abelian.gap_closed_form", closed, 1e-8, **inputs),
            CheckResult.below(
                "abelian.unitarity", max(r.unitarity for r in rows), S_TOL, **inputs
            ),
        ]

    out.guard("abelian.gap_slope", abelian)
    return out


def _holomorphic_field(sigma: TeichPoint, h: TrigPoly) -> VectorField:
    vx, vy = holomorphic_frame(sigma).dz_vec
    return VectorField.along(h, complex(vx), complex(vy))


def run_identities(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("identities")
    table = out.table("identities", ["k", "sigma", "identity", "residual", "tolerance"])
    tol = config.tol("identities", IDENTITY_TOL)
    for sigma in _sigmas(config, (1j, 1 + 1j)):
        for k in config.levels(list(range(1, 13))):

            def one(k: int = k, sigma: TeichPoint = sigma) -> list[CheckResult]:
                rng = _rng(config, k)
                X, X1, X2 = (_holomorphic_field(sigma, TrigPoly.random(rng, 1)) for _ in range(3))
                general = VectorField(TrigPoly.random(rng, 1, real=True),
                                      TrigPoly.random(rng, 1, real=True))
                B = g_bivectors(sigma, TangentVector.d_sigma1()).holomorphic.T
                basis = theta_basis(k, sigma, N=config.N if config.N is not None else 16 * k)
                results = compressed_identities(
                    k, sigma, X, X1, X2, B,
                    rng=rng, batch=20, general=general, basis=basis, tolerance=tol,
                )
                checks = []
                for r in results:
                    table.rows.append([k, str(sigma), r.name, r.residual, r.tolerance])
                    checks.append(
                        CheckResult.below(
                            f"identities.{r.name}", r.residual, r.tolerance,
                            k=k, sigma=str(sigma), seed=config.seed,
                        )
                    )
                return checks

            out.guard("identities", one, k=k, sigma=str(sigma))
    return out


def run_star_residual(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("star-residual")
    sigma = _sigmas(config, (1j,))[0]
    levels = config.k_list if config.k_list is not None else [16, 32, 64, 128]
    table = out.table("star_residual", ["pair", "k", "e0", "e1"])

    for name, f, g in _symbol_pairs():
        inputs = {"pair": name, "sigma": str(sigma), "k_list": list(levels)}

        def expansion(f: TrigPoly = f, g: TrigPoly = g, name: str = name) -> list[CheckResult]:
            rows, fit0, fit1 = expansion_residual(f, g, sigma, levels)
            table.rows.extend([name, r.k, r.e0, r.e1] for r in rows)
            return [
                CheckResult.at_most(
                    "star.order0_slope", fit0.slope, SLOPE_ORDER0, exact=fit0.exact,
                    pair=name, sigma=str(sigma), k_list=list(levels),
                ),
                CheckResult.at_most(
                    "star.order1_slope", fit1.slope, SLOPE_ORDER1, exact=fit1.exact,
                    pair=name, sigma=str(sigma), k_list=list(levels),
                ),
            ]

        def axioms(f: TrigPoly = f, g: TrigPoly = g, name: str = name) -> list[CheckResult]:
            c1 = c1_symbol(sigma, f, g)
            antisym = (c1 - c1_symbol(sigma, g, f) + poisson(f, g) * 1j).max_norm()
            paths = max(
                (c1 - c1_modes(sigma, f, g)).max_norm(),
                (c1 - c1_hamiltonian(sigma, f, g)).max_norm(),
            )
            return [
                CheckResult.below("star.c1_antisymmetry", antisym, EXACT_TOL, pair=name),
                CheckResult.below("star.c1_three_paths", paths, EXACT_TOL, pair=name),
            ]

        out.guard("star.order0_slope", expansion, **inputs)
        out.guard("star.c1_antisymmetry", axioms, pair=name)

    def reparametrization() -> list[CheckResult]:
        rng = _rng(config, 2)
        terms = tuple(TrigPoly.random(rng, 2) for _ in range(3))
        checks = []
        for n in (0, 1, 2, 3):
            shifted = reparametrize_series(StarSeries(terms), n).terms
            residual = max(
                (shifted[0] - terms[0]).max_norm(),
                (shifted[1] - terms[1]).max_norm(),
                (shifted[2] - terms[2] - terms[1] * (n / 2.0)).max_norm(),
            )
            checks.append(CheckResult.below("star.reparametrization", residual, EXACT_TOL, n=n))
        return checks

    out.guard("star.reparametrization", reparametrization)
    return out


# ------------------------
# Hitchin connection
# ------------------------
def run_eqcond(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("eqcond")
    table = out.table("eqcond", ["k", "sigma", "direction", "full", "antiholomorphic"])
    tol = config.tol("eqcond", EQCOND_TOL)
    directions = {"d_sigma1": TangentVector.d_sigma1(), "d_sigma2": TangentVector.d_sigma2()}
    levels = config.levels(list(range(1, 13)))
    for sigma in _sigmas(config, (1j, 1 + 1j)):
        for label, V in directions.items():
            worst = {"full": 0.0, "antiholomorphic": 0.0}
            for k in levels:

                def one(k: int = k, sigma: TeichPoint = sigma, V: TangentVector = V,
                        label: str = label) -> None:
                    basis = theta_basis(k, sigma, N=config.N)
                    for j in range(k):
                        s = basis.section(j)
                        full = eqcond_residual(sigma, V, k, s)
                        anti = eqcond_residual(sigma, V, k, s, part="antiholomorphic")
                        table.rows.append([k, str(sigma), label, full, anti])
                        worst["full"] = max(worst["full"], full)
                        worst["antiholomorphic"] = max(worst["antiholomorphic"], anti)

                out.guard("eqcond", one, k=k, sigma=str(sigma), direction=label)
            inputs = {"sigma": str(sigma), "direction": label, "k_list": levels}
            out.checks += [
                CheckResult.below("eqcond.full", worst["full"], tol, **inputs),
                CheckResult.below(
                    "eqcond.antiholomorphic", worst["antiholomorphic"], tol, **inputs
                ),
            ]
    return out


def run_transport(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("transport")
    start = _sigmas(config, (1j,))[0]
    end = TeichPoint.from_complex(start.sigma + 0.2 + 0.1j)
    log = out.table("transport_log", ["k", "t", "sigma1", "sigma2", "holo_residual", "drift"])
    tol = config.tol("transport", TRANSPORT_TOL)

    for k in config.levels([2, 4, 8]):
        inputs = {"k": k, "start": str(start), "end": str(end)}

        def one(k: int = k, inputs: dict = inputs) -> list[CheckResult]:
            forward = parallel_transport([start, end], k, N=config.N)
            backward = parallel_transport([end, start], k, N=config.N)
            log.rows.extend(
                [k, r.t, r.sigma1, r.sigma2, r.holo_residual, r.drift] for r in forward.log
            )
            reversal = operator_norm(backward.matrix @ forward.matrix - np.eye(k))
            return [
                CheckResult.below("transport.reversal", reversal, tol, **inputs),
                CheckResult.below(
                    "transport.heat_flow", heat_flow_residual(forward), tol, **inputs
                ),
                CheckResult.below(
                    "transport.holomorphicity", forward.max_holo_residual, tol, **inputs
                ),
            ]

        out.guard("transport", one, **inputs)
    return out


def run_loop_defect(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("loop-defect")
    center = _sigmas(config, (1j,))[0]
    loop = standard_square_loop(center.sigma, 0.2)
    table = out.table("loop_defect", ["k", "defect", "deviation", "scalar", "steps"])
    tol = config.tol("loop", LOOP_TOL)

    for k in config.levels(list(range(1, 9))):

        def one(k: int = k) -> list[CheckResult]:
            result = loop_defect(loop, k, N=config.N)
            steps = "/".join(str(s) for s in result.steps)
            table.rows.append([k, result.defect, result.deviation, result.scalar, steps])
            detected = CheckResult(
                check="loop.scalar_detected",
                inputs={"k": k, "center": str(center)},
                residual=result.deviation,
                tolerance=10.0 * result.defect,
                passed=result.deviation > 10.0 * result.defect,
            )
            return [
                CheckResult.below(
                    "loop.defect", result.defect, tol, k=k, center=str(center), side=0.2
                ),
                detected,
            ]

        out.guard("loop.defect", one, k=k)
    return out


def run_endo_flatness(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("endo-flatness")
    f = TrigPoly.cos(1, 0)
    sigma = _sigmas(config, (1j,))[0]
    V = TangentVector.d_sigma2()
    levels = config.k_list if config.k_list is not None else [8, 16, 32, 64]
    table = out.table("endo_flatness", ["k", "norm"])

    def sweep() -> list[CheckResult]:
        rows, fit = toeplitz_flatness(f, levels, sigma=sigma, V=V)
        table.rows.extend([r.k, r.norm] for r in rows)
        return [
            CheckResult.at_most(
                "endo.flatness_slope", fit.slope, SLOPE_ORDER0, exact=fit.exact,
                symbol="cos 2 pi x", sigma=str(sigma), k_list=list(levels),
            )
        ]

    def cross() -> list[CheckResult]:
        worst = 0.0
        for k in (2, 3, 4):
            closed = endo_derivative(f, sigma, V, k, method="closed").matrix
            grid = endo_derivative(f, sigma, V, k, method="grid", N=config.N).matrix
            worst = max(worst, operator_norm(closed - grid) / max(operator_norm(closed), 1e-300))
        return [
            CheckResult.below(
                "endo.closed_vs_grid", worst, config.tol("endo", 1e-5), sigma=str(sigma)
            )
        ]

    out.guard("endo.flatness_slope", sweep)
    out.guard("endo.closed_vs_grid", cross)
    return out


# ------------------------
# Formal connection and star product
# ------------------------
def run_formal_checks(config: RunConfig) -> SuiteOutcome:
    out = SuiteOutcome("formal-checks")
    sigma = _sigmas(config, (1j,))[0]
    f = _test_symbol()
    g = TrigPoly.sin(1, 1) + TrigPoly.cos(0, 1) * 0.5
    directions = {"d_sigma1": TangentVector.d_sigma1(), "d_sigma2": TangentVector.d_sigma2()}
    eh_table = out.table("eh_residual", ["direction", "k", "residual", "shadow"])
    endo_table = out.table("endo_formal", ["direction", "k", "residual"])
    eh_levels = config.k_list if config.k_list is not None else [4, 8, 12, 16]
    endo_levels = config.k_list if config.k_list is not None else [8, 16, 32, 64]

    for label, V in directions.items():
        inputs = {"sigma": str(sigma), "direction": label}

        def d_tilde(V: TangentVector = V, inputs: dict = inputs) -> list[CheckResult]:
            order0 = formal_D(V, sigma, FormalFunction.of(f)).coefficient(0).max_norm()
            return [CheckResult.below("formal.d_tilde_order0", order0, EXACT_TOL, **inputs)]

        def eh(
            V: TangentVector = V, label: str = label, inputs: dict = inputs
        ) -> list[CheckResult]:
            rows, fit = eh_cross_validation(V, sigma, f, eh_levels)
            eh_table.rows.extend([label, r.k, r.residual, r.shadow] for r in rows)
            return [
                CheckResult.at_most(
                    "formal.eh_slope", fit.slope, SLOPE_ORDER0, exact=fit.exact,
                    k_list=list(eh_levels), **inputs,
                )
            ]

        def derivation(V: TangentVector = V, inputs: dict = inputs) -> list[CheckResult]:
            identity, fd = c1_variation_residual(sigma, V, f, g)
            return [
                CheckResult.below(
                    "formal.derivation", derivation_residual(V, sigma, f, g), 1e-10, **inputs
                ),
                CheckResult.below("formal.c1_variation", identity, 1e-10, **inputs),
                CheckResult.below("formal.c1_variation_fd", fd, 1e-6, **inputs),
            ]

        def endo(
            V: TangentVector = V, label: str = label, inputs: dict = inputs
        ) -> list[CheckResult]:
            rows, fit = endo_formal_residual(f, sigma, V, endo_levels)
            endo_table.rows.extend([label, r.k, r.residual] for r in rows)
            return [
                CheckResult.at_most(
                    "formal.endo_slope", fit.slope, SLOPE_ORDER1, exact=fit.exact,
                    k_list=list(endo_levels), **inputs,
                )
            ]

        out.guard("formal.d_tilde_order0", d_tilde, **inputs)
        out.guard("formal.eh_slope", eh, **inputs)
        out.guard("formal.derivation", derivation, **inputs)
        out.guard("formal.endo_slope", endo, **inputs)

    def trivialization() -> list[CheckResult]:
        # d_sigma2: g^-1 is quadratic in sigma1, so central differences along it are exact
        check = trivialization_flatness(sigma, TangentVector.d_sigma2(), f)
        inputs = {"sigma": str(sigma), "direction": "d_sigma2", "steps": list(check.steps)}
        return [
            CheckResult.below("formal.trivialization_flatness", check.flatness, 1e-10, **inputs),
            CheckResult(
                check="formal.richardson_ratio",
                inputs={**inputs, "range": [3.7, 4.3]},
                residual=check.ratio,
                tolerance=4.3,
                passed=3.7 <= check.ratio <= 4.3,
            ),
        ]

    def star() -> list[CheckResult]:
        expected = expected_star(f, g)
        residual = (star_order1(f, g, sigma) - expected).max_norm()
        direct = (star_order1_direct(f, g, sigma) - expected).max_norm()
        others = [TeichPoint.from_complex(s) for s in DEFAULT_SIGMAS]
        drift = max((star_order1(f, g, s) - expected).max_norm() for s in others)
        return [
            CheckResult.below("formal.star_order1", residual, EXACT_TOL, sigma=str(sigma)),
            CheckResult.below("formal.star_order1_direct", direct, EXACT_TOL, sigma=str(sigma)),
            CheckResult.below(
                "formal.star_sigma_independence",
                drift,
                EXACT_TOL,
                sigmas=[str(s) for s in others],
            ),
        ]

    out.guard("formal.trivialization_flatness", trivialization)
    out.guard("formal.star_order1", star)
    return out


SUITES: dict[str, Callable[[RunConfig], SuiteOutcome]] = {
    "smatrix": run_smatrix,
    "curve-spectrum": run_curve_spectrum,
    "verlinde": run_verlinde,
    "gram-check": run_gram_check,
    "toeplitz": run_toeplitz,
    "identities": run_identities,
    "star-residual": run_star_residual,
    "eqcond": run_eqcond,
    "transport": run_transport,
    "loop-defect": run_loop_defect,
    "endo-flatness": run_endo_flatness,
    "formal-checks": run_formal_checks,
}


def run_suite(command: str, config: RunConfig) -> SuiteOutcome:
    outcome = SUITES[command](config)
    logger.info(
        "suite.done",
        extra={
            "event": "suite_done",
            "command": command,
            "checks": len(outcome.checks),
            "failed": sum(1 for c in outcome.checks if not c.passed),
        },
    )
    return outcome
