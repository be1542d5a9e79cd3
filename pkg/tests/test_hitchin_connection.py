from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from quantlab.domain.errors import ParameterDomainError, PreconditionError
from quantlab.domain.hitchin_connection import (
    ConnectionOperator,
    connection_matrix_closed_form,
    connection_operator,
    endo_derivative,
    eqcond_residual,
    heat_flow_residual,
    holomorphic_bivector,
    loop_defect,
    parallel_transport,
    standard_square_loop,
    toeplitz_flatness,
)
from quantlab.domain.theta_sections import laplace_section, random_smooth_section, theta_basis
from quantlab.domain.toeplitz_calculus import operator_norm
from quantlab.domain.torus_model import TangentVector, TeichPoint, g_bivectors
from quantlab.domain.trigpoly import TrigPoly

DIRECTIONS = [TangentVector.d_sigma1(), TangentVector.d_sigma2()]


@pytest.mark.parametrize("V", DIRECTIONS)
def test_holomorphic_bivector(sigma, V):
    npt.assert_allclose(
        holomorphic_bivector(sigma, V), g_bivectors(sigma, V).holomorphic.T, atol=1e-12
    )


def test_connection_operator_rejects_bad_parameters(sigma_i):
    with pytest.raises(ParameterDomainError):
        connection_operator(sigma_i, TangentVector.d_sigma1(), 0)
    with pytest.raises(ParameterDomainError):
        ConnectionOperator(sigma_i, TangentVector.d_sigma1(), 2, n=-1)


def test_constant_potential_leaves_u_unchanged(sigma_i):
    basis = theta_basis(2, sigma_i)
    V = TangentVector.d_sigma2()
    flat = connection_operator(sigma_i, V, 2)
    shifted = connection_operator(sigma_i, V, 2, F=TrigPoly.constant(0.7))
    assert flat.ricci_terms() == (0.0, 0.0)
    assert shifted.ricci_terms() == (0.0, 0.0)
    npt.assert_allclose(shifted.apply(basis.values), flat.apply(basis.values), atol=1e-12)


def test_potential_gradient_term(sigma_i):
    basis = theta_basis(2, sigma_i)
    V = TangentVector.d_sigma1()
    F = TrigPoly.cos(1, 0)
    u = connection_operator(sigma_i, V, 2, F=F)
    dF, VF = u.ricci_terms()
    assert dF > 0.0
    assert VF == 0.0
    # the gradient slot adds -2 nabla_{G dF} s / (4k)
    s = basis.values[0]
    expected = connection_operator(sigma_i, V, 2).apply(s) + u.prefactor * u._dF_term(s)
    npt.assert_allclose(u.apply(s), expected, atol=1e-10)


def test_potential_variation_term(sigma_i):
    # F_sigma = sigma2 cos(2 pi x): dF/dsigma = -i/2 cos(2 pi x)
    def family(sigma: TeichPoint) -> TrigPoly:
        return TrigPoly.cos(1, 0) * sigma.sigma2

    u = connection_operator(sigma_i, TangentVector.d_sigma1(), 3, F=family)
    assert u.V_F.allclose(TrigPoly.cos(1, 0) * -0.5j, tol=1e-8)
    u2 = connection_operator(sigma_i, TangentVector.d_sigma2(), 3, F=family)
    assert u2.V_F.allclose(TrigPoly.cos(1, 0) * 0.5, tol=1e-8)
    s = theta_basis(3, sigma_i).values[1]
    base = connection_operator(sigma_i, TangentVector.d_sigma1(), 3, F=family(sigma_i))
    extra = u.prefactor * 12.0 * u.V_F.on_grid(s.shape[-1]) * s
    npt.assert_allclose(u.apply(s), base.apply(s) + extra, atol=1e-8)


def test_connection_operator_is_linear_in_direction(sigma):
    basis = theta_basis(3, sigma)
    V = TangentVector(0.3 - 0.8j)
    u = connection_operator(sigma, V, 3).apply(basis.values)
    npt.assert_allclose(connection_operator(sigma, V * 2.0, 3).apply(basis.values), 2.0 * u,
                        atol=1e-10 * np.abs(u).max())


@pytest.mark.parametrize("k", [2, 4])
def test_connection_operator_scales_as_one_over_k(sigma_i, k):
    V = TangentVector.d_sigma1()
    basis = theta_basis(k, sigma_i)
    u = connection_operator(sigma_i, V, k)
    assert k * u.prefactor == pytest.approx(-0.25)
    lap = laplace_section(holomorphic_bivector(sigma_i, V), basis.values, k)
    npt.assert_allclose(k * u.apply(basis.values), -0.25 * lap, atol=1e-10 * np.abs(lap).max())


def test_connection_operator_vanishes_for_zero_direction(sigma_i):
    basis = theta_basis(2, sigma_i)
    u = connection_operator(sigma_i, TangentVector.zero(), 2)
    npt.assert_allclose(u(basis.section(0)).values, 0.0)
    assert connection_operator(sigma_i, TangentVector.d_sigma1(), 3).prefactor == -1.0 / 12.0


def test_connection_operator_acts_on_stacks(sigma_i):
    basis = theta_basis(2, sigma_i)
    u = connection_operator(sigma_i, TangentVector.d_sigma2(), 2)
    stacked = u.apply(basis.values)
    npt.assert_allclose(stacked[1], u(basis.section(1)).values, atol=1e-12)


@pytest.mark.parametrize("sigma_c", [1j, 1 + 1j])
@pytest.mark.parametrize("V", DIRECTIONS)
@pytest.mark.parametrize("k", [1, 3])
def test_eqcond_holds_on_theta_sections(sigma_c, V, k):
    sigma = TeichPoint.from_complex(sigma_c)
    basis = theta_basis(k, sigma)
    for j in range(k):
        s = basis.section(j)
        assert eqcond_residual(sigma, V, k, s) < 1e-5
        assert eqcond_residual(sigma, V, k, s, part="antiholomorphic") < 1e-5


def test_eqcond_requires_holomorphic_input(sigma_i, rng):
    basis = theta_basis(2, sigma_i)
    s = random_smooth_section(basis, rng)
    with pytest.raises(PreconditionError):
        eqcond_residual(sigma_i, TangentVector.d_sigma1(), 2, s)


def test_transport_reversal_and_heat_flow():
    start, end = TeichPoint(0.0, 1.0), TeichPoint(0.1, 1.05)
    forward = parallel_transport([start, end], 2)
    backward = parallel_transport([end, start], 2)
    assert operator_norm(backward.matrix @ forward.matrix - np.eye(2)) < 1e-4
    assert heat_flow_residual(forward) < 1e-4
    assert forward.max_holo_residual < 1e-4
    assert forward.log and forward.log[-1].t == pytest.approx(1.0)
    assert len(forward.steps) == 1


def test_standard_square_loop_is_closed():
    loop = standard_square_loop()
    assert len(loop) == 5
    assert loop[0] == loop[-1]
    assert loop[1].sigma == pytest.approx(0.1 + 0.9j)


def test_loop_defect_detects_scalar_holonomy():
    result = loop_defect(standard_square_loop(1j, 0.2), 2)
    assert result.defect < 1e-3
    assert result.deviation > 10 * result.defect
    assert abs(abs(result.scalar) - 1.0) < 1e-3


def test_loop_defect_stable_under_step_doubling():
    loop = standard_square_loop(1j, 0.2)
    coarse = loop_defect(loop, 2)
    fine = loop_defect(loop, 2, initial_steps=2 * coarse.steps[0])
    assert min(fine.steps) >= 2 * min(coarse.steps)
    assert abs(fine.scalar - coarse.scalar) < 1e-5
    assert abs(fine.defect - coarse.defect) < 1e-4


def test_loop_defect_requires_closed_loop():
    with pytest.raises(ParameterDomainError):
        loop_defect([TeichPoint(0.0, 1.0), TeichPoint(0.1, 1.0)], 2)


def test_connection_matrix_is_scalar(sigma):
    A = connection_matrix_closed_form(sigma, TangentVector(0.3 + 0.2j), 3)
    npt.assert_allclose(A, A[0, 0] * np.eye(3))


@pytest.mark.parametrize("V", DIRECTIONS)
def test_endo_derivative_closed_matches_grid(V):
    sigma = TeichPoint(0.0, 1.0)
    f = TrigPoly.cos(1, 0)
    closed = endo_derivative(f, sigma, V, 2, method="closed").matrix
    grid = endo_derivative(f, sigma, V, 2, method="grid").matrix
    assert operator_norm(closed - grid) < 1e-5 * max(operator_norm(closed), 1.0)


def test_endo_derivative_rejects_unknown_method(sigma_i):
    with pytest.raises(ParameterDomainError):
        endo_derivative(TrigPoly.cos(1, 0), sigma_i, TangentVector.d_sigma1(), 2, method="fd")


def test_toeplitz_sections_are_asymptotically_flat():
    rows, fit = toeplitz_flatness(TrigPoly.cos(1, 0), [8, 16, 32, 64])
    assert [r.k for r in rows] == [8, 16, 32, 64]
    assert fit.passes(-0.9)
