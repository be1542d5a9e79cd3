from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from quantlab.domain.errors import ParameterDomainError, ShapeError, TruncationError
from quantlab.domain.theta_sections import (
    Gauge,
    GridSection,
    compress,
    covariant_derivative,
    curvature_residual,
    default_resolution,
    dolbeault_split,
    embed,
    gram_closed_form,
    gram_of,
    holomorphicity_residual,
    inner_product,
    nabla_x,
    nabla_y,
    nabla_z,
    project,
    project_section,
    random_smooth_section,
    theta_basis,
)
from quantlab.domain.torus_model import TeichPoint
from quantlab.domain.trigpoly import TrigPoly, VectorField


def test_default_resolution():
    assert default_resolution(1) == 32
    assert default_resolution(4) == 64
    assert default_resolution(32) == 256


@pytest.mark.parametrize("k", [1, 2, 5])
def test_theta_basis_invariants(sigma, k):
    basis = theta_basis(k, sigma)
    assert basis.values.shape == (k, basis.N, basis.N)
    diag = np.diag(basis.gram).real
    npt.assert_allclose(diag, gram_closed_form(k, sigma), rtol=1e-8)
    off = basis.gram - np.diag(np.diag(basis.gram))
    assert np.max(np.abs(off)) < 1e-10
    for j in range(k):
        assert holomorphicity_residual(sigma, basis.section(j)) < 1e-8


def test_holomorphic_sections_differentiate_along_dz(sigma):
    # dz = dx + sigma dy, so nabla_x = nabla_z and nabla_y = sigma nabla_z on H^0
    basis = theta_basis(3, sigma)
    values = basis.values
    dz = nabla_z(sigma, values, 3)
    scale = np.abs(dz).max()
    npt.assert_allclose(nabla_x(values, 3), dz, atol=1e-7 * scale)
    npt.assert_allclose(nabla_y(values, 3), sigma.sigma * dz, atol=1e-7 * scale)


def test_orthonormal_frame(sigma_i):
    basis = theta_basis(3, sigma_i)
    npt.assert_allclose(gram_of(basis.orthonormal_values()), np.eye(3), atol=1e-10)


def test_theta_basis_rejects_bad_input(sigma_i):
    with pytest.raises(ParameterDomainError):
        theta_basis(0, sigma_i)
    with pytest.raises(ShapeError):
        theta_basis(4, sigma_i, N=16)
    with pytest.raises(TruncationError):
        theta_basis(1, TeichPoint(0.0, 1e-4))


def test_grid_section_validation():
    with pytest.raises(ShapeError):
        GridSection(2, np.zeros((8, 8)))
    with pytest.raises(ShapeError):
        GridSection(1, np.zeros((8, 16)))
    a = GridSection(1, np.ones((8, 8)))
    with pytest.raises(ShapeError):
        a + GridSection(1, np.ones((16, 16)))


def test_inner_product_is_linear_in_first_slot(sigma_i):
    basis = theta_basis(2, sigma_i)
    s, t = basis.section(0), basis.section(1)
    lhs = inner_product(s * 2j + t, s)
    rhs = 2j * inner_product(s, s) + inner_product(t, s)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert inner_product(s, s).real == pytest.approx(gram_closed_form(2, sigma_i))


def test_curvature_of_the_gauge(rng):
    basis = theta_basis(2, TeichPoint(0.3, 0.7))
    s = random_smooth_section(basis, rng)
    assert curvature_residual(s) < 1e-8
    assert Gauge(2).curvature == pytest.approx(-2j * 2 * np.pi)


def test_projection_fixes_holomorphic_sections(sigma):
    basis = theta_basis(3, sigma)
    s = embed(basis, np.array([1.0, -0.5j, 0.25]))
    npt.assert_allclose(project(basis, s), [1.0, -0.5j, 0.25], atol=1e-12)
    npt.assert_allclose(project_section(basis, s).values, s.values, atol=1e-10)


def test_projection_residual_is_orthogonal(sigma_i, rng):
    basis = theta_basis(2, sigma_i)
    s = random_smooth_section(basis, rng, degree=2)
    residual = s - project_section(basis, s)
    npt.assert_allclose(basis.inner_products(residual.values), 0.0, atol=1e-12)
    again = project_section(basis, project_section(basis, s))
    npt.assert_allclose(again.values, project_section(basis, s).values, atol=1e-10)


def test_holomorphic_sections_have_no_antiholomorphic_part(sigma):
    basis = theta_basis(2, sigma)
    _, anti = dolbeault_split(sigma, basis.section(1))
    assert anti.norm() / basis.section(1).norm() < 1e-8


def test_compress_identity_is_identity(sigma_i):
    basis = theta_basis(3, sigma_i)
    npt.assert_allclose(compress(basis, lambda v: v), np.eye(3), atol=1e-10)


def test_covariant_derivative_leibniz_rule(sigma_i):
    basis = theta_basis(1, sigma_i)
    f = TrigPoly.cos(1, 1)
    s = basis.section(0)
    X = VectorField.constant(1.0, 0.0)
    lhs = covariant_derivative(X, s * f).values
    rhs = (f.dx().on_grid(s.N) * s.values) + f.on_grid(s.N) * nabla_x(s.values, 1)
    npt.assert_allclose(lhs, rhs, atol=1e-9 * np.max(np.abs(lhs)))


def _fd4_error(N: int) -> float:
    basis = theta_basis(1, TeichPoint(0.0, 1.0), N=N)
    s = basis.section(0) * TrigPoly.cos(1, 0)
    exact = nabla_x(s.values, 1)
    approx = nabla_x(s.values, 1, method="fd4")
    return float(np.max(np.abs(exact - approx)) / np.max(np.abs(exact)))


def test_fd4_is_fourth_order():
    coarse, fine = _fd4_error(32), _fd4_error(64)
    assert fine < coarse
    assert coarse / fine > 10.0


def test_gram_is_stable_under_grid_refinement(sigma):
    coarse = theta_basis(3, sigma, N=48)
    fine = theta_basis(3, sigma, N=96)
    npt.assert_allclose(fine.gram, coarse.gram, atol=1e-10 * gram_closed_form(3, sigma))


def test_projection_is_self_adjoint(sigma_i, rng):
    basis = theta_basis(2, sigma_i)
    s = random_smooth_section(basis, rng, degree=2)
    t = random_smooth_section(basis, rng, degree=2)
    lhs = inner_product(project_section(basis, s), t)
    rhs = inner_product(s, project_section(basis, t))
    assert lhs == pytest.approx(rhs, abs=1e-12)


def _theta_at(k: int, sigma: TeichPoint, j: int, x: float, y: float) -> complex:
    t = y + np.arange(-20, 21) + j / k
    return complex(np.sum(np.exp(1j * np.pi * k * sigma.sigma * t * t + 2j * np.pi * k * x * t)))


@pytest.mark.parametrize("k", [1, 3])
def test_gauge_boundary_phase_matches_theta_series(sigma, k):
    gauge = Gauge(k)
    for x, y in [(0.1, 0.3), (0.7, 0.85)]:
        expected = _theta_at(k, sigma, 1 % k, x + 1.0, y)
        phase = gauge.boundary_phase(np.array(y))
        assert _theta_at(k, sigma, 1 % k, x, y) * phase == pytest.approx(expected, rel=1e-10)
    npt.assert_allclose(np.abs(gauge.boundary_phase(np.linspace(0, 1, 7))), 1.0)


def test_gauge_connection_form_curvature():
    gauge = Gauge(3)
    x = np.linspace(0.0, 1.0, 5)
    A_x, A_y = gauge.connection_form(x)
    npt.assert_allclose(A_x, 0.0)
    # F = dA = (d_x A_y - d_y A_x) dx^dy with A_y linear in x
    npt.assert_allclose(np.diff(A_y) / np.diff(x), gauge.curvature, rtol=1e-12)
    with pytest.raises(ParameterDomainError):
        Gauge(0)
