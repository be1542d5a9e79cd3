from __future__ import annotations

import math

import numpy as np
import numpy.testing as npt
import pytest

from quantlab.domain.errors import ParameterDomainError
from quantlab.domain.torus_model import (
    TangentVector,
    TeichPoint,
    complex_structure,
    divergence,
    g_bivectors,
    hamiltonian_field,
    holomorphic_frame,
    inverse_metric,
    laplace_bivector,
    laplacian,
    metric,
    poisson,
    ricci_potential,
    symplectic_matrix,
    type_parts,
    variation_I,
    variation_inverse_metric,
    variation_laplacian,
)
from quantlab.domain.trigpoly import TrigPoly, VectorField

DIRECTIONS = [TangentVector.d_sigma1(), TangentVector.d_sigma2(), TangentVector(0.3 - 0.8j)]


def test_teich_point_requires_upper_half_plane():
    with pytest.raises(ParameterDomainError):
        TeichPoint(0.0, 0.0)
    with pytest.raises(ParameterDomainError):
        TeichPoint.from_complex(1 - 1j)


def test_shifted_moves_along_dsigma():
    p = TeichPoint(0.0, 1.0).shifted(TangentVector(0.5 + 0.25j), 2.0)
    assert p.sigma == pytest.approx(1.0 + 1.5j)


def test_complex_structure_and_metric(sigma):
    I = complex_structure(sigma).T
    npt.assert_allclose(I @ I, -np.eye(2), atol=1e-12)
    g = metric(sigma).T
    npt.assert_allclose(g @ inverse_metric(sigma).T, np.eye(2), atol=1e-12)
    # omega is I-invariant
    W = symplectic_matrix()
    npt.assert_allclose(I.T @ W @ I, W, atol=1e-12)


def test_holomorphic_frame_duality(sigma):
    frame = holomorphic_frame(sigma)
    assert frame.dz_form @ frame.dz_vec == pytest.approx(1.0)
    assert frame.dz_form @ frame.dzbar_vec == pytest.approx(0.0, abs=1e-14)
    I = complex_structure(sigma).T
    npt.assert_allclose(I @ frame.dz_vec, 1j * frame.dz_vec, atol=1e-12)


@pytest.mark.parametrize("V", DIRECTIONS)
def test_variation_of_I_agrees_with_finite_differences(sigma, V):
    closed = variation_I(sigma, V, check=True).T
    I = complex_structure(sigma).T
    npt.assert_allclose(closed @ I + I @ closed, 0.0, atol=1e-12)


@pytest.mark.parametrize("V", DIRECTIONS)
def test_bivector_relations(sigma, V):
    bv = g_bivectors(sigma, V)
    npt.assert_allclose(bv.tilde.T, -variation_inverse_metric(sigma, V), atol=1e-12)
    npt.assert_allclose(bv.tilde.T, (bv.holomorphic.T + bv.antiholomorphic.T).real, atol=1e-12)
    vz = holomorphic_frame(sigma).dz_vec
    npt.assert_allclose(bv.holomorphic.T, bv.coefficient * np.outer(vz, vz), atol=1e-12)
    assert bv.coefficient == pytest.approx(1j * V.dsigma / math.pi)


def test_divergence_of_hamiltonian_field_vanishes(rng):
    f = TrigPoly.random(rng, 2, real=True)
    assert divergence(hamiltonian_field(f)).allclose(0.0, tol=1e-10)


def test_divergence_of_constant_field_vanishes():
    assert divergence(VectorField.constant(1.0, 2.0)).allclose(0.0)


def test_divergence_of_gradient_is_laplacian(sigma, rng):
    # Delta_B f = delta(B df)
    f = TrigPoly.random(rng, 2)
    G = inverse_metric(sigma).T
    grad = VectorField(f.dx() * G[0, 0] + f.dy() * G[0, 1], f.dx() * G[1, 0] + f.dy() * G[1, 1])
    assert divergence(grad).allclose(laplacian(sigma, f), tol=1e-9)


def test_laplacian_on_modes_at_square_torus(sigma_i):
    # Delta_{g^-1} e_(m,n) = -2 pi (m^2 + n^2) e_(m,n) at sigma = i
    e = TrigPoly.mode(2, 1)
    assert laplacian(sigma_i, e).allclose(e * (-2.0 * math.pi * 5), tol=1e-10)


@pytest.mark.parametrize("V", DIRECTIONS[:2])
def test_variation_of_laplacian(sigma, V, rng):
    f = TrigPoly.random(rng, 2)
    exact = laplace_bivector(g_bivectors(sigma, V).tilde, f) * -1.0
    fd = variation_laplacian(sigma, V, f, step=1e-5)
    assert (fd - exact).max_norm() < 1e-5 * max(1.0, exact.max_norm())


def test_poisson_bracket_sign_and_antisymmetry(rng):
    f = TrigPoly.random(rng, 1, real=True)
    g = TrigPoly.random(rng, 1, real=True)
    assert (poisson(f, g) + poisson(g, f)).allclose(0.0)
    x, y = TrigPoly.sin(1, 0), TrigPoly.sin(0, 1)
    # {f, g} = (f_x g_y - f_y g_x) / 2pi
    expected = TrigPoly.cos(1, 0) * TrigPoly.cos(0, 1) * (4 * math.pi**2 / (2 * math.pi))
    assert poisson(x, y).allclose(expected, tol=1e-12)


def test_hamiltonian_field_acts_as_bracket(rng):
    f = TrigPoly.random(rng, 1)
    g = TrigPoly.random(rng, 1)
    # X_f(g) = {g, f}
    assert hamiltonian_field(f)(g).allclose(poisson(g, f), tol=1e-10)


def test_type_parts_split_the_field(sigma):
    X = VectorField.constant(1.0, 0.5)
    holo, anti = type_parts(sigma, X)
    I = complex_structure(sigma).T
    v_anti = np.array([anti.x.constant_term, anti.y.constant_term])
    v_holo = np.array([holo.x.constant_term, holo.y.constant_term])
    npt.assert_allclose(I @ v_anti, -1j * v_anti, atol=1e-12)
    npt.assert_allclose(I @ v_holo, 1j * v_holo, atol=1e-12)


def test_ricci_potential_is_zero(sigma):
    assert ricci_potential(sigma).allclose(0.0)


def test_poisson_bracket_jacobi_identity(rng):
    f, g, h = (TrigPoly.random(rng, 1, real=True) for _ in range(3))
    terms = [poisson(f, poisson(g, h)), poisson(g, poisson(h, f)), poisson(h, poisson(f, g))]
    scale = max(t.max_norm() for t in terms)
    assert (terms[0] + terms[1] + terms[2]).max_norm() <= 1e-12 * scale


def test_divergence_of_mode_along_x():
    # delta(e^{2 pi i x} d/dx) = 2 pi i e^{2 pi i x}
    e = TrigPoly.mode(1, 0)
    X = VectorField(e, TrigPoly.zero())
    assert divergence(X).allclose(e * (2j * math.pi), tol=1e-12)


def test_dz_is_complex_linear(sigma):
    # dz o I = i dz
    frame = holomorphic_frame(sigma)
    I = complex_structure(sigma).T
    npt.assert_allclose(frame.dz_form @ I, 1j * frame.dz_form, atol=1e-12)
    npt.assert_allclose(frame.dzbar_form @ I, -1j * frame.dzbar_form, atol=1e-12)
