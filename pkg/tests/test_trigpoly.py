from __future__ import annotations

import math

import numpy as np
import numpy.testing as npt

from quantlab.domain.trigpoly import TrigPoly, VectorField, grid_points, sum_polys


def test_small_coefficients_are_pruned():
    p = TrigPoly({(1, 0): 1e-17, (0, 1): 2.0})
    assert dict(p.coeffs) == {(0, 1): 2.0}


def test_cos_sin_are_real_and_evaluate():
    x, y = grid_points(8)
    c = TrigPoly.cos(1, 2)
    s = TrigPoly.sin(1, 2)
    assert c.is_real() and s.is_real()
    npt.assert_allclose(c.on_grid(8), np.cos(2 * math.pi * (x + 2 * y)), atol=1e-14)
    npt.assert_allclose(s.on_grid(8), np.sin(2 * math.pi * (x + 2 * y)), atol=1e-14)


def test_product_matches_pointwise(rng):
    f = TrigPoly.random(rng, 2)
    g = TrigPoly.random(rng, 1)
    npt.assert_allclose((f * g).on_grid(16), f.on_grid(16) * g.on_grid(16), atol=1e-12)
    assert (f * g).degree == 3


def test_algebra_with_scalars():
    f = TrigPoly.cos(1, 0)
    assert (2.0 * f - f * 2.0).allclose(0.0)
    assert (1.0 - f + f).allclose(TrigPoly.constant(1.0))
    assert (f / 2.0).allclose(f * 0.5)


def test_derivatives_on_modes():
    e = TrigPoly.mode(2, -1)
    assert e.dx().allclose(TrigPoly.mode(2, -1, 4j * math.pi))
    assert e.dy().allclose(TrigPoly.mode(2, -1, -2j * math.pi))
    assert e.derivative(0.5, 2.0).allclose(e.dx() * 0.5 + e.dy() * 2.0)


def test_derivative_matches_finite_difference(rng):
    f = TrigPoly.random(rng, 2, real=True)
    h = 1e-6
    x, y = np.array([0.13, 0.71]), np.array([0.4, 0.05])
    fd = (f.evaluate(x + h, y) - f.evaluate(x - h, y)) / (2 * h)
    npt.assert_allclose(f.dx().evaluate(x, y), fd, atol=1e-6)


def test_random_real_poly_is_real(rng):
    assert TrigPoly.random(rng, 3, real=True).is_real()


def test_band_and_constant_checks():
    p = TrigPoly.cos(3, 1)
    assert p.within_band(4) and not p.within_band(3)
    assert TrigPoly.constant(2.0).is_constant()
    assert TrigPoly.constant(2.0).constant_term == 2.0


def test_vector_field_action_and_conj():
    f = TrigPoly.cos(1, 1)
    X = VectorField.along(TrigPoly.constant(1.0), 1.0, 2j)
    assert X(f).allclose(f.dx() + f.dy() * 2j)
    assert X.conj()(f).allclose(f.dx() - f.dy() * 2j)
    assert VectorField.constant(1.0, 0.0).is_constant()
    gx, gy = X.components_on_grid(4)
    npt.assert_allclose(gy, 2j)


def test_sum_polys():
    parts = [TrigPoly.mode(1, 0), TrigPoly.mode(1, 0), TrigPoly.mode(0, 1)]
    assert sum_polys(parts).allclose(TrigPoly({(1, 0): 2.0, (0, 1): 1.0}))
