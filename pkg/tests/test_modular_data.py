from __future__ import annotations

import math

import numpy as np
import numpy.testing as npt
import pytest

from quantlab.domain.errors import ParameterDomainError
from quantlab.domain.modular_data import (
    Label,
    build_label_set,
    cartan_point,
    char_ratio,
    curve_spectrum,
    dual,
    dual_permutation,
    quantum_dimension,
    s_matrix,
    schur_alternant,
    schur_jacobi_trudi,
    verlinde_dim,
    weyl_dimension,
)
from quantlab.reports.writers import read_matrix_csv


def labels(*rows: tuple[int, ...]) -> list[Label]:
    return [Label(r) for r in rows]


def test_label_normalizes_trailing_zeros():
    assert Label((2, 1, 0, 0)) == Label((2, 1))
    assert Label(()).is_trivial() is True
    assert Label((0, 0)).is_trivial() is True
    assert Label((1,)).is_trivial() is False
    with pytest.raises(ParameterDomainError):
        Label((1, 2))


@pytest.mark.parametrize("n", [2, 3, 5])
def test_level_zero_has_only_trivial_label(n):
    assert build_label_set(n, 0) == [Label(())]


def test_label_sets_match_enumeration():
    assert build_label_set(2, 3) == labels((), (1,), (2,), (3,))
    assert build_label_set(3, 2) == labels((), (1,), (2,), (1, 1), (2, 1), (2, 2))


def test_label_set_rejects_bad_parameters():
    with pytest.raises(ParameterDomainError):
        build_label_set(1, 3)
    with pytest.raises(ParameterDomainError):
        build_label_set(2, -1)


def test_dual():
    assert dual(Label(()), 3, 2) == Label(())
    assert dual(Label((1,)), 3, 2) == Label((1, 1))
    for lab in build_label_set(2, 5):
        assert dual(lab, 2, 5) == lab
    for lab in build_label_set(4, 3):
        assert dual(dual(lab, 4, 3), 4, 3) == lab
    with pytest.raises(ParameterDomainError):
        dual(Label((3,)), 2, 2)


def test_weyl_dimension():
    assert weyl_dimension(Label((1,)), 3) == 3
    assert weyl_dimension(Label((1, 1)), 3) == 3
    assert weyl_dimension(Label((2, 1)), 3) == 8
    assert weyl_dimension(Label((4,)), 2) == 5


def test_cartan_angles_sum_to_zero():
    point = cartan_point(Label((2, 1)), 3, 4)
    assert abs(sum(point.angles)) < 1e-12
    npt.assert_allclose(np.abs(point.eigenvalues), 1.0)


def test_character_paths_agree(rng):
    x = np.exp(1j * rng.uniform(0, 2 * math.pi, size=4))
    for lab in build_label_set(4, 3):
        npt.assert_allclose(schur_alternant(lab, x), schur_jacobi_trudi(lab, x), atol=1e-9)


def test_trivial_character_is_one():
    for mu in build_label_set(3, 4):
        assert char_ratio(Label(()), mu, 3, 4) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_su2_ratio_closed_form(k):
    for a in range(k + 1):
        for b in range(k + 1):
            expected = math.sin((a + 1) * (b + 1) * math.pi / (k + 2)) / math.sin(
                (b + 1) * math.pi / (k + 2)
            )
            got = char_ratio(Label((a,)), Label((b,)), 2, k)
            assert got == pytest.approx(expected, abs=1e-10)
    assert char_ratio(Label((1,)), Label(()), 2, 1) == pytest.approx(1.0, abs=1e-12)


def test_s_matrix_su2_level_one():
    data = s_matrix(2, 1)
    npt.assert_allclose(data.S, np.array([[1, 1], [1, -1]]) / math.sqrt(2), atol=1e-12)


def test_s_matrix_su2_level_two_first_column():
    data = s_matrix(2, 2)
    npt.assert_allclose(data.S[:, 0].real, [0.5, 1 / math.sqrt(2), 0.5], atol=1e-12)


@pytest.mark.parametrize("n,k", [(2, 5), (2, 20), (3, 4), (3, 11), (4, 6)])
def test_s_matrix_invariants(n, k):
    data = s_matrix(n, k)
    size = len(data.labels)
    S = data.S
    assert np.max(np.abs(S @ S.conj().T - np.eye(size))) < 1e-10
    assert np.max(np.abs(S - S.T)) < 1e-10
    assert np.max(np.abs(S @ S - dual_permutation(data))) < 1e-10
    assert np.all(S[0].real > 0)


@pytest.mark.parametrize("k", [1, 2])
def test_s_matrix_matches_golden(golden_dir, k):
    rows, cols, golden = read_matrix_csv(golden_dir / f"smatrix_n2_k{k}.csv")
    data = s_matrix(2, k)
    assert rows == [str(lab) for lab in data.labels] == cols
    npt.assert_allclose(data.S, golden, atol=1e-12)


def test_curve_spectrum_examples():
    values = [v for v, _ in curve_spectrum(Label((1,)), 2, 1)]
    npt.assert_allclose(values, [1.0, -1.0], atol=1e-12)
    values = [v for v, _ in curve_spectrum(Label((1,)), 2, 2)]
    npt.assert_allclose(values, [math.sqrt(2), 0.0, -math.sqrt(2)], atol=1e-12)
    trivial = [v for v, _ in curve_spectrum(Label(()), 3, 3)]
    npt.assert_allclose(trivial, 1.0, atol=1e-12)


def test_curve_spectrum_bounds_and_reality():
    n, k = 3, 5
    for lam in build_label_set(n, k):
        values = np.array([v for v, _ in curve_spectrum(lam, n, k)])
        assert np.max(np.abs(values)) <= weyl_dimension(lam, n) + 1e-10
        if dual(lam, n, k) == lam:
            assert np.max(np.abs(values.imag)) < 1e-10


@pytest.mark.parametrize("rows", [(1,), (2,)])
def test_quantum_dimension_classical_limit(rows):
    lam = Label(rows)
    assert abs(quantum_dimension(lam, 2, 4096) - weyl_dimension(lam, 2)) < 1e-3


def test_curve_spectrum_rejects_foreign_label():
    with pytest.raises(ParameterDomainError):
        curve_spectrum(Label((4,)), 2, 3)


def test_verlinde_examples():
    assert verlinde_dim(2, 4, 0).nearest == 1
    assert verlinde_dim(3, 3, 1).nearest == len(build_label_set(3, 3))
    result = verlinde_dim(2, 1, 2)
    assert result.nearest == 4
    assert result.deviation < 1e-10


@pytest.mark.parametrize("g", [0, 1, 2, 3])
def test_verlinde_integrality_su2(g):
    for k in range(1, 13):
        result = verlinde_dim(2, k, g)
        assert result.deviation < 1e-6
        assert result.nearest >= 0


def test_verlinde_with_boundary_labels():
    # one puncture with the fundamental at genus 0 has no invariants
    assert verlinde_dim(2, 3, 0, [Label((1,))]).nearest == 0
    assert verlinde_dim(2, 3, 0, [Label((1,)), Label((1,))]).nearest == 1
    with pytest.raises(ParameterDomainError):
        verlinde_dim(2, 3, -1)
