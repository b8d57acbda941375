import numpy as np
import pytest

import config
from matcore import (Tolerance, orthonormal_basis, contains, is_subspace, span_equal, product_span,
                     adjoint_space, intersection, sum_space, hermitian_basis, coefficients,
                     operator_system, full_matrices, diagonal_matrices, scalars, amplify,
                     conjugate_system, herm_eig, psd_power, matrix_unit, cmatrix_to_json,
                     cmatrix_from_json, subspace_to_json, subspace_from_json, system_from_json,
                     as_cmatrix)
from utils import (InputError, DimensionMismatchError, PreconditionError, LimitExceededError,
                   VerificationFailedError)


def random_hermitian_matrix(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


def test_orthonormal_basis_drops_dependent_matrices():
    e11, e12 = matrix_unit(0, 0, (2, 2)), matrix_unit(0, 1, (2, 2))
    space = orthonormal_basis([e11, e12, e11 + 2 * e12, np.zeros((2, 2))])
    assert space.dim == 2
    np.testing.assert_allclose(space.vectors @ space.vectors.conj().T, np.eye(2), atol=1e-12)


def test_orthonormal_basis_rejects_mixed_shapes():
    with pytest.raises(DimensionMismatchError):
        orthonormal_basis([np.eye(2), np.eye(3)])


def test_orthonormal_basis_of_nearly_parallel_matrices():
    rng = np.random.default_rng(11)
    base = rng.normal(size=(3, 3))
    mats = [base + 1e-4 * rng.normal(size=(3, 3)) for _ in range(9)]
    space = orthonormal_basis(mats)
    assert space.dim == 9
    np.testing.assert_allclose(space.vectors @ space.vectors.conj().T, np.eye(9), atol=1e-12)


def test_orthonormal_basis_caps_ambient_dimension():
    with pytest.raises(LimitExceededError):
        orthonormal_basis([], ambient=(config.MAX_AMBIENT_DIM + 1, 1))


def test_as_cmatrix_rejects_nan():
    with pytest.raises(InputError):
        as_cmatrix([[np.nan]])


def test_contains_and_coefficients():
    d2 = diagonal_matrices(2)
    ok, residual = contains(d2, np.diag([3, -1]))
    assert ok and residual < 1e-12
    ok, residual = contains(d2, matrix_unit(0, 1, (2, 2)))
    assert not ok
    assert residual == pytest.approx(1.0)
    c = coefficients(d2, np.diag([3, -1]))
    np.testing.assert_allclose(d2.element(c), np.diag([3, -1]), atol=1e-12)


def test_span_equal_detects_different_spans():
    assert span_equal(full_matrices(2), full_matrices(2))[0]
    assert not span_equal(diagonal_matrices(2), full_matrices(2))[0]
    assert is_subspace(diagonal_matrices(2), full_matrices(2))[0]


def test_product_span_of_column_and_row_is_full():
    col = orthonormal_basis([[[1], [0]], [[0], [1]]])
    assert product_span(col, adjoint_space(col)).dim == 4
    assert product_span(adjoint_space(col), col).dim == 1


def test_intersection_and_sum():
    upper = orthonormal_basis([matrix_unit(0, 0, (2, 2)), matrix_unit(0, 1, (2, 2))])
    diag = diagonal_matrices(2)
    assert intersection(upper, diag).dim == 1
    assert sum_space(upper, diag).dim == 3


def test_hermitian_basis_is_hermitian_and_real_dimensional():
    herm = hermitian_basis(full_matrices(2))
    assert len(herm) == 4
    for h in herm:
        np.testing.assert_allclose(h, h.conj().T, atol=1e-12)


def test_operator_system_validation():
    with pytest.raises(InputError):
        operator_system([matrix_unit(0, 1, (2, 2)), np.eye(2)])
    with pytest.raises(InputError):
        operator_system([matrix_unit(0, 0, (2, 2))])
    s = operator_system([np.eye(2), matrix_unit(0, 1, (2, 2)), matrix_unit(1, 0, (2, 2))])
    assert s.dim == 3


def test_standard_systems():
    assert full_matrices(3).dim == 9
    assert diagonal_matrices(3).dim == 3
    assert scalars(4).dim == 1
    assert amplify(diagonal_matrices(2), 3).dim == 18


def test_conjugate_system_preserves_dimension():
    rng = np.random.default_rng(5)
    u, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    assert conjugate_system(diagonal_matrices(3), u).dim == 3


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_herm_eig_matches_lapack(seed):
    h = random_hermitian_matrix(5, seed)
    w, u = herm_eig(h)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(h), atol=1e-9)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-9)
    np.testing.assert_allclose(u @ np.diag(w) @ u.conj().T, h, atol=1e-9)


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(InputError):
        herm_eig(matrix_unit(0, 1, (2, 2)))


def test_herm_eig_reconstructs_many_random_matrices():
    tol = Tolerance()
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 17))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = (a + a.conj().T) * 10.0 ** rng.integers(-3, 4)
        w, u = herm_eig(h, tol)
        bound = tol.small(np.linalg.norm(h))
        assert np.linalg.norm(u @ np.diag(w) @ u.conj().T - h) <= bound
        assert np.linalg.norm(u.conj().T @ u - np.eye(n)) <= bound
        assert np.all(np.diff(w) >= 0)


def test_herm_eig_of_degenerate_and_diagonal_matrices():
    w, u = herm_eig(np.diag([3.0, 1.0, 1.0, 2.0]))
    assert w.tolist() == [1.0, 1.0, 2.0, 3.0]
    w, u = herm_eig(np.ones((6, 6)))
    np.testing.assert_allclose(w, [0, 0, 0, 0, 0, 6], atol=1e-12)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)


def test_herm_eig_reports_non_convergence(monkeypatch):
    monkeypatch.setattr(config, 'JACOBI_MAX_SWEEPS', 0)
    with pytest.raises(VerificationFailedError) as info:
        herm_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert info.value.report['off_diagonal'] > 1


def test_psd_power_inverse_square_root():
    h = random_hermitian_matrix(4, 7)
    p = h @ h + np.eye(4)
    r = psd_power(p, -0.5)
    np.testing.assert_allclose(r @ p @ r, np.eye(4), atol=1e-8)


def test_psd_power_preconditions():
    with pytest.raises(PreconditionError) as info:
        psd_power(np.diag([1.0, -1.0]), 0.5)
    assert info.value.condition == 'psd'
    with pytest.raises(PreconditionError) as info:
        psd_power(np.diag([1.0, 0.0]), -0.5)
    assert info.value.condition == 'invertible'


def test_tolerance_validation_and_seeding():
    with pytest.raises(InputError):
        Tolerance(eps=0.0)
    assert Tolerance(seed=4).rng(1).random() == Tolerance(seed=4).rng(1).random()


def test_json_codecs():
    m = np.array([[1 + 2j, 0], [3, -1j]])
    np.testing.assert_allclose(cmatrix_from_json(cmatrix_to_json(m)), m)
    col = orthonormal_basis([[[1], [0]], [[0], [1]]])
    assert span_equal(subspace_from_json(subspace_to_json(col)), col)[0]
    assert system_from_json(subspace_to_json(full_matrices(2))).dim == 4


def test_json_codecs_reject_malformed_input():
    with pytest.raises(InputError):
        cmatrix_from_json({'rows': 2, 'cols': 2, 'entries': [[1, 0]]})
    with pytest.raises(InputError):
        subspace_from_json({'basis': []})


def test_matrix_json_is_flat_row_major():
    m = cmatrix_from_json({'rows': 2, 'cols': 2, 'entries': [[1, 0], [0, 1], 2, [0, -1]]})
    np.testing.assert_array_equal(m, np.array([[1, 1j], [2, -1j]]))
    assert cmatrix_to_json(m)['entries'] == [[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, -1.0]]
    with pytest.raises(InputError):
        cmatrix_from_json({'rows': 2, 'cols': 2,
                           'entries': [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]})
