import numpy as np
import pytest

from matcore import (orthonormal_basis, scalars, full_matrices, diagonal_matrices, amplify,
                     matrix_unit, span_equal)
from funcsys import (centre_system, theta_iso, toeplitz_system, amplification_tro,
                     rigid_stable_structure)
import funcsys
from cstar import generated_algebra, multiplier_algebra, is_rigid
from tro import verify_tro_equivalence
from utils import InputError, NotRigidError, NonCommutativeError, PreconditionError


@pytest.fixture
def column():
    return orthonormal_basis([[[1], [0]], [[0], [1]]])


def test_centre_system():
    assert centre_system(toeplitz_system(3)).centre.dim == 1
    cert = centre_system(diagonal_matrices(2))
    assert cert.centre.dim == 2
    assert cert.residual < 1e-12
    assert cert.to_json()['dim'] == 2


def test_theta_between_diagonal_algebras():
    d2 = diagonal_matrices(2)
    theta = theta_iso(d2, d2, d2)
    np.testing.assert_allclose(theta(np.diag([2.0, 5.0])), np.diag([2.0, 5.0]), atol=1e-12)
    assert all(v < 1e-10 for v in theta.residuals.values())
    assert 'multiplicative' in theta.residuals


def test_theta_restricted_to_centres(column):
    theta = theta_iso(column, scalars(1), full_matrices(2), centre_only=True)
    np.testing.assert_allclose(theta(np.eye(1)), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(theta.inverse(np.eye(2)), np.eye(1), atol=1e-12)
    assert theta.matrix.shape == (1, 1)
    assert 'multiplicative' not in theta.residuals


def test_theta_requires_commutative_algebras(column):
    with pytest.raises(NonCommutativeError) as info:
        theta_iso(column, scalars(1), full_matrices(2))
    assert info.value.condition == 'commutative'


def test_theta_requires_an_equivalence(column):
    with pytest.raises(PreconditionError):
        theta_iso(column, diagonal_matrices(2), full_matrices(2))


def test_toeplitz_system():
    s = toeplitz_system(4)
    assert s.dim == 7
    assert s.d == 4
    with pytest.raises(InputError):
        toeplitz_system(0)


def test_amplification_tro():
    m = amplification_tro(3, 2)
    assert m.ambient == (6, 3)
    assert m.dim == 2
    s = toeplitz_system(3)
    assert verify_tro_equivalence(s, amplify(s, 2), m).passed
    with pytest.raises(InputError):
        amplification_tro(3, 0)


def test_rigid_stable_structure():
    s = toeplitz_system(3)
    t = amplify(s, 2)
    structure = rigid_stable_structure(s, t, amplification_tro(3, 2))
    assert structure.k == 2
    assert structure.blocks == [(2, 3)]
    assert structure.residual < 1e-10
    images = orthonormal_basis([structure.phi(b) for b in t.basis], ambient=(6, 6))
    assert span_equal(images, amplify(s, 2))[0]
    b = t.basis[3]
    np.testing.assert_allclose(structure.phi_inverse(structure.phi(b)), b, atol=1e-10)


def test_rigid_stable_structure_requires_rigid_system():
    d2 = diagonal_matrices(2)
    with pytest.raises(NotRigidError):
        rigid_stable_structure(d2, d2, d2)


def test_rigid_stable_structure_rejects_wrong_multiplier_blocks(monkeypatch):
    monkeypatch.setattr(funcsys, 'multiplier_algebra', lambda t: generated_algebra(scalars(6)))
    s = toeplitz_system(3)
    with pytest.raises(PreconditionError) as info:
        rigid_stable_structure(s, amplify(s, 2), amplification_tro(3, 2))
    assert info.value.condition == 'blocks'
    assert info.value.residual == 3.0


def permutation_pattern(perm: list[int]):
    n = len(perm)
    return orthonormal_basis([matrix_unit(perm[i], i, (n, n)) for i in range(n)])


def test_theta_swaps_diagonal_entries():
    d2 = diagonal_matrices(2)
    theta = theta_iso(permutation_pattern([1, 0]), d2, d2)
    np.testing.assert_allclose(theta(np.diag([-1.0, 3.0])), np.diag([3.0, -1.0]), atol=1e-12)


@pytest.mark.parametrize('seed', range(20))
def test_theta_permutes_diagonal_systems(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    perm = [int(v) for v in rng.permutation(n)]
    d = diagonal_matrices(n)
    m = permutation_pattern(perm)

    theta = theta_iso(m, d, d)
    assert all(v <= 1e-9 for v in theta.residuals.values())
    x = rng.normal(size=n)
    moved = np.zeros(n)
    moved[perm] = x
    np.testing.assert_allclose(theta(np.diag(x)), np.diag(moved), atol=1e-10)
    np.testing.assert_allclose(theta.inverse(np.diag(moved)), np.diag(x), atol=1e-10)

    centres = theta_iso(m, d, d, centre_only=True)
    assert centres.matrix.shape == (n, n)
    assert np.linalg.matrix_rank(centres.matrix) == n


@pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
def test_toeplitz_systems_are_rigid(n):
    s = toeplitz_system(n)
    assert is_rigid(s)
    assert multiplier_algebra(s).dim == 1
    assert generated_algebra(s).dim == n * n


@pytest.mark.parametrize('n', [2, 3, 4])
def test_rigid_stable_structure_of_toeplitz_amplifications(n):
    s = toeplitz_system(n)
    structure = rigid_stable_structure(s, amplify(s, 2), amplification_tro(n, 2))
    assert structure.k == 2
    assert structure.residual < 1e-9
