"""
Dense complex linear algebra and Hilbert-Schmidt subspace arithmetic.

Matrices are plain `numpy` arrays of dtype complex128. A `MatSubspace`
stores an orthonormal basis (under <A, B> = trace(B* A)) as an array of
shape (dim, rows, cols).
"""

import logging_config
import config
from utils import (InputError, DimensionMismatchError, PreconditionError, VerificationFailedError,
                   LimitExceededError, to_pairs, from_pairs)

from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence
import math
import numpy as np

logger = logging_config.get_local_logger(__name__)

CMatrix = np.ndarray


@dataclass(frozen=True)
class Tolerance:
    """
    Rank threshold and seed shared by every numerical decision.

    Attributes:
        eps: absolute part of the relative threshold eps * (1 + scale)
        seed: seed for every randomized subroutine
    """
    eps: float = config.DEFAULT_EPS
    seed: int = config.DEFAULT_SEED

    def __post_init__(self):
        if not self.eps > 0:
            message = f'Tolerance eps must be positive, got {self.eps}.'
            logger.error(message)
            raise InputError(message)
        if self.seed < 0:
            message = f'Seed must be non-negative, got {self.seed}.'
            logger.error(message)
            raise InputError(message)

    def small(self, scale: float = 0.0) -> float:
        """Threshold below which a quantity of magnitude `scale` counts as zero."""
        return self.eps * (1.0 + scale)

    def rng(self, *salt: int) -> np.random.Generator:
        """
        Returns a generator determined by the seed and `salt`.

        Examples:
            >>> t = Tolerance(seed=3)
            >>> float(t.rng(1).random()) == float(t.rng(1).random())
            True
        """
        return np.random.default_rng([self.seed, *salt])


def as_cmatrix(m: Any) -> CMatrix:
    """
    Converts `m` to a finite 2-D complex array.

    Raises:
        InputError: If `m` is not 2-D or contains NaN/Inf.
    """
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or 0 in a.shape:
        message = f'Expected a non-empty matrix, got shape {a.shape}.'
        logger.error(message)
        raise InputError(message)
    if not np.all(np.isfinite(a)):
        message = 'Matrix contains NaN or Inf entries.'
        logger.error(message)
        raise InputError(message)
    return a


def check_ambient_dim(d: int) -> None:
    """Raises `LimitExceededError` when `d` exceeds the ambient size cap."""
    if d > config.MAX_AMBIENT_DIM:
        message = f'Ambient dimension {d} exceeds the cap {config.MAX_AMBIENT_DIM}.'
        logger.error(message)
        raise LimitExceededError(message)


def matrix_unit(i: int, j: int, shape: tuple[int, int]) -> CMatrix:
    """
    Returns E_ij of the given shape.

    Examples:
        >>> matrix_unit(0, 1, (2, 2)).real.tolist()
        [[0.0, 1.0], [0.0, 0.0]]
    """
    e = np.zeros(shape, dtype=np.complex128)
    e[i, j] = 1
    return e


def hs_norm(m: CMatrix) -> float:
    return float(np.linalg.norm(m))


def op_norm(m: CMatrix) -> float:
    """Spectral norm."""
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class MatSubspace:
    """
    A subspace of rows x cols complex matrices with an orthonormal basis.

    Attributes:
        ambient: (rows, cols)
        basis: array of shape (dim, rows, cols)
        tol: tolerance the basis was computed with
    """
    ambient: tuple[int, int]
    basis: np.ndarray
    tol: Tolerance = field(default_factory=Tolerance)

    def __post_init__(self):
        if self.basis.ndim != 3 or tuple(self.basis.shape[1:]) != tuple(self.ambient):
            message = (f'Basis of shape {self.basis.shape} does not match '
                       f'ambient {self.ambient}.')
            logger.error(message)
            raise DimensionMismatchError(message)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rows(self) -> int:
        return self.ambient[0]

    @property
    def cols(self) -> int:
        return self.ambient[1]

    @property
    def space(self) -> 'MatSubspace':
        return self

    @property
    def vectors(self) -> np.ndarray:
        """Basis as rows of a (dim, rows*cols) array."""
        return self.basis.reshape(self.dim, -1)

    def element(self, coeffs: Sequence[complex]) -> CMatrix:
        """Linear combination of the basis."""
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.basis, axes=1)

    def project(self, m: CMatrix) -> CMatrix:
        return self.element(coefficients(self, m))

    def random_element(self, rng: np.random.Generator) -> CMatrix:
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        return self.element(c)

    def __len__(self) -> int:
        return self.dim


#region basic subspace operations
def _check_shapes(mats: Sequence[CMatrix], ambient: tuple[int, int] | None) -> tuple[int, int]:
    shapes = {m.shape for m in mats}
    if ambient is not None:
        shapes.add(tuple(ambient))
    if len(shapes) > 1:
        message = f'Matrices of different shapes given: {sorted(shapes)}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    return shapes.pop() if shapes else (1, 1)


def orthonormal_basis(mats: Iterable[CMatrix], tol: Tolerance = Tolerance(),
                      ambient: tuple[int, int] | None = None) -> MatSubspace:
    """
    Computes an orthonormal basis of the span of `mats`.

    Classical Gram-Schmidt with one re-orthogonalization pass; a vector is
    dropped when its residual is at most eps * (1 + its norm).

    Args:
        mats: spanning matrices of a common shape
        tol: tolerance
        ambient: shape of the ambient space, needed when `mats` is empty

    Returns:
        Subspace spanned by `mats`.

    Raises:
        DimensionMismatchError: If shapes differ.
    """
    mats = [as_cmatrix(m) for m in mats]
    r, c = _check_shapes(mats, ambient)
    check_ambient_dim(max(r, c))
    n = r * c

    q = np.zeros((0, n), dtype=np.complex128)
    for m in mats:
        if q.shape[0] == n:
            break
        v = m.reshape(-1).copy()
        norm = np.linalg.norm(v)
        for _ in range(2):
            v -= (q.conj() @ v) @ q
        res = np.linalg.norm(v)
        if res <= tol.small(norm):
            continue
        q = np.vstack([q, v / res])

    return MatSubspace((r, c), q.reshape(-1, r, c), tol)


def zero_space(ambient: tuple[int, int], tol: Tolerance = Tolerance()) -> MatSubspace:
    return MatSubspace(tuple(ambient), np.zeros((0, *ambient), dtype=np.complex128), tol)


def coefficients(space: MatSubspace, m: CMatrix) -> np.ndarray:
    """Coordinates of the orthogonal projection of `m` in the basis of `space`."""
    m = as_cmatrix(m)
    if m.shape != tuple(space.ambient):
        message = f'Matrix of shape {m.shape} outside ambient {space.ambient}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    return space.vectors.conj() @ m.reshape(-1)


def contains(space: MatSubspace, m: CMatrix) -> tuple[bool, float]:
    """
    Tests membership of `m` in `space`.

    Returns:
        A tuple containing:
            1. whether the distance is at most eps * (1 + |m|)
            2. Hilbert-Schmidt distance from `m` to `space`
    """
    m = as_cmatrix(m)
    coeffs = coefficients(space, m)
    residual = float(np.linalg.norm(m.reshape(-1) - coeffs @ space.vectors))
    return residual <= space.tol.small(hs_norm(m)), residual


def is_subspace(x: MatSubspace, y: MatSubspace) -> tuple[bool, float]:
    """
    Tests x ⊆ y by checking every basis element of x.

    Returns:
        A tuple containing the flag and the worst residual.
    """
    if tuple(x.ambient) != tuple(y.ambient):
        message = f'Ambient shapes differ: {x.ambient} and {y.ambient}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    if x.dim == 0:
        return True, 0.0
    proj = (x.vectors @ y.vectors.conj().T) @ y.vectors
    residual = float(np.linalg.norm(x.vectors - proj, axis=1).max())
    return residual <= y.tol.small(1.0), residual


def span_equal(x: MatSubspace, y: MatSubspace) -> tuple[bool, float]:
    """Mutual containment of two spans; returns the flag and the worst residual."""
    ok_xy, r_xy = is_subspace(x, y)
    ok_yx, r_yx = is_subspace(y, x)
    return ok_xy and ok_yx and x.dim == y.dim, max(r_xy, r_yx)


def product_span(x: MatSubspace, y: MatSubspace) -> MatSubspace:
    """
    Computes [X Y], the span of all products of basis elements.

    Raises:
        DimensionMismatchError: If x.cols != y.rows.
    """
    if x.cols != y.rows:
        message = f'Cannot multiply spaces of shapes {x.ambient} and {y.ambient}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    shape = (x.rows, y.cols)
    if x.dim == 0 or y.dim == 0:
        return zero_space(shape, x.tol)
    products = np.einsum('aij,bjk->abik', x.basis, y.basis).reshape(-1, *shape)
    return orthonormal_basis(products, x.tol, shape)


def adjoint_space(x: MatSubspace) -> MatSubspace:
    """The space {x* : x in X}; adjoints of an orthonormal basis stay orthonormal."""
    return MatSubspace((x.cols, x.rows), np.conj(np.transpose(x.basis, (0, 2, 1))), x.tol)


def sum_space(x: MatSubspace, y: MatSubspace) -> MatSubspace:
    """The join X + Y."""
    return orthonormal_basis(list(x.basis) + list(y.basis), x.tol, x.ambient)


def null_space(a: np.ndarray, tol: Tolerance = Tolerance()) -> np.ndarray:
    """
    Kernel of `a` by SVD, using the relative rank rule.

    Returns:
        Matrix whose columns are an orthonormal basis of the kernel.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    m, n = a.shape
    if m < n:
        a = np.vstack([a, np.zeros((n - m, n), dtype=np.complex128)])
    _, s, vh = np.linalg.svd(a, full_matrices=False)
    scale = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol.small(scale)))
    return vh[rank:].conj().T


def intersection(x: MatSubspace, y: MatSubspace) -> MatSubspace:
    """The meet X ∩ Y, from the kernel of [Bx | -By]."""
    if tuple(x.ambient) != tuple(y.ambient):
        message = f'Ambient shapes differ: {x.ambient} and {y.ambient}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    if x.dim == 0 or y.dim == 0:
        return zero_space(x.ambient, x.tol)
    stacked = np.hstack([x.vectors.T, -y.vectors.T])
    kernel = null_space(stacked, x.tol)
    elements = (x.vectors.T @ kernel[:x.dim]).T.reshape(-1, *x.ambient)
    return orthonormal_basis(elements, x.tol, x.ambient)


def hermitian_basis(x: MatSubspace) -> list[CMatrix]:
    """
    Orthonormal basis of the Hermitian part of an adjoint-closed space.

    The Hilbert-Schmidt product of Hermitian matrices is real, so the
    Gram-Schmidt coefficients are real and hermiticity is preserved.
    """
    parts = []
    for b in x.basis:
        parts.append((b + b.conj().T) / 2)
        parts.append((b - b.conj().T) / 2j)
    space = orthonormal_basis(parts, x.tol, x.ambient)
    return [(h + h.conj().T) / 2 for h in space.basis]


def random_hermitian(x: MatSubspace, rng: np.random.Generator) -> CMatrix:
    """A random Hermitian element of an adjoint-closed space."""
    herm = hermitian_basis(x)
    if not herm:
        return np.zeros(x.ambient, dtype=np.complex128)
    return np.tensordot(rng.normal(size=len(herm)), np.array(herm), axes=1)
#endregion


#region operator systems
@dataclass(frozen=True, eq=False)
class OperatorSystem(MatSubspace):
    """
    A unital, adjoint-closed subspace of M_d.

    Build instances with `OperatorSystem.from_space` or `operator_system`
    so that the invariants are checked.
    """

    @property
    def d(self) -> int:
        return self.ambient[0]

    @classmethod
    def from_space(cls, space: MatSubspace) -> 'OperatorSystem':
        """
        Validates `space` as an operator system.

        Raises:
            InputError: If the space is not square, not unital or not
                adjoint-closed.
        """
        r, c = space.ambient
        if r != c:
            message = f'Operator system must be square, got ambient {space.ambient}.'
            logger.error(message)
            raise InputError(message)
        unital, residual = contains(space, np.eye(r))
        if not unital:
            message = f'Space does not contain the identity (residual {residual:.3g}).'
            logger.error(message)
            raise InputError(message)
        closed, residual = is_subspace(adjoint_space(space), space)
        if not closed:
            message = f'Space is not closed under adjoints (residual {residual:.3g}).'
            logger.error(message)
            raise InputError(message)
        return cls(space.ambient, space.basis, space.tol)


def operator_system(mats: Iterable[CMatrix], tol: Tolerance = Tolerance(),
                    ambient: tuple[int, int] | None = None) -> OperatorSystem:
    """Span of `mats` as a validated operator system."""
    return OperatorSystem.from_space(orthonormal_basis(mats, tol, ambient))


def full_matrices(d: int, tol: Tolerance = Tolerance()) -> OperatorSystem:
    """M_d."""
    return OperatorSystem((d, d), np.eye(d * d, dtype=np.complex128).reshape(-1, d, d), tol)


def diagonal_matrices(d: int, tol: Tolerance = Tolerance()) -> OperatorSystem:
    """D_d."""
    return OperatorSystem((d, d), np.array([matrix_unit(i, i, (d, d)) for i in range(d)]), tol)


def scalars(d: int = 1, tol: Tolerance = Tolerance()) -> OperatorSystem:
    """C * I_d."""
    return OperatorSystem((d, d), (np.eye(d) / math.sqrt(d))[None].astype(np.complex128), tol)


def amplify(s: OperatorSystem, k: int) -> OperatorSystem:
    """
    The operator system M_k(S) inside M_{kd}, spanned by E_ij ⊗ s.

    Raises:
        InputError: If k < 1.
    """
    if k < 1:
        message = f'Amplification level must be positive, got {k}.'
        logger.error(message)
        raise InputError(message)
    check_ambient_dim(k * s.d)
    # kron of orthonormal bases is orthonormal
    basis = np.array([np.kron(matrix_unit(i, j, (k, k)), b)
                      for i in range(k) for j in range(k) for b in s.basis])
    return OperatorSystem((k * s.d, k * s.d), basis.reshape(-1, k * s.d, k * s.d), s.tol)


def conjugate_system(s: OperatorSystem, u: CMatrix) -> OperatorSystem:
    """The system u S u* for an isometry or unitary u."""
    u = as_cmatrix(u)
    return operator_system([u @ b @ u.conj().T for b in s.basis], s.tol)
#endregion


#region eigenvalues
def herm_eig(h: CMatrix, tol: Tolerance = Tolerance()) -> tuple[np.ndarray, CMatrix]:
    """
    Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.

    Each rotation first removes the phase of the pivot h_pq and then applies
    the real plane rotation of angle at most pi/4 that annihilates it. Sweeps
    stop once no pivot exceeds a few units of roundoff relative to ||h||.

    Args:
        h: Hermitian matrix
        tol: tolerance for the hermiticity check and the convergence test

    Returns:
        A tuple containing:
            1. eigenvalues in ascending order
            2. unitary whose columns are the matching eigenvectors

    Raises:
        InputError: If `h` is not square or not Hermitian.
        VerificationFailedError: If the off-diagonal part is still above the
            tolerance after JACOBI_MAX_SWEEPS sweeps.

    Examples:
        >>> w, u = herm_eig(np.array([[0, 1], [1, 0]]))
        >>> np.round(w, 12).tolist()
        [-1.0, 1.0]
    """
    a = as_cmatrix(h)
    n, m = a.shape
    if n != m:
        message = f'Eigenvalues requested for a non-square matrix {a.shape}.'
        logger.error(message)
        raise InputError(message)
    scale = hs_norm(a)
    if hs_norm(a - a.conj().T) > tol.small(scale):
        message = 'Eigenvalues requested for a non-Hermitian matrix.'
        logger.error(message)
        raise InputError(message)

    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=np.complex128)
    # pivots at or below this are already zero to working precision
    floor = 8 * np.finfo(float).eps * scale

    sweeps = 0
    for sweeps in range(1, config.JACOBI_MAX_SWEEPS + 1):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                if abs(b) <= floor:
                    continue
                rotated = True
                phase = b / abs(b)
                tau = (a[q, q] - a[p, p]).real / (2 * abs(b))
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
        if not rotated:
            break

    off = hs_norm(a - np.diag(np.diag(a)))
    if off > tol.small(scale):
        message = (f'Jacobi iteration did not converge in {config.JACOBI_MAX_SWEEPS} sweeps '
                   f'(off-diagonal norm {off:.3g}).')
        logger.error(message)
        raise VerificationFailedError(message, {'off_diagonal': off, 'sweeps': sweeps})
    logger.debug(f'Jacobi converged after {sweeps} sweeps, off-diagonal norm {off:.3g}.')

    w = np.diag(a).real
    order = np.argsort(w, kind='stable')
    return w[order], v[:, order]


def psd_power(h: CMatrix, power: float, tol: Tolerance = Tolerance()) -> CMatrix:
    """
    h**power for a positive semidefinite `h`.

    Raises:
        PreconditionError: If `h` has a negative eigenvalue, or, for negative
            powers, an eigenvalue below the floor eps * (1 + max eigenvalue).
    """
    w, u = herm_eig(h, tol)
    top = max(float(w[-1]), 0.0) if w.size else 0.0
    floor = tol.small(top)
    if w.size and w[0] < -floor:
        message = f'Matrix is not positive semidefinite (eigenvalue {w[0]:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'psd', float(-w[0]))
    if power < 0 and w.size and w[0] <= floor:
        message = f'Matrix is singular (eigenvalue {w[0]:.3g} below floor {floor:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'invertible', float(w[0]))
    w = np.clip(w, 0.0, None)
    return (u * w ** power) @ u.conj().T


def min_eigenvalue(h: CMatrix) -> float:
    """Smallest eigenvalue by LAPACK; used in high-volume positivity sampling."""
    h = (h + h.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])
#endregion


#region json
def cmatrix_to_json(m: CMatrix) -> dict:
    m = as_cmatrix(m)
    return {'rows': m.shape[0], 'cols': m.shape[1], 'entries': to_pairs(m.reshape(-1))}


def cmatrix_from_json(data: dict) -> CMatrix:
    """
    Reads a matrix from {"rows", "cols", "entries"}.

    Raises:
        InputError: If the entry count does not match the shape.
    """
    try:
        rows, cols = int(data['rows']), int(data['cols'])
        entries = from_pairs(data['entries'])
    except (KeyError, TypeError) as e:
        message = f'Malformed matrix JSON: {e}.'
        logger.error(message)
        raise InputError(message)
    if rows < 1 or cols < 1 or len(entries) != rows * cols:
        message = f'Matrix JSON has {len(entries)} entries for shape ({rows}, {cols}).'
        logger.error(message)
        raise InputError(message)
    return as_cmatrix(np.array(entries).reshape(rows, cols))


def subspace_to_json(x: MatSubspace) -> dict:
    return {'ambient': list(x.ambient), 'basis': [cmatrix_to_json(b) for b in x.basis]}


def subspace_from_json(data: dict, tol: Tolerance = Tolerance()) -> MatSubspace:
    """Reads a subspace; the given basis is re-orthonormalized."""
    try:
        ambient = tuple(int(a) for a in data['ambient'])
        mats = [cmatrix_from_json(b) for b in data['basis']]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, InputError):
            raise
        message = f'Malformed subspace JSON: {e}.'
        logger.error(message)
        raise InputError(message)
    if len(ambient) != 2:
        message = f'Ambient must have two entries, got {ambient}.'
        logger.error(message)
        raise InputError(message)
    return orthonormal_basis(mats, tol, ambient)


def system_from_json(data: dict, tol: Tolerance = Tolerance()) -> OperatorSystem:
    return OperatorSystem.from_space(subspace_from_json(data, tol))
#endregion
