"""
Centres of operator systems, the function-system isomorphism carried by a
TRO-equivalence, Toeplitz systems and the structure of systems equivalent
to a rigid one.
"""

import logging_config
from matcore import (MatSubspace, OperatorSystem, Tolerance, CMatrix, as_cmatrix,
                     orthonormal_basis, intersection, contains, span_equal, coefficients,
                     amplify, psd_power, matrix_unit, hs_norm, subspace_to_json)
from cstar import (generated_algebra, commutant, multiplier_algebra, block_decompose,
                   is_commutative, is_rigid)
from tro import TRO, verify_tro_equivalence, quasi_unit
from utils import (InputError, PreconditionError, NotRigidError, NonCommutativeError,
                   VerificationFailedError, to_pairs)

from dataclasses import dataclass
import numpy as np

logger = logging_config.get_local_logger(__name__)


#region centres
@dataclass
class CentreCertificate:
    """
    Z(S) = S ∩ C*(S)' with the worst commutator against C*(S).

    Attributes:
        centre: basis of Z(S)
        residual: max |zc - cz| over basis elements z of Z(S), c of C*(S)
        assumption: how C*(S) stands in for the C*-envelope
    """
    centre: MatSubspace
    residual: float
    assumption: str = 'C*(S) is taken as the C*-envelope (irreducible action)'

    def to_json(self) -> dict:
        return {'dim': self.centre.dim, 'basis': subspace_to_json(self.centre),
                'residual': self.residual, 'assumption': self.assumption}


def centre_system(s: OperatorSystem) -> CentreCertificate:
    """
    Elements of S commuting with C*(S).

    Examples:
        >>> from matcore import full_matrices, diagonal_matrices
        >>> centre_system(full_matrices(3)).centre.dim
        1
        >>> centre_system(diagonal_matrices(3)).centre.dim
        3
    """
    c = generated_algebra(s)
    z = intersection(s, commutant(c))
    residual = max((hs_norm(zi @ ci - ci @ zi) for zi in z.basis for ci in c.basis), default=0.0)
    logger.debug(f'Centre of dimension {z.dim} in a system of dimension {s.dim}.')
    return CentreCertificate(z, residual)
#endregion


#region function systems
@dataclass
class ThetaMap:
    """
    ϑ(a) = Σ m_n a m_n* with Σ m_n m_n* = I, and its inverse
    φ(c) = Σ r_n* c r_n with Σ r_n* r_n = I.

    Attributes:
        domain: C*(S), or Z(S) in centre mode
        codomain: C*(T), or Z(T) in centre mode
        matrix: coefficients of ϑ(domain basis) in the codomain basis (columns)
        residuals: worst residual per checked property
    """
    domain: MatSubspace
    codomain: MatSubspace
    left_units: list[CMatrix]
    right_units: list[CMatrix]
    matrix: np.ndarray
    residuals: dict

    def __call__(self, a: CMatrix) -> CMatrix:
        a = as_cmatrix(a)
        return sum(mn @ a @ mn.conj().T for mn in self.left_units)

    def inverse(self, c: CMatrix) -> CMatrix:
        c = as_cmatrix(c)
        return sum(rn.conj().T @ c @ rn for rn in self.right_units)

    def to_json(self) -> dict:
        return {'domain_dim': self.domain.dim, 'codomain_dim': self.codomain.dim,
                'matrix': [to_pairs(row) for row in self.matrix],
                'residuals': self.residuals}


def theta_iso(m: MatSubspace, s: OperatorSystem, t: OperatorSystem,
              centre_only: bool = False) -> ThetaMap:
    """
    The isomorphism C*(S) -> C*(T) of a TRO-equivalence between function
    systems; with `centre_only`, its restriction Z(S) -> Z(T) for arbitrary
    systems.

    Raises:
        PreconditionError: If (S, T, M) is not a TRO-equivalence.
        NonCommutativeError: If C*(S) or C*(T) is not commutative and
            `centre_only` is not set.
        VerificationFailedError: If a checked property fails.
    """
    report = verify_tro_equivalence(s, t, m)
    if not report.passed:
        message = f'Not a TRO-equivalence: {report.failures()}.'
        logger.error(message)
        raise PreconditionError(message, report.failures()[0], report.worst_residual)
    tol = s.tol

    if centre_only:
        domain, codomain = centre_system(s).centre, centre_system(t).centre
    else:
        domain, codomain = generated_algebra(s), generated_algebra(t)
        for name, alg in [('C*(S)', domain), ('C*(T)', codomain)]:
            ok, residual = is_commutative(alg)
            if not ok:
                message = f'{name} is not commutative (commutator {residual:.3g}).'
                logger.error(message)
                raise NonCommutativeError(message, 'commutative', residual)

    theta = ThetaMap(domain, codomain, quasi_unit(m, 'left'), quasi_unit(m, 'right'),
                     np.zeros((codomain.dim, domain.dim), dtype=np.complex128), {})
    images = [theta(a) for a in domain.basis]
    theta.matrix = np.array([coefficients(codomain, x) for x in images]).T \
        if images else theta.matrix

    res = theta.residuals
    res['range'] = max((contains(codomain, x)[1] for x in images), default=0.0)
    res['unital'] = hs_norm(theta(np.eye(s.d)) - np.eye(t.d))
    res['inverse'] = max((hs_norm(theta.inverse(x) - a) for a, x in zip(domain.basis, images)),
                         default=0.0)
    res['inverse_range'] = max((contains(domain, theta.inverse(c))[1] for c in codomain.basis),
                               default=0.0)
    res['surjective'] = span_equal(orthonormal_basis(images, tol, codomain.ambient), codomain)[1]
    if not centre_only:
        res['multiplicative'] = max((hs_norm(theta(a @ b) - theta(a) @ theta(b))
                                     for a in domain.basis for b in domain.basis), default=0.0)

    failed = [k for k, v in res.items() if v > tol.small(1.0) * 10]
    if failed:
        message = f'Function-system map fails {failed}.'
        logger.error(message)
        raise VerificationFailedError(message, res)
    logger.info(f'Built ϑ between spaces of dimension {domain.dim}'
                f'{" (centres)" if centre_only else ""}.')
    return theta
#endregion


#region toeplitz and rigid systems
def toeplitz_system(n: int, tol: Tolerance = Tolerance()) -> OperatorSystem:
    """
    span{S^j : |j| < n} inside M_n, where S is the forward shift.

    Raises:
        InputError: If n < 1.

    Examples:
        >>> [toeplitz_system(n).dim for n in range(1, 5)]
        [1, 3, 5, 7]
    """
    if n < 1:
        message = f'Toeplitz system needs n >= 1, got {n}.'
        logger.error(message)
        raise InputError(message)
    return OperatorSystem.from_space(orthonormal_basis(
        [np.eye(n, k=-j) for j in range(-(n - 1), n)], tol, (n, n)))


def amplification_tro(d: int, k: int, tol: Tolerance = Tolerance()) -> TRO:
    """
    span{e_i ⊗ I_d : i < k} inside M_{kd, d}, implementing S ∼ M_k(S).

    Raises:
        InputError: If d or k is not positive.
    """
    if d < 1 or k < 1:
        message = f'Amplification needs positive sizes, got d={d}, k={k}.'
        logger.error(message)
        raise InputError(message)
    units = [np.kron(matrix_unit(i, 0, (k, 1)), np.eye(d)) for i in range(k)]
    return TRO.from_space(orthonormal_basis(units, tol, (k * d, d)))


@dataclass
class RigidStructure:
    """
    T ≅ M_k(S) through φ(t) = [m_i* t m_j] with m_i* m_j = δ_ij I.

    Attributes:
        k: number of the m_i
        family: the m_i
        blocks: Wedderburn blocks of A_T
        residual: worst of the relation, bijectivity and round-trip residuals
    """
    k: int
    family: list[CMatrix]
    blocks: list[tuple[int, int]]
    residual: float

    def phi(self, t: CMatrix) -> CMatrix:
        return np.block([[mi.conj().T @ t @ mj for mj in self.family] for mi in self.family])

    def phi_inverse(self, x: CMatrix) -> CMatrix:
        d = self.family[0].shape[1]
        return sum(mi @ x[i * d:(i + 1) * d, j * d:(j + 1) * d] @ mj.conj().T
                   for i, mi in enumerate(self.family) for j, mj in enumerate(self.family))

    def to_json(self) -> dict:
        return {'k': self.k, 'blocks': [list(b) for b in self.blocks],
                'residual': self.residual}


def rigid_stable_structure(s: OperatorSystem, t: OperatorSystem, m: MatSubspace) -> RigidStructure:
    """
    Realizes T ≅ M_k(S) for a rigid S and a TRO-equivalence (S, T, M).

    The family m_i is an orthonormal basis of M for the scalar pairing
    (x, y) ↦ x* y, which is scalar because [M*M] = C for rigid S.

    Raises:
        NotRigidError: If S is not rigid.
        PreconditionError: If (S, T, M) is not a TRO-equivalence or the
            relations cannot be met, or if A_T is not a single full
            matrix block of size k.
    """
    if not is_rigid(s):
        message = f'System is not rigid (multiplier dimension {multiplier_algebra(s).dim}).'
        logger.error(message)
        raise NotRigidError(message, 'rigid')
    report = verify_tro_equivalence(s, t, m)
    if not report.passed:
        message = f'Not a TRO-equivalence: {report.failures()}.'
        logger.error(message)
        raise PreconditionError(message, report.failures()[0], report.worst_residual)
    tol = s.tol
    d = s.d

    pairing = np.array([[np.trace(x.conj().T @ y) / d for y in m.basis] for x in m.basis])
    scalar_residual = max(hs_norm(x.conj().T @ y - pairing[a, b] * np.eye(d))
                          for a, x in enumerate(m.basis) for b, y in enumerate(m.basis))
    try:
        root = psd_power(pairing, -0.5, tol)
    except PreconditionError as e:
        message = f'Pairing on the carrier is degenerate: {e}'
        logger.error(message)
        raise PreconditionError(message, 'pairing', e.residual)
    family = [np.tensordot(root[:, i], m.basis, axes=1) for i in range(m.dim)]
    k = len(family)

    relations = max(hs_norm(mi.conj().T @ mj - (i == j) * np.eye(d))
                    for i, mi in enumerate(family) for j, mj in enumerate(family))
    completeness = hs_norm(sum(mi @ mi.conj().T for mi in family) - np.eye(t.d))

    multipliers = multiplier_algebra(t)
    blocks = block_decompose(multipliers).blocks
    structure = RigidStructure(k, family, blocks, 0.0)
    images = orthonormal_basis([structure.phi(b) for b in t.basis], tol, (k * d, k * d))
    onto = span_equal(images, amplify(s, k))[1]
    roundtrip = max(hs_norm(structure.phi_inverse(structure.phi(b)) - b) for b in t.basis)
    structure.residual = max(scalar_residual, relations, completeness, onto, roundtrip)

    if structure.residual > tol.small(1.0) * 10:
        message = f'Relations m_i* m_j = δ_ij I not met (residual {structure.residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'relations', structure.residual)
    # A_T ≅ M_k as an algebra; the multiplicity is that of S in its ambient
    if [dj for dj, _ in blocks] != [k]:
        message = f'Multiplier algebra of T has blocks {blocks}, expected one block of size {k}.'
        logger.error(message)
        raise PreconditionError(message, 'blocks', float(abs(multipliers.dim - k * k)))
    return structure
#endregion
