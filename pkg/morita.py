"""
Induced representations through a TRO, the round-trip unitary of double
induction, and transport of intertwiners and multiplier bimodules.

A representation of S is stored as the images of the orthonormal basis of
S; it is extended linearly. The induced space of M ⊗ H is the quotient of
the span of generators m_a ⊗ ξ_j by the kernel of their Gram matrix.
"""

import logging_config
import config
from matcore import (MatSubspace, OperatorSystem, Tolerance, CMatrix, as_cmatrix,
                     product_span, adjoint_space, contains, is_subspace, coefficients,
                     herm_eig, hermitian_basis, amplify, min_eigenvalue,
                     hs_norm, op_norm, subspace_to_json, system_from_json,
                     cmatrix_to_json, cmatrix_from_json)
from cstar import multiplier_algebra
from tro import VerificationReport
from utils import (InputError, DimensionMismatchError, PreconditionError,
                   VerificationFailedError)

from dataclasses import dataclass
from typing import Callable
import numpy as np

logger = logging_config.get_local_logger(__name__)


#region types
@dataclass
class GramSpace:
    """
    Hausdorff quotient of a finite generator set.

    Attributes:
        labels: (carrier basis index, Hilbert space basis index) per generator
        gram: PSD matrix with gram[p, q] = <u_q, u_p>
        rank: dimension of the quotient
        coords: (rank, n) matrix sending generator q to its quotient coordinates
        lift: (n, rank) matrix with coords @ lift = I
        descent_residual: worst failure of a sesquilinear form to vanish on
            the Gram kernel
    """
    labels: list[tuple[int, int]]
    gram: CMatrix
    rank: int
    coords: CMatrix
    lift: CMatrix
    descent_residual: float = 0.0

    def compress(self, form: CMatrix) -> CMatrix:
        """The operator on the quotient whose matrix elements are `form`."""
        return self.lift.conj().T @ form @ self.lift

    def to_json(self) -> dict:
        return {'generators': len(self.labels), 'rank': self.rank,
                'descent_residual': self.descent_residual}


def gram_space(gram: CMatrix, labels: list[tuple[int, int]], tol: Tolerance) -> GramSpace:
    """
    Quotients a Gram matrix by its kernel; eigenvalues above
    eps * (1 + trace) are kept.

    Raises:
        PreconditionError: If the Gram matrix has a negative eigenvalue.
    """
    gram = (gram + gram.conj().T) / 2
    w, v = herm_eig(gram, tol)
    scale = float(np.trace(gram).real)
    if w.size and w[0] < -tol.small(scale):
        message = f'Gram matrix is not positive semidefinite (eigenvalue {w[0]:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'psd_gram', float(-w[0]))
    keep = w > tol.small(scale)
    lam, vk = w[keep], v[:, keep]
    coords = np.sqrt(lam)[:, None] * vk.conj().T
    lift = vk / np.sqrt(lam)[None, :]
    logger.debug(f'Gram quotient of rank {int(keep.sum())} from {len(labels)} generators.')
    return GramSpace(labels, gram, int(keep.sum()), coords, lift)


@dataclass
class Representation:
    """
    A unital completely positive map on S whose restriction to A_S is a
    *-homomorphism.

    Attributes:
        system: the operator system S
        images: (dim S, h, h) images of the basis of S
        multipliers: the multiplier algebra A_S
        multiplier_images: images of the basis of A_S
        gram: the quotient it was induced on, if any
    """
    system: OperatorSystem
    images: np.ndarray
    multipliers: MatSubspace
    multiplier_images: np.ndarray
    gram: GramSpace | None = None

    @classmethod
    def from_map(cls, system: OperatorSystem, f: Callable[[CMatrix], CMatrix],
                 gram: GramSpace | None = None) -> 'Representation':
        return cls.from_images(system, np.array([as_cmatrix(f(b)) for b in system.basis]), gram)

    @classmethod
    def from_images(cls, system: OperatorSystem, images: np.ndarray,
                    gram: GramSpace | None = None) -> 'Representation':
        multipliers = multiplier_algebra(system)
        rep = cls(system, images, multipliers, np.zeros((0, *images.shape[1:])), gram)
        rep.multiplier_images = np.array([rep.apply(a) for a in multipliers.basis])
        return rep

    @property
    def hilbert_dim(self) -> int:
        return self.images.shape[1]

    def apply(self, x: CMatrix, strict: bool = False) -> CMatrix:
        """
        φ(x) by linear extension.

        Raises:
            PreconditionError: If `strict` and x is not in S.
        """
        if strict:
            ok, residual = contains(self.system, x)
            if not ok:
                message = f'Element outside the represented system (residual {residual:.3g}).'
                logger.error(message)
                raise PreconditionError(message, 'in_system', residual)
        return np.tensordot(coefficients(self.system, x), self.images, axes=1)

    def validate(self) -> VerificationReport:
        """Checks unitality, hermiticity, multiplicativity on A_S and A_S-modularity."""
        report = VerificationReport()
        tol = self.system.tol
        s = self.system
        residual = hs_norm(self.apply(np.eye(s.d)) - np.eye(self.hilbert_dim))
        report.add('unital', residual <= tol.small(1.0), residual)

        residual = max((hs_norm(self.apply(b.conj().T) - img.conj().T)
                        for b, img in zip(s.basis, self.images)), default=0.0)
        report.add('hermitian', residual <= tol.small(1.0), residual)

        a, pa = self.multipliers.basis, self.multiplier_images
        residual = max((hs_norm(self.apply(a[i] @ a[j]) - pa[i] @ pa[j])
                        for i in range(len(a)) for j in range(len(a))), default=0.0)
        report.add('multiplicative', residual <= tol.small(1.0), residual)

        residual = 0.0
        for ai, pi in zip(a, pa):
            for b, img in zip(s.basis, self.images):
                residual = max(residual, hs_norm(self.apply(ai @ b) - pi @ img),
                               hs_norm(self.apply(b @ ai) - img @ pi))
        report.add('bimodule', residual <= tol.small(1.0), residual)
        return report

    def to_json(self) -> dict:
        return {'system': subspace_to_json(self.system), 'dim': self.hilbert_dim,
                'images': [cmatrix_to_json(m) for m in self.images]}

    @classmethod
    def from_json(cls, data: dict, tol: Tolerance = Tolerance()) -> 'Representation':
        """
        Reads {"system", "dim", "images"}; images belong to the basis as
        given, which is re-orthonormalized here.

        Raises:
            InputError: If the JSON is malformed or counts disagree.
        """
        try:
            raw = [cmatrix_from_json(b) for b in data['system']['basis']]
            images = [cmatrix_from_json(m) for m in data['images']]
            h = int(data['dim'])
            system = system_from_json(data['system'], tol)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InputError):
                raise
            message = f'Malformed representation JSON: {e}.'
            logger.error(message)
            raise InputError(message)
        if len(images) != len(raw) or any(m.shape != (h, h) for m in images):
            message = f'Representation needs {len(raw)} images of size {h}.'
            logger.error(message)
            raise InputError(message)
        # rewrite the orthonormal basis in terms of the given one
        given = np.array([r.reshape(-1) for r in raw]).T
        c, *_ = np.linalg.lstsq(given, system.vectors.T, rcond=None)
        return cls.from_images(system, np.tensordot(c.T, np.array(images), axes=1))
#endregion


#region constructors
def identity_representation(s: OperatorSystem) -> Representation:
    """The inclusion S ⊆ M_d."""
    return Representation.from_map(s, lambda x: x)


def random_representation(s: OperatorSystem, seed: int = config.DEFAULT_SEED,
                          copies: int = 2) -> Representation:
    """
    x ↦ W (x ⊗ I_copies) W* for a seeded random unitary W.

    Raises:
        InputError: If `copies` < 1.
    """
    if copies < 1:
        message = f'Number of copies must be positive, got {copies}.'
        logger.error(message)
        raise InputError(message)
    n = s.d * copies
    rng = np.random.default_rng([seed, 97])
    w, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return Representation.from_map(s, lambda x: w @ np.kron(x, np.eye(copies)) @ w.conj().T)
#endregion


#region induction
def _form(rep: Representation, basis: np.ndarray, x: CMatrix | None) -> CMatrix:
    """form[(b, l), (a, j)] = φ(m_b* x m_a)[l, j]; x = None means the identity."""
    n, h = len(basis), rep.hilbert_dim
    mid = np.eye(basis.shape[1]) if x is None else x
    blocks = np.array([[rep.apply(mb.conj().T @ mid @ ma, strict=True) for ma in basis]
                       for mb in basis])
    return blocks.transpose(0, 2, 1, 3).reshape(n * h, n * h)


def induce_rep(m: MatSubspace, rep: Representation,
               t: OperatorSystem | None = None) -> Representation:
    """
    The representation ψ of T = [M S M*] on the Gram quotient of M ⊗ H.

    Matrix elements: <ψ(t)(m_a ⊗ ξ_j), m_b ⊗ ξ_l> = <φ(m_b* t m_a) ξ_j, ξ_l>.

    Args:
        m: TRO inside M_{d_T, d_S}
        rep: representation of S
        t: the system T, computed from M and S when omitted

    Returns:
        Induced representation, carrying its Gram quotient.

    Raises:
        DimensionMismatchError: If M does not start at the ambient of S.
        PreconditionError: If some m_b* t m_a leaves S.
        VerificationFailedError: If the form does not descend to the
            quotient or ψ is not positive on samples.
    """
    s = rep.system
    tol = s.tol
    if m.cols != s.d:
        message = f'Carrier of shape {m.ambient} does not act on C^{s.d}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    if t is None:
        t = OperatorSystem.from_space(product_span(m, product_span(s, adjoint_space(m))))

    h = rep.hilbert_dim
    labels = [(a, j) for a in range(m.dim) for j in range(h)]
    space = gram_space(_form(rep, m.basis, None), labels, tol)

    # ψ(x) must vanish on the Gram kernel and satisfy |<u, x u>| <= |x| <u, u>
    kernel = np.eye(space.gram.shape[0]) - space.lift @ space.coords
    worst = 0.0
    for x in hermitian_basis(t):
        f = _form(rep, m.basis, x)
        worst = max(worst, hs_norm(f @ kernel), hs_norm(kernel.conj().T @ f))
        bound = op_norm(x) * space.gram
        worst = max(worst, -min_eigenvalue(bound - f), -min_eigenvalue(bound + f))
    space.descent_residual = max(worst, 0.0)
    if space.descent_residual > tol.small(op_norm(space.gram)) * 10:
        message = f'Induced form does not descend to the quotient ({worst:.3g}).'
        logger.error(message)
        raise VerificationFailedError(message)

    induced = Representation.from_map(t, lambda x: space.compress(_form(rep, m.basis, x)), space)
    report = induced.validate()
    if not report.passed:
        message = f'Induced representation fails {report.failures()}.'
        logger.error(message)
        raise VerificationFailedError(message, report)
    _check_positive(induced, levels=2)
    logger.info(f'Induced a representation of dimension {space.rank} from dimension {h}.')
    return induced


def _check_positive(rep: Representation, levels: int) -> None:
    """Samples PSD elements of M_k(T), k <= levels, and checks their images."""
    t, tol = rep.system, rep.system.tol
    for k in range(1, levels + 1):
        amp = amplify(t, k)
        herm = np.array(hermitian_basis(amp))
        for sample in range(config.AXIOM_SAMPLES):
            rng = tol.rng(89, k, sample)
            x = np.tensordot(rng.normal(size=len(herm)), herm, axes=1)
            p = x - min_eigenvalue(x) * np.eye(x.shape[0])
            d = t.d
            out = np.block([[rep.apply(p[i * d:(i + 1) * d, j * d:(j + 1) * d])
                             for j in range(k)] for i in range(k)])
            if min_eigenvalue(out) < -tol.small(op_norm(out)) * 10:
                message = f'Induced map is not positive at level {k} (sample {sample}).'
                logger.error(message)
                raise VerificationFailedError(message)


def roundtrip_unitary(m: MatSubspace, rep: Representation) -> tuple[CMatrix, float]:
    """
    Induces through M and then M*, and builds U(x ⊗ (y ⊗ ξ)) = φ(x y) ξ.

    Returns:
        A tuple containing:
            1. U from the double-induced space onto H
            2. worst of the isometry, unitarity and intertwining residuals
    """
    first = induce_rep(m, rep)
    back = adjoint_space(m)
    second = induce_rep(back, first, t=rep.system)

    g1, g2 = first.gram, second.gram
    h, r1 = rep.hilbert_dim, g1.rank
    # column block a: Σ_b φ(x_a m_b) R1_b with x_a = m_a*
    columns = []
    for xa in back.basis:
        block = np.zeros((h, r1), dtype=np.complex128)
        for b, mb in enumerate(m.basis):
            block += rep.apply(xa @ mb, strict=True) @ g1.lift[b * h:(b + 1) * h, :]
        columns.append(block)
    l_map = np.hstack(columns)
    u = l_map @ g2.lift

    residual = hs_norm(l_map.conj().T @ l_map - g2.gram)
    if u.shape[0] != u.shape[1]:
        logger.info(f'Round-trip map has shape {u.shape}; not unitary.')
        return u, float('inf')
    residual = max(residual, hs_norm(u.conj().T @ u - np.eye(h)),
                   hs_norm(u @ u.conj().T - np.eye(h)))
    for b, img in zip(rep.system.basis, rep.images):
        residual = max(residual, hs_norm(u @ second.apply(b) @ u.conj().T - img))
    logger.info(f'Round-trip unitary residual {residual:.3g}.')
    return u, residual


def identity_collapse(m: MatSubspace, induced: Representation) -> tuple[CMatrix, float]:
    """
    W(x ⊗ ξ) = x ξ for a representation induced from the identity of S.

    Returns:
        A tuple containing W and the worst unitarity and intertwining residual.

    Raises:
        PreconditionError: If `induced` was not induced from a representation
            on C^{d_S}.
    """
    g = induced.gram
    if g is None or g.gram.shape[0] != m.dim * m.cols:
        message = 'Representation was not induced from the identity through this carrier.'
        logger.error(message)
        raise PreconditionError(message, 'induced_from_identity')
    h = m.cols
    l_map = np.hstack([mb[:, [l]] for mb in m.basis for l in range(h)])
    w = l_map @ g.lift
    residual = hs_norm(l_map.conj().T @ l_map - g.gram)
    if w.shape[0] == w.shape[1]:
        residual = max(residual, hs_norm(w.conj().T @ w - np.eye(w.shape[1])))
    else:
        residual = float('inf')
    for b, img in zip(induced.system.basis, induced.images):
        residual = max(residual, hs_norm(w @ img @ w.conj().T - b))
    return w, residual
#endregion


#region transport
def transport_intertwiner(m: MatSubspace, op: CMatrix, rep1: Representation,
                          rep2: Representation) -> CMatrix:
    """
    T̃(m ⊗ ξ) = m ⊗ T ξ between the induced spaces.

    Raises:
        PreconditionError: If T does not intertwine the representations.
        VerificationFailedError: If T̃ is not well defined, does not
            intertwine the induced representations or exceeds |T| in norm.
    """
    op = as_cmatrix(op)
    tol = rep1.system.tol
    if op.shape != (rep2.hilbert_dim, rep1.hilbert_dim):
        message = f'Operator of shape {op.shape} does not map between the representations.'
        logger.error(message)
        raise DimensionMismatchError(message)
    residual = max((hs_norm(op @ a - b @ op) for a, b in zip(rep1.images, rep2.images)),
                   default=0.0)
    if residual > tol.small(op_norm(op)):
        message = f'Operator is not an intertwiner (residual {residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'intertwiner', residual)

    ind1 = induce_rep(m, rep1)
    ind2 = induce_rep(m, rep2, t=ind1.system)
    lifted = np.kron(np.eye(m.dim), op)
    moved = ind2.gram.coords @ lifted @ ind1.gram.lift

    worst = hs_norm(ind2.gram.coords @ lifted - moved @ ind1.gram.coords)
    for a, b in zip(ind1.images, ind2.images):
        worst = max(worst, hs_norm(moved @ a - b @ moved))
    excess = op_norm(moved) - op_norm(op)
    if worst > tol.small(op_norm(op)) * 10 or excess > tol.small(op_norm(op)) * 10:
        message = f'Transported operator fails verification (residual {worst:.3g}).'
        logger.error(message)
        raise VerificationFailedError(message)
    return moved


def check_bimodule(j: MatSubspace, s: OperatorSystem) -> tuple[bool, float]:
    """Whether J ⊆ S and A_S J A_S ⊆ J."""
    ok, residual = is_subspace(j, s)
    if not ok or j.dim == 0:
        return ok, residual
    a = multiplier_algebra(s)
    ok_l, r_l = is_subspace(product_span(a, j), j)
    ok_r, r_r = is_subspace(product_span(j, a), j)
    return ok_l and ok_r, max(residual, r_l, r_r)


def transport_bimodule(m: MatSubspace, j: MatSubspace, s: OperatorSystem) -> MatSubspace:
    """
    [M J M*] for an A_S-bimodule J inside S.

    Raises:
        PreconditionError: If J is not an A_S-bimodule inside S.

    Examples:
        >>> from matcore import scalars, full_matrices, orthonormal_basis
        >>> col = orthonormal_basis([[[1], [0]], [[0], [1]]])
        >>> transport_bimodule(col, scalars(1), scalars(1)).dim
        4
    """
    ok, residual = check_bimodule(j, s)
    if not ok:
        message = f'Subspace is not an A_S-bimodule inside S (residual {residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'bimodule', residual)
    return product_span(m, product_span(j, adjoint_space(m)))
#endregion
