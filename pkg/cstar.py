"""
Generated C*-algebras, Wedderburn block structure, centres, multiplier
algebras, rigidity and the irreducible-action probe.
"""

import logging_config
import config
from matcore import (OperatorSystem, MatSubspace, Tolerance, CMatrix,
                     orthonormal_basis, product_span, adjoint_space, sum_space,
                     contains, is_subspace, null_space, herm_eig, hermitian_basis,
                     random_hermitian, amplify, min_eigenvalue, cmatrix_to_json)
from utils import PreconditionError

from dataclasses import dataclass, field
from typing import Literal
import math
import numpy as np

__all__ = ['OperatorSystem', 'StarAlgebra', 'BlockDecomposition', 'ProbeVerdict',
           'generated_algebra', 'generated_star_algebra', 'center', 'commutant',
           'block_decompose', 'multiplier_algebra', 'is_rigid', 'is_star_algebra',
           'is_commutative', 'irreducibility_probe']

logger = logging_config.get_local_logger(__name__)


@dataclass(frozen=True, eq=False)
class StarAlgebra(MatSubspace):
    """
    A *-subalgebra of M_d.

    Attributes:
        unital: whether I_d belongs to the algebra
        generators: a generating set, used to shorten commutation tests
    """
    unital: bool = True
    generators: MatSubspace | None = None

    @property
    def d(self) -> int:
        return self.ambient[0]


@dataclass
class BlockDecomposition:
    """
    Unitary u and (block size, multiplicity) pairs such that u* a u is
    ⊕_j M_{d_j} ⊗ I_{m_j}.
    """
    u: CMatrix
    blocks: list[tuple[int, int]]
    residual: float = 0.0

    @property
    def offsets(self) -> list[int]:
        out, o = [], 0
        for d, m in self.blocks:
            out.append(o)
            o += d * m
        return out

    def to_json(self) -> dict:
        return {'blocks': [list(b) for b in self.blocks], 'unitary': cmatrix_to_json(self.u)}


#region algebras
def generated_star_algebra(gens: MatSubspace, unital: bool = True) -> StarAlgebra:
    """
    The *-algebra generated by a space of square matrices.

    Words are built by repeated right multiplication with the self-adjoint
    generating set until the dimension is stable.

    Args:
        gens: generating space
        unital: whether to adjoin the identity

    Returns:
        Generated *-algebra.
    """
    d = gens.rows
    mats = list(gens.basis) + [b.conj().T for b in gens.basis]
    if unital:
        mats.append(np.eye(d))
    g = orthonormal_basis(mats, gens.tol, gens.ambient)
    a = g
    for step in range(d * d + 1):
        grown = sum_space(a, product_span(a, g))
        if grown.dim == a.dim:
            break
        a = grown
    logger.debug(f'Generated algebra of dimension {a.dim} inside M_{d}.')
    return StarAlgebra(a.ambient, a.basis, a.tol, unital=unital, generators=g)


def generated_algebra(s: OperatorSystem) -> StarAlgebra:
    """
    C*(S), the unital *-algebra generated by an operator system.

    Examples:
        >>> from matcore import diagonal_matrices
        >>> generated_algebra(diagonal_matrices(3)).dim
        3
    """
    return generated_star_algebra(s, unital=True)


def _commutation_constraints(xs: np.ndarray, d: int) -> np.ndarray:
    # rows of (x ⊗ I - I ⊗ x^T) act on row-major vec(y)
    eye = np.eye(d)
    return np.vstack([np.kron(x, eye) - np.kron(eye, x.T) for x in xs]) \
        if len(xs) else np.zeros((0, d * d))


def commutant(x: MatSubspace) -> StarAlgebra:
    """{y in M_d : xy = yx for all x in X}."""
    d = x.rows
    kernel = null_space(_commutation_constraints(x.basis, d), x.tol)
    space = orthonormal_basis(kernel.T.reshape(-1, d, d), x.tol, x.ambient)
    return StarAlgebra(space.ambient, space.basis, space.tol, unital=True)


def center(a: StarAlgebra) -> StarAlgebra:
    """
    Z(A), the elements of `a` commuting with all of `a`.

    Commutation is tested against the generators when they are known.
    """
    tests = a.generators.basis if a.generators is not None else a.basis
    if a.dim == 0:
        return a
    # column k: [a_k, t] for every test element t
    columns = [np.concatenate([(ak @ t - t @ ak).reshape(-1) for t in tests])
               for ak in a.basis]
    kernel = null_space(np.array(columns).T, a.tol)
    elements = np.tensordot(kernel.T, a.basis, axes=1)
    space = orthonormal_basis(elements, a.tol, a.ambient)
    return StarAlgebra(space.ambient, space.basis, space.tol, unital=a.unital)


def is_star_algebra(x: MatSubspace, unital: bool = True) -> tuple[bool, float]:
    """Checks product closure, adjoint closure and (optionally) the unit."""
    ok_p, r_p = is_subspace(product_span(x, x), x)
    ok_a, r_a = is_subspace(adjoint_space(x), x)
    ok_u, r_u = contains(x, np.eye(x.rows)) if unital else (True, 0.0)
    return ok_p and ok_a and ok_u, max(r_p, r_a, r_u)


def is_commutative(a: MatSubspace) -> tuple[bool, float]:
    """Whether all basis elements commute; returns the worst commutator norm."""
    worst = 0.0
    for i, x in enumerate(a.basis):
        for y in a.basis[i + 1:]:
            worst = max(worst, float(np.linalg.norm(x @ y - y @ x)))
    return worst <= a.tol.small(1.0), worst
#endregion


#region wedderburn decomposition
def _clusters(w: np.ndarray, gap: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > gap:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


def _central_supports(z: StarAlgebra, tol: Tolerance) -> list[np.ndarray]:
    """Isometries onto the ranges of the minimal central projections."""
    for attempt in range(5):
        h = random_hermitian(z, tol.rng(17, attempt))
        w, v = herm_eig(h, tol)
        scale = max(abs(w[0]), abs(w[-1]), 1.0)
        groups = _clusters(w, 1e-6 * scale)
        if len(groups) == z.dim:
            return [v[:, g] for g in groups]
        logger.debug(f'Central element with {len(groups)} eigenvalue clusters '
                     f'for a centre of dimension {z.dim}; retrying.')
    message = 'Could not separate the central projections of the algebra.'
    logger.error(message)
    raise PreconditionError(message, 'central_projections')


def _factor_unitary(block: MatSubspace, tol: Tolerance, salt: int) -> tuple[np.ndarray, int, int]:
    """
    Matrix units of a factor M_dj ⊗ I_mj given as a compressed algebra.

    Returns:
        A tuple containing the unitary (columns ordered k*m + r), d_j and m_j.
    """
    n = block.rows
    dj = int(round(math.sqrt(block.dim)))
    if dj * dj != block.dim or n % dj:
        message = (f'Block of size {n} carries an algebra of dimension {block.dim}, '
                   f'which is not a full matrix factor.')
        logger.error(message)
        raise PreconditionError(message, 'factor')
    mj = n // dj
    if dj == 1:
        return np.eye(n, dtype=np.complex128), 1, mj

    for attempt in range(5):
        h = random_hermitian(block, tol.rng(29, salt, attempt))
        w, v = herm_eig(h, tol)
        scale = max(abs(w[0]), abs(w[-1]), 1.0)
        groups = _clusters(w, 1e-6 * scale)
        if len(groups) == dj and all(len(g) == mj for g in groups):
            break
    else:
        message = 'Could not find minimal projections inside a matrix factor.'
        logger.error(message)
        raise PreconditionError(message, 'minimal_projection')

    f = [v[:, g] for g in groups]
    projections = [fk @ fk.conj().T for fk in f]
    u = np.zeros((n, n), dtype=np.complex128)
    for k, pk in enumerate(projections):
        if k == 0:
            vk = projections[0]
        else:
            # P_k B P_1 is one-dimensional
            candidates = [pk @ b @ projections[0] for b in block.basis]
            x = max(candidates, key=lambda c: np.linalg.norm(c))
            c = np.linalg.norm(x) ** 2 / mj
            vk = x / math.sqrt(c)
        u[:, k * mj:(k + 1) * mj] = vk @ f[0]
    return u, dj, mj


def _block_residual(a: MatSubspace, bd: BlockDecomposition) -> float:
    worst = 0.0
    for b in a.basis:
        c = bd.u.conj().T @ b @ bd.u
        expected = np.zeros_like(c)
        for (dj, mj), o in zip(bd.blocks, bd.offsets):
            sub = c[o:o + dj * mj, o:o + dj * mj]
            # average over the multiplicity copies
            factor = np.einsum('krlr->kl', sub.reshape(dj, mj, dj, mj)) / mj
            expected[o:o + dj * mj, o:o + dj * mj] = np.kron(factor, np.eye(mj))
        worst = max(worst, float(np.linalg.norm(c - expected)))
    return worst


def block_decompose(a: StarAlgebra) -> BlockDecomposition:
    """
    Wedderburn decomposition of a unital *-subalgebra of M_d.

    Minimal central projections come from a seeded random central element;
    inside each factor a minimal projection of rank m_j is split off a
    random Hermitian element and the remaining matrix units are normalized
    elements of P_k B P_1. Blocks are ordered by the first standard basis
    vector they support.

    Args:
        a: unital *-algebra

    Returns:
        Block decomposition with its reconstruction residual.

    Raises:
        PreconditionError: If `a` is not a unital *-algebra.

    Examples:
        >>> from matcore import scalars
        >>> block_decompose(StarAlgebra((2, 2), scalars(2).basis)).blocks
        [(1, 2)]
    """
    tol = a.tol
    ok, residual = is_star_algebra(a, unital=True)
    if not ok:
        message = f'Input is not a unital *-algebra (residual {residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'star_algebra', residual)

    z = center(a)
    supports = _central_supports(z, tol)
    # order blocks by their first supported standard basis vector
    supports.sort(key=lambda s: int(np.argmax(np.linalg.norm(s, axis=1) > 1e-6)))

    columns, blocks = [], []
    for j, sup in enumerate(supports):
        compressed = orthonormal_basis([sup.conj().T @ b @ sup for b in a.basis], tol)
        uj, dj, mj = _factor_unitary(compressed, tol, j)
        columns.append(sup @ uj)
        blocks.append((dj, mj))

    bd = BlockDecomposition(np.hstack(columns), blocks)
    bd.residual = _block_residual(a, bd)
    if sum(dj * dj for dj, _ in blocks) != a.dim or bd.residual > tol.small(1.0) * 10:
        message = (f'Block decomposition failed to reconstruct the algebra '
                   f'(residual {bd.residual:.3g}).')
        logger.error(message)
        raise PreconditionError(message, 'reconstruction', bd.residual)

    logger.info(f'Block decomposition {blocks} of an algebra of dimension {a.dim}.')
    return bd
#endregion


#region multipliers
def multiplier_algebra(s: OperatorSystem) -> StarAlgebra:
    """
    A_S = {a in C*(S) : aS ⊆ S and a*S ⊆ S}.

    Since S is self-adjoint, a*S ⊆ S is the same as Sa ⊆ S, so both
    conditions are linear in the coefficients of a over a basis of C*(S).

    Examples:
        >>> from matcore import full_matrices
        >>> multiplier_algebra(full_matrices(2)).dim
        4
    """
    c = generated_algebra(s)
    q = s.vectors
    proj = q.conj().T @ q

    def outside(m: np.ndarray) -> np.ndarray:
        v = m.reshape(-1)
        return v - proj @ v

    columns = []
    for x in c.basis:
        parts = [outside(x @ sj) for sj in s.basis] + [outside(sj @ x) for sj in s.basis]
        columns.append(np.concatenate(parts))
    kernel = null_space(np.array(columns).T, s.tol)
    elements = np.tensordot(kernel.T, c.basis, axes=1)
    space = orthonormal_basis(elements, s.tol, s.ambient)
    logger.debug(f'Multiplier algebra of dimension {space.dim} '
                 f'inside C*(S) of dimension {c.dim}.')
    return StarAlgebra(space.ambient, space.basis, space.tol, unital=True)


def is_rigid(s: OperatorSystem) -> bool:
    """True iff the multiplier algebra is C * I."""
    return multiplier_algebra(s).dim == 1
#endregion


#region irreducibility probe
@dataclass
class ProbeVerdict:
    """
    Outcome of the irreducible-action probe.

    Attributes:
        kind: 'Irreducible', 'Reducible' or 'Unknown'
        level: matrix level of the separating witnesses (Irreducible)
        blocks: Wedderburn blocks of C*(S) as (size, multiplicity)
        kept: (block, copy) pairs of the compression L (Reducible)
        witnesses: per dropped block, the level and the positivity gap found
        certificate: extra data backing the verdict
    """
    kind: Literal['Irreducible', 'Reducible', 'Unknown']
    level: int = 0
    blocks: list[tuple[int, int]] = field(default_factory=list)
    kept: list[tuple[int, int]] = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    certificate: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {'verdict': self.kind, 'level': self.level,
                'blocks': [list(b) for b in self.blocks],
                'kept': [list(k) for k in self.kept],
                'witnesses': self.witnesses, 'certificate': self.certificate}


def _copy_columns(bd: BlockDecomposition, kept: list[tuple[int, int]]) -> np.ndarray:
    """Columns of u spanning the chosen (block, copy) pairs."""
    cols = []
    for j, c in kept:
        dj, mj = bd.blocks[j]
        o = bd.offsets[j]
        cols.extend(o + k * mj + c for k in range(dj))
    return bd.u[:, sorted(cols)]


def _separation_search(s: OperatorSystem, iso: np.ndarray, level: int, tol: Tolerance,
                       salt: int) -> tuple[float, np.ndarray | None]:
    """
    Searches a Hermitian X in M_n(S) with λ_min(X_L) > λ_min(X).

    Gradient ascent on the gap over a real Hermitian basis of M_n(S).

    Returns:
        The best gap and the shifted witness X - λ_min(X_L) I (or None).
    """
    herm = np.array(hermitian_basis(amplify(s, level)))
    big = np.kron(np.eye(level), iso)
    compressed = np.einsum('ia,kij,jb->kab', big.conj(), herm, big)
    best_gap, best = -np.inf, None

    for restart in range(config.PROBE_RESTARTS):
        rng = tol.rng(41, salt, level, restart)
        c = rng.normal(size=len(herm))
        c /= np.linalg.norm(c)
        step = 0.5
        for _ in range(config.PROBE_STEPS):
            y = np.tensordot(c, herm, axes=1)
            yl = np.tensordot(c, compressed, axes=1)
            w, v = np.linalg.eigh((y + y.conj().T) / 2)
            wl, vl = np.linalg.eigh((yl + yl.conj().T) / 2)
            gap = wl[0] - w[0]
            if gap > best_gap:
                best_gap, best = gap, y - wl[0] * np.eye(y.shape[0])
            grad = (np.einsum('a,kab,b->k', vl[:, 0].conj(), compressed, vl[:, 0])
                    - np.einsum('a,kab,b->k', v[:, 0].conj(), herm, v[:, 0])).real
            c = c + step * grad
            c /= np.linalg.norm(c)
            step *= 0.95

    return best_gap, best


def irreducibility_probe(s: OperatorSystem, level_cap: int = config.DEFAULT_LEVEL_CAP) -> ProbeVerdict:
    """
    Decides, where possible, whether S acts irreducibly.

    Proper unions L of Wedderburn blocks of C*(S) are tested. When a block
    repeats, one copy of every block gives a compression that is injective
    on C*(S), hence completely isometric: Reducible. Otherwise it suffices to
    exclude every union that drops exactly one block, by finding a Hermitian
    X in M_n(S), n <= level_cap, whose compression to L is positive while X
    is not.

    Args:
        s: operator system
        level_cap: highest matrix level searched

    Returns:
        Probe verdict; Unknown when some union could not be excluded.
    """
    tol = s.tol
    a = generated_algebra(s)
    bd = block_decompose(a)
    blocks = bd.blocks

    if any(mj > 1 for _, mj in blocks):
        kept = [(j, 0) for j in range(len(blocks))]
        iso = _copy_columns(bd, kept)
        restricted = orthonormal_basis([iso.conj().T @ b @ iso for b in a.basis], tol)
        # sampled norm comparison at every level up to the cap
        worst = 0.0
        for level in range(1, level_cap + 1):
            rng = tol.rng(43, level)
            x = amplify(s, level).random_element(rng)
            xl = np.kron(np.eye(level), iso).conj().T @ x @ np.kron(np.eye(level), iso)
            worst = max(worst, abs(np.linalg.norm(x, 2) - np.linalg.norm(xl, 2)))
        certificate = {'dim_algebra': a.dim, 'dim_restricted_algebra': restricted.dim,
                       'norm_residual': worst}
        if restricted.dim == a.dim and worst <= tol.small(1.0) * 100:
            logger.info(f'Compression to one copy of each block {kept} is completely isometric.')
            return ProbeVerdict('Reducible', 0, blocks, kept, {}, certificate)
        return ProbeVerdict('Unknown', level_cap, blocks, [], {}, certificate)

    if len(blocks) == 1:
        return ProbeVerdict('Irreducible', 1, blocks)

    witnesses, found_level = {}, 1
    for dropped in range(len(blocks)):
        kept = [(j, 0) for j in range(len(blocks)) if j != dropped]
        iso = _copy_columns(bd, kept)
        for level in range(1, level_cap + 1):
            gap, x = _separation_search(s, iso, level, tol, dropped)
            if gap > 1e-6:
                witnesses[str(dropped)] = {'level': level, 'gap': float(gap),
                                           'min_eigenvalue': min_eigenvalue(x)}
                found_level = max(found_level, level)
                break
        else:
            logger.info(f'No separating witness for the union without block {dropped} '
                        f'up to level {level_cap}.')
            return ProbeVerdict('Unknown', level_cap, blocks, [], witnesses)

    return ProbeVerdict('Irreducible', found_level, blocks, [], witnesses)
#endregion
