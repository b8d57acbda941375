"""
Ternary rings of operators: TRO axioms, TRO-equivalence, promotion of
bihomomorphisms, quasi-units, cohomomorphism (Kraus) checks, and the
verification of Δ-contexts and bihomomorphism contexts.

A trilinear map is always called with carrier elements, never with their
adjoints: `bracket(x, t, y)` stands for [x*, t, y] and `paren(x, s, y)`
for (x, s, y*).
"""

import logging_config
import config
from matcore import (MatSubspace, OperatorSystem, Tolerance, CMatrix, as_cmatrix,
                     orthonormal_basis, product_span, adjoint_space, contains,
                     is_subspace, coefficients, psd_power, min_eigenvalue,
                     amplify, hermitian_basis, op_norm, hs_norm, matrix_unit,
                     subspace_to_json, subspace_from_json, system_from_json,
                     cmatrix_to_json, cmatrix_from_json)
from cstar import generated_star_algebra, multiplier_algebra
from utils import (InputError, PreconditionError, NonUnitalError, DimensionMismatchError,
                   VerificationFailedError,
                   to_pairs, from_pairs)

from dataclasses import dataclass, field, replace
from typing import Any, Literal
import numpy as np
import pandas as pd

logger = logging_config.get_local_logger(__name__)


#region types
@dataclass(frozen=True, eq=False)
class TRO(MatSubspace):
    """A matrix space M with MM*M ⊆ M."""

    def right_algebra(self) -> MatSubspace:
        """[M*M]."""
        return product_span(adjoint_space(self), self)

    def left_algebra(self) -> MatSubspace:
        """[MM*]."""
        return product_span(self, adjoint_space(self))

    def adjoint(self) -> 'TRO':
        a = adjoint_space(self)
        return TRO(a.ambient, a.basis, a.tol)

    @classmethod
    def from_space(cls, space: MatSubspace) -> 'TRO':
        return cls(space.ambient, space.basis, space.tol)


@dataclass
class KrausFamily:
    """Operators A_i of a common shape (d_T, d_S) defining Φ(t) = Σ A_i* t A_i."""
    ops: list[CMatrix]

    def __post_init__(self):
        self.ops = [as_cmatrix(a) for a in self.ops]
        if not self.ops or len({a.shape for a in self.ops}) != 1:
            message = 'A Kraus family needs at least one operator, all of one shape.'
            logger.error(message)
            raise DimensionMismatchError(message)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ops[0].shape

    def apply(self, t: CMatrix) -> CMatrix:
        return sum(a.conj().T @ t @ a for a in self.ops)

    def to_json(self) -> dict:
        return {'ops': [cmatrix_to_json(a) for a in self.ops]}

    @classmethod
    def from_json(cls, data: dict) -> 'KrausFamily':
        try:
            return cls([cmatrix_from_json(a) for a in data['ops']])
        except (KeyError, TypeError) as e:
            message = f'Malformed Kraus family JSON: {e}.'
            logger.error(message)
            raise InputError(message)


@dataclass
class ReportEntry:
    axiom: str
    passed: bool
    residual: float
    witness: Any = None

    def to_json(self) -> dict:
        return {'axiom': self.axiom, 'pass': bool(self.passed),
                'residual': float(self.residual), 'witness': self.witness}


@dataclass
class VerificationReport:
    """
    Per-axiom verdicts; the report passes iff every entry passes.

    Attributes:
        entries: verdicts in the order the checks ran
        artifacts: spaces computed along the way (not serialized)
    """
    entries: list[ReportEntry] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def add(self, axiom: str, passed: bool, residual: float, witness: Any = None) -> bool:
        self.entries.append(ReportEntry(axiom, bool(passed), float(residual), witness))
        if not passed:
            logger.info(f'Check {axiom} failed with residual {residual:.3g}.')
        return passed

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def worst_residual(self) -> float:
        return max((e.residual for e in self.entries), default=0.0)

    def failures(self) -> list[str]:
        return [e.axiom for e in self.entries if not e.passed]

    def __getitem__(self, axiom: str) -> ReportEntry:
        for e in self.entries:
            if e.axiom == axiom:
                return e
        raise KeyError(axiom)

    def to_json(self) -> dict:
        return {'pass': self.passed, 'entries': [e.to_json() for e in self.entries]}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{'axiom': e.axiom, 'pass': e.passed, 'residual': e.residual}
                             for e in self.entries])
#endregion


#region tro checks
def _worst_outside(x: MatSubspace, y: MatSubspace) -> tuple[bool, float, int]:
    """x ⊆ y with the index of the worst basis element of x."""
    if x.dim == 0:
        return True, 0.0, -1
    proj = (x.vectors @ y.vectors.conj().T) @ y.vectors
    res = np.linalg.norm(x.vectors - proj, axis=1)
    k = int(np.argmax(res))
    return bool(res[k] <= y.tol.small(1.0)), float(res[k]), k


def _check_tro(m: MatSubspace, report: VerificationReport, nondegenerate: bool = True) -> None:
    right = product_span(adjoint_space(m), m)
    left = product_span(m, adjoint_space(m))
    report.artifacts['right_algebra'] = right
    report.artifacts['left_algebra'] = left

    triple = product_span(m, right)
    ok, residual, k = _worst_outside(triple, m)
    report.add('tro_closure', ok, residual,
               None if ok else {'element': cmatrix_to_json(triple.basis[k])})
    if nondegenerate:
        ok_r, res_r = contains(right, np.eye(m.cols))
        report.add('nondegenerate_right', ok_r, res_r,
                   None if ok_r else 'identity not in [M*M]')
        ok_l, res_l = contains(left, np.eye(m.rows))
        report.add('nondegenerate_left', ok_l, res_l,
                   None if ok_l else 'identity not in [MM*]')


def verify_tro(m: MatSubspace, nondegenerate: bool = True) -> VerificationReport:
    """
    Checks MM*M ⊆ M and, optionally, I ∈ [M*M] and I ∈ [MM*].

    The algebras [M*M] and [MM*] are left in `report.artifacts`.

    Examples:
        >>> from matcore import diagonal_matrices
        >>> verify_tro(diagonal_matrices(2)).passed
        True
    """
    report = VerificationReport()
    _check_tro(m, report, nondegenerate)
    report.artifacts['dims'] = {'right': report.artifacts['right_algebra'].dim,
                                'left': report.artifacts['left_algebra'].dim}
    return report


def _shape_ok(s: MatSubspace, t: MatSubspace, m: MatSubspace, report: VerificationReport) -> bool:
    ok = tuple(m.ambient) == (t.rows, s.rows)
    return report.add('shapes', ok, 0.0 if ok else float('inf'),
                      None if ok else f'carrier {m.ambient}, expected ({t.rows}, {s.rows})')


def verify_tro_equivalence(s: OperatorSystem, t: OperatorSystem, m: MatSubspace) -> VerificationReport:
    """
    Checks that M is a non-degenerate TRO with [M*TM] = S and [MSM*] = T.

    Examples:
        >>> from matcore import scalars, full_matrices, orthonormal_basis
        >>> col = orthonormal_basis([[[1], [0]], [[0], [1]]])
        >>> verify_tro_equivalence(scalars(1), full_matrices(2), col).passed
        True
    """
    report = VerificationReport()
    if not _shape_ok(s, t, m, report):
        return report
    _check_tro(m, report)

    mstar = adjoint_space(m)
    pulled = product_span(mstar, product_span(t, m))
    pushed = product_span(m, product_span(s, mstar))
    report.artifacts['pulled'] = pulled
    report.artifacts['pushed'] = pushed

    for name, x, y in [('inclusion_S', pulled, s), ('inclusion_T', pushed, t),
                       ('equality_S', s, pulled), ('equality_T', t, pushed)]:
        ok, residual, k = _worst_outside(x, y)
        report.add(name, ok, residual,
                   None if ok else {'element': cmatrix_to_json(x.basis[k])})
    return report


def promote_bihom(x: MatSubspace, s: OperatorSystem, t: OperatorSystem) -> TRO:
    """
    M = [X A] with A = C*(X*X); the TRO generated by a bihomomorphism space.

    Raises:
        PreconditionError: If X is degenerate or X*TX ⊄ S or XSX* ⊄ T; the
            violated condition is named in the exception.
        VerificationFailedError: If the promoted space does not implement
            [M*TM] = S and [MSM*] = T.
    """
    if tuple(x.ambient) != (t.rows, s.rows):
        message = f'Space of shape {x.ambient} does not map C^{s.rows} to C^{t.rows}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    xstar = adjoint_space(x)
    checks = [
        ('nondegenerate_right', *contains(product_span(xstar, x), np.eye(x.cols))),
        ('nondegenerate_left', *contains(product_span(x, xstar), np.eye(x.rows))),
        ('inclusion_S', *is_subspace(product_span(xstar, product_span(t, x)), s)),
        ('inclusion_T', *is_subspace(product_span(x, product_span(s, xstar)), t)),
    ]
    for name, ok, residual in checks:
        if not ok:
            message = f'Cannot promote: {name} fails (residual {residual:.3g}).'
            logger.error(message)
            raise PreconditionError(message, name, residual)

    a = generated_star_algebra(product_span(xstar, x), unital=False)
    m = TRO.from_space(product_span(x, a))
    report = verify_tro_equivalence(s, t, m)
    if not report.passed:
        message = f'Promoted space fails verification: {report.failures()}.'
        logger.error(message)
        raise VerificationFailedError(message, report)
    logger.info(f'Promoted a space of dimension {x.dim} to a TRO of dimension {m.dim}.')
    return m


def quasi_unit(m: MatSubspace, side: Literal['left', 'right'] = 'left') -> list[CMatrix]:
    """
    Finitely many m_i in M with Σ m_i m_i* = I (left) or Σ m_i* m_i = I (right).

    Built from the basis u_i as G^{-1/2} u_i (left) or u_i G^{-1/2} (right),
    where G = Σ u_i u_i* (resp. Σ u_i* u_i).

    Raises:
        NonUnitalError: If G is singular, i.e. the side algebra is not unital.
    """
    if side not in ('left', 'right'):
        message = f'Side must be "left" or "right", got {side!r}.'
        logger.error(message)
        raise InputError(message)
    u = m.basis
    if side == 'left':
        g = sum(b @ b.conj().T for b in u) if len(u) else np.zeros((m.rows, m.rows))
    else:
        g = sum(b.conj().T @ b for b in u) if len(u) else np.zeros((m.cols, m.cols))
    try:
        root = psd_power(g, -0.5, m.tol)
    except PreconditionError as e:
        message = f'The {side} algebra of the space is not unital: {e}'
        logger.error(message)
        raise NonUnitalError(message, f'unital_{side}', e.residual)
    return [root @ b for b in u] if side == 'left' else [b @ root for b in u]
#endregion


#region kraus
def verify_cohomomorphism(k: KrausFamily, t: OperatorSystem, s: OperatorSystem) -> VerificationReport:
    """
    Checks Σ A_i* A_i = I and A_i* T A_j ⊆ S for all i, j.

    Examples:
        >>> from matcore import full_matrices
        >>> verify_cohomomorphism(KrausFamily([np.eye(2)]), full_matrices(2),
        ...                       full_matrices(2)).passed
        True
    """
    report = VerificationReport()
    if k.shape != (t.rows, s.rows):
        report.add('shapes', False, float('inf'),
                   f'Kraus shape {k.shape}, expected ({t.rows}, {s.rows})')
        return report
    report.add('shapes', True, 0.0)

    defect = sum(a.conj().T @ a for a in k.ops) - np.eye(s.rows)
    residual = hs_norm(defect)
    report.add('unital', residual <= s.tol.small(1.0), residual)

    worst, witness = 0.0, None
    for i, ai in enumerate(k.ops):
        for j, aj in enumerate(k.ops):
            for b, tb in enumerate(t.basis):
                ok, res = contains(s, ai.conj().T @ tb @ aj)
                if res > worst:
                    worst = res
                    witness = None if ok else {'i': i, 'j': j, 'basis_index': b}
    report.add('inclusion', worst <= s.tol.small(1.0), worst, witness)
    return report


@dataclass
class KrausWitness:
    """A_i, B_i in X with Σ A_i* B_i = I and the smallest eigenvalue of Σ B_i* B_i."""
    a: list[CMatrix]
    b: list[CMatrix]
    residual: float
    min_eigenvalue: float

    def to_json(self) -> dict:
        return {'A': [cmatrix_to_json(x) for x in self.a], 'B': [cmatrix_to_json(x) for x in self.b],
                'residual': self.residual, 'min_eigenvalue_BstarB': self.min_eigenvalue}


def kraus_witness_from_space(x: MatSubspace, t: OperatorSystem, s: OperatorSystem) -> KrausWitness:
    """
    Certifies a cohomomorphism T -> S from a space X with I ∈ [X*X], X*TX ⊆ S.

    Solves Σ c_kl x_k* x_l = I (minimum norm) over a basis x_k and sets
    A_i = x_i, B_i = Σ_l c_il x_l.

    Raises:
        PreconditionError: If I ∉ [X*X] or X*TX ⊄ S.
    """
    if tuple(x.ambient) != (t.rows, s.rows):
        message = f'Space of shape {x.ambient} does not map C^{s.rows} to C^{t.rows}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    xstar = adjoint_space(x)
    ok, residual = contains(product_span(xstar, x), np.eye(x.cols))
    if not ok:
        message = f'Identity is not in [X*X] (residual {residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'nondegenerate_right', residual)
    ok, residual = is_subspace(product_span(xstar, product_span(t, x)), s)
    if not ok:
        message = f'X*TX is not inside S (residual {residual:.3g}).'
        logger.error(message)
        raise PreconditionError(message, 'inclusion_S', residual)

    n = x.dim
    columns = np.array([(xk.conj().T @ xl).reshape(-1) for xk in x.basis for xl in x.basis]).T
    c, *_ = np.linalg.lstsq(columns, np.eye(x.cols).reshape(-1), rcond=None)
    c = c.reshape(n, n)
    a = [xi for xi in x.basis]
    b = [np.tensordot(c[i], x.basis, axes=1) for i in range(n)]
    residual = hs_norm(sum(ai.conj().T @ bi for ai, bi in zip(a, b)) - np.eye(x.cols))
    lam = min_eigenvalue(sum(bi.conj().T @ bi for bi in b))
    return KrausWitness(a, b, residual, lam)
#endregion


#region trilinear maps
class TrilinearMap:
    """
    Base class of the two trilinear maps of a context.

    Attributes:
        kind: 'bracket' for [x*, t, y] or 'paren' for (x, s, y*)
        certified_cp: whether complete positivity holds by construction
    """
    kind: Literal['bracket', 'paren']
    certified_cp: bool = False

    def __call__(self, x: CMatrix, mid: CMatrix, y: CMatrix) -> CMatrix:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class ConjugationMap(TrilinearMap):
    """[x*, t, y] = x* t y and (x, s, y*) = x s y*."""
    certified_cp = True

    def __init__(self, kind: Literal['bracket', 'paren']):
        self.kind = kind

    def __call__(self, x, mid, y):
        if self.kind == 'bracket':
            return x.conj().T @ mid @ y
        return x @ mid @ y.conj().T

    def to_json(self) -> dict:
        return {'type': 'conjugation', 'kind': self.kind}


class TensorMap(TrilinearMap):
    """
    Trilinear map given by its values W[a, b, c] on basis triples; the
    adjoint slot (first for brackets, last for parens) is conjugate-linear.
    """
    certified_cp = False

    def __init__(self, kind: Literal['bracket', 'paren'], carrier: MatSubspace,
                 middle: MatSubspace, tensor: np.ndarray):
        self.kind = kind
        self.carrier = carrier
        self.middle = middle
        self.tensor = np.asarray(tensor, dtype=np.complex128)
        expected = (carrier.dim, middle.dim, carrier.dim)
        if self.tensor.shape[:3] != expected:
            message = f'Tensor of shape {self.tensor.shape[:3]} does not fit dimensions {expected}.'
            logger.error(message)
            raise DimensionMismatchError(message)

    @classmethod
    def tabulate(cls, f: TrilinearMap, carrier: MatSubspace, middle: MatSubspace) -> 'TensorMap':
        w = np.array([[[f(x, t, y) for y in carrier.basis] for t in middle.basis]
                      for x in carrier.basis])
        return cls(f.kind, carrier, middle, w)

    def coefficients(self, x, mid, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = coefficients(self.carrier, x)
        b = coefficients(self.middle, mid)
        c = coefficients(self.carrier, y)
        return (a.conj(), b, c) if self.kind == 'bracket' else (a, b, c.conj())

    def __call__(self, x, mid, y):
        a, b, c = self.coefficients(x, mid, y)
        return np.einsum('a,b,c,abcrs->rs', a, b, c, self.tensor)

    def scaled(self, factor: complex) -> 'TensorMap':
        return TensorMap(self.kind, self.carrier, self.middle, factor * self.tensor)

    def with_unit_offset(self, offset: CMatrix) -> 'TensorMap':
        """Adds (tr(s)/d) tr(x y*) · offset, which moves the value at the unit."""
        d = self.middle.rows
        traces = np.trace(self.middle.basis, axis1=1, axis2=2) / d
        delta = np.einsum('ac,b,rs->abcrs', np.eye(self.carrier.dim), traces, offset)
        return TensorMap(self.kind, self.carrier, self.middle, self.tensor + delta)

    def to_json(self) -> dict:
        return {'type': 'tensor', 'kind': self.kind, 'shape': list(self.tensor.shape),
                'entries': to_pairs(self.tensor.reshape(-1))}

    @classmethod
    def from_json(cls, data: dict, carrier: MatSubspace, middle: MatSubspace) -> 'TensorMap':
        shape = tuple(int(k) for k in data['shape'])
        entries = np.array(from_pairs(data['entries']))
        if entries.size != np.prod(shape):
            message = f'Tensor has {entries.size} entries for shape {shape}.'
            logger.error(message)
            raise InputError(message)
        return cls(data['kind'], carrier, middle, entries.reshape(shape))
#endregion


#region contexts
@dataclass
class ContextBundle:
    """
    (S, T, carrier, [·,·,·], (·,·,·)) together with sampling settings.

    Attributes:
        s: operator system S ⊆ M_{d_S}
        t: operator system T ⊆ M_{d_T}
        carrier: TRO M (Δ-contexts) or operator space X (bihomomorphism
            contexts) inside M_{d_T, d_S}
        bracket: [x*, t, y], values in S
        paren: (x, s, y*), values in T
        level_cap: highest matrix level of the sampled tests
        samples: samples per level for complete positivity
    """
    s: OperatorSystem
    t: OperatorSystem
    carrier: MatSubspace
    bracket: TrilinearMap
    paren: TrilinearMap
    level_cap: int = config.DEFAULT_LEVEL_CAP
    samples: int = config.CP_SAMPLES

    @property
    def tol(self) -> Tolerance:
        return self.s.tol

    def to_json(self) -> dict:
        return {'s': subspace_to_json(self.s), 't': subspace_to_json(self.t),
                'carrier': subspace_to_json(self.carrier),
                'bracket': self.bracket.to_json(), 'paren': self.paren.to_json(),
                'level_cap': self.level_cap, 'samples': self.samples}

    @classmethod
    def from_json(cls, data: dict, tol: Tolerance = Tolerance()) -> 'ContextBundle':
        """
        Reads a bundle; maps are {"type": "conjugation"} or tensors over the
        orthonormalized bases of the given spaces.

        Raises:
            InputError: If the JSON is malformed.
        """
        try:
            s = system_from_json(data['s'], tol)
            t = system_from_json(data['t'], tol)
            carrier = subspace_from_json(data['carrier'], tol)
            maps = []
            for kind, middle in [('bracket', t), ('paren', s)]:
                spec = data.get(kind, {'type': 'conjugation'})
                if spec.get('type', 'conjugation') == 'conjugation':
                    maps.append(ConjugationMap(kind))
                else:
                    maps.append(TensorMap.from_json({**spec, 'kind': kind}, carrier, middle))
            return cls(s, t, carrier, maps[0], maps[1],
                       int(data.get('level_cap', config.DEFAULT_LEVEL_CAP)),
                       int(data.get('samples', config.CP_SAMPLES)))
        except (KeyError, TypeError, AttributeError) as e:
            message = f'Malformed context bundle JSON: {e}.'
            logger.error(message)
            raise InputError(message)


def conjugation_context(s: OperatorSystem, t: OperatorSystem, m: MatSubspace,
                        level_cap: int = config.DEFAULT_LEVEL_CAP,
                        samples: int = config.CP_SAMPLES) -> ContextBundle:
    """The context of a concrete equivalence, with conjugation maps."""
    return ContextBundle(s, t, m, ConjugationMap('bracket'), ConjugationMap('paren'),
                         level_cap, samples)


def tensor_context(ctx: ContextBundle) -> ContextBundle:
    """Same context with both maps tabulated as coefficient tensors."""
    return replace(ctx, bracket=TensorMap.tabulate(ctx.bracket, ctx.carrier, ctx.t),
                   paren=TensorMap.tabulate(ctx.paren, ctx.carrier, ctx.s))


def with_unit_offset(ctx: ContextBundle) -> ContextBundle:
    """Defect: (m, 1_S, n*) is moved off m n* by an E_01 offset."""
    d = ctx.t.rows
    offset = matrix_unit(0, 1 % d, (d, d))
    paren = TensorMap.tabulate(ctx.paren, ctx.carrier, ctx.s).with_unit_offset(offset)
    return replace(ctx, paren=paren)


def with_sign_flip(ctx: ContextBundle) -> ContextBundle:
    """Defect: the bracket map is negated."""
    return replace(ctx, bracket=TensorMap.tabulate(ctx.bracket, ctx.carrier, ctx.t).scaled(-1))


def with_degenerate_carrier(ctx: ContextBundle) -> ContextBundle:
    """Defect: the carrier is cut down to the span of its first basis element."""
    first = orthonormal_basis(ctx.carrier.basis[:1], ctx.tol, ctx.carrier.ambient)
    return replace(ctx, carrier=first)


def _random_in(space: MatSubspace, rng: np.random.Generator) -> CMatrix:
    return space.random_element(rng) / max(1.0, np.sqrt(space.dim))


def _block_coefficients(space: MatSubspace, big: CMatrix, n: int, m: int) -> np.ndarray:
    """Coefficients of the (i, j) blocks of an n x m block matrix over `space`."""
    r, c = space.ambient
    blocks = big.reshape(n, r, m, c).transpose(0, 2, 1, 3).reshape(n, m, r * c)
    return blocks @ space.vectors.conj().T


def _tensor_of(f: TrilinearMap, carrier: MatSubspace, middle: MatSubspace) -> np.ndarray:
    if isinstance(f, TensorMap) and f.carrier is carrier and f.middle is middle:
        return f.tensor
    return TensorMap.tabulate(f, carrier, middle).tensor


def _amplified(f: TrilinearMap, w: np.ndarray, left: np.ndarray, mid: np.ndarray,
               right: np.ndarray) -> np.ndarray:
    """
    Evaluates the amplification of a trilinear map on coefficient blocks.

    Brackets: out_ij = Σ_kl [X_ki*, T_kl, Y_lj] for X, Y of shape (k, n).
    Parens: out_ij = Σ_kl (X_ik, S_kl, Y_jl*) for X, Y of shape (n, k).
    """
    if f.kind == 'bracket':
        out = np.einsum('kia,klb,ljc,abcrs->irjs', left.conj(), mid, right, w, optimize=True)
    else:
        out = np.einsum('ika,klb,jlc,abcrs->irjs', left, mid, right.conj(), w, optimize=True)
    n, r, _, s = out.shape
    return out.reshape(n * r, n * s)


def _check_cp_and_contractivity(ctx: ContextBundle, f: TrilinearMap, middle: OperatorSystem,
                                name: str, report: VerificationReport) -> float:
    """
    Samples PSD middles H - λ_min(H) I in M_k(middle) and carrier matrices
    at levels up to the cap; records complete positivity and returns the
    worst contractivity ratio excess.
    """
    carrier, tol = ctx.carrier, ctx.tol
    if f.certified_cp:
        report.add(name, True, 0.0, 'conjugation map, completely positive by construction')
        return 0.0

    w = _tensor_of(f, carrier, middle)
    worst_neg, witness, worst_ratio = 0.0, None, 0.0
    for k in range(1, ctx.level_cap + 1):
        amp = amplify(middle, k)
        herm = np.array(hermitian_basis(amp))
        for sample in range(ctx.samples):
            rng = tol.rng(61, k, sample, 0 if name == 'cp_bracket' else 1)
            n = 1 + sample % ctx.level_cap
            h = np.tensordot(rng.normal(size=len(herm)), herm, axes=1)
            p = h - min_eigenvalue(h) * np.eye(h.shape[0])
            mid = _block_coefficients(middle, p, k, k)
            shape = (k, n, carrier.dim) if f.kind == 'bracket' else (n, k, carrier.dim)
            x = rng.normal(size=shape) + 1j * rng.normal(size=shape)
            y = rng.normal(size=shape) + 1j * rng.normal(size=shape)

            out = _amplified(f, w, x, mid, x)
            asym = hs_norm(out - out.conj().T)
            neg = (max(-min_eigenvalue(out), 0.0) + asym) / (1.0 + op_norm(out))
            if neg > worst_neg:
                worst_neg = neg
                witness = {'level': k, 'columns': n, 'sample': sample}

            # contractivity against carrier norms in the concrete ambient
            bound = op_norm(_carrier_block(carrier, x)) * op_norm(p) * op_norm(_carrier_block(carrier, y))
            value = op_norm(_amplified(f, w, x, mid, y))
            if bound > 0:
                worst_ratio = max(worst_ratio, value / bound - 1.0)

    ok = worst_neg <= tol.small(1.0) * 10
    report.add(name, ok, worst_neg, None if ok else witness)
    return worst_ratio


def _carrier_block(carrier: MatSubspace, coeffs: np.ndarray) -> CMatrix:
    """Block matrix with entries Σ_a coeffs[i, j, a] basis_a."""
    n, m, _ = coeffs.shape
    r, c = carrier.ambient
    blocks = np.tensordot(coeffs, carrier.basis, axes=1)
    return blocks.transpose(0, 2, 1, 3).reshape(n * r, m * c)


def _sampled(ctx: ContextBundle, report: VerificationReport, name: str, count: int,
             check) -> None:
    """Runs `check(rng)` -> (residual, scale) on seeded samples and records the worst."""
    worst, witness = 0.0, None
    for sample in range(count):
        residual, scale = check(ctx.tol.rng(73, len(report.entries), sample))
        excess = residual / (1.0 + scale)
        if excess > worst:
            worst, witness = excess, {'sample': sample, 'residual': residual}
    ok = worst <= ctx.tol.small(1.0) * 10
    report.add(name, ok, worst, None if ok else witness)


def verify_delta_context(ctx: ContextBundle) -> VerificationReport:
    """
    Verifies the Δ-context axioms and their consequences.

    Entries:
        tro_closure, unital_algebras: the carrier and its side algebras
        bimodule_S, bimodule_T: S and T are modules over the side algebras
        ranges, cp_bracket, cp_paren, modularity: the trilinear maps
        associativity_paren, associativity_bracket
        contractivity, move_unit_paren, move_unit_bracket
        nested_bracket, nested_paren, unit_paren, unit_bracket,
        unit_through_bracket, unit_through_paren: derived identities

    Complete positivity of conjugation maps is certified; any other map is
    sampled at matrix levels up to `ctx.level_cap`.
    """
    report = VerificationReport()
    s, t, m = ctx.s, ctx.t, ctx.carrier
    if not _shape_ok(s, t, m, report):
        return report

    # carrier
    _check_tro(m, report, nondegenerate=False)
    right, left = report.artifacts['right_algebra'], report.artifacts['left_algebra']
    ok_r, res_r = contains(right, np.eye(s.rows))
    ok_l, res_l = contains(left, np.eye(t.rows))
    report.add('unital_algebras', ok_r and ok_l, max(res_r, res_l),
               None if ok_r and ok_l else {'right_unital': ok_r, 'left_unital': ok_l})

    # modules
    for name, alg, sys in [('bimodule_S', right, s), ('bimodule_T', left, t)]:
        ok1, r1 = is_subspace(product_span(alg, sys), sys)
        ok2, r2 = is_subspace(product_span(sys, alg), sys)
        report.add(name, ok1 and ok2, max(r1, r2))

    br, pa = ctx.bracket, ctx.paren
    n_samples = config.AXIOM_SAMPLES
    eye_s, eye_t = np.eye(s.rows), np.eye(t.rows)

    def draw(rng, space, k):
        return [_random_in(space, rng) for _ in range(k)]

    # trilinear maps
    def ranges(rng):
        x, y = draw(rng, m, 2)
        b = br(x, _random_in(t, rng), y)
        p = pa(x, _random_in(s, rng), y)
        return max(contains(s, b)[1], contains(t, p)[1]), hs_norm(b) + hs_norm(p)
    _sampled(ctx, report, 'ranges', n_samples, ranges)

    ratio_b = _check_cp_and_contractivity(ctx, br, t, 'cp_bracket', report)
    ratio_p = _check_cp_and_contractivity(ctx, pa, s, 'cp_paren', report)

    def modularity(rng):
        m1, m2 = draw(rng, m, 2)
        a, b = draw(rng, right, 2)
        c, d = draw(rng, left, 2)
        tt, ss = _random_in(t, rng), _random_in(s, rng)
        lhs1 = br(m1 @ a.conj().T, tt, m2 @ b)
        rhs1 = a @ br(m1, tt, m2) @ b
        lhs2 = pa(c @ m1, ss, d.conj().T @ m2)
        rhs2 = c @ pa(m1, ss, m2) @ d
        return max(hs_norm(lhs1 - rhs1), hs_norm(lhs2 - rhs2)), hs_norm(rhs1) + hs_norm(rhs2)
    _sampled(ctx, report, 'modularity', n_samples, modularity)

    # associativity
    def assoc_paren(rng):
        m1, m2, m3, m4 = draw(rng, m, 4)
        tt = _random_in(t, rng)
        rhs = (m1 @ m2.conj().T) @ tt @ (m3 @ m4.conj().T)
        return hs_norm(pa(m1, br(m2, tt, m3), m4) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'associativity_paren', n_samples, assoc_paren)

    def assoc_bracket(rng):
        m1, m2, m3, m4 = draw(rng, m, 4)
        ss = _random_in(s, rng)
        rhs = (m1.conj().T @ m2) @ ss @ (m3.conj().T @ m4)
        return hs_norm(br(m1, pa(m2, ss, m3), m4) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'associativity_bracket', n_samples, assoc_bracket)

    # context conditions
    worst_ratio = max(ratio_b, ratio_p)
    report.add('contractivity', worst_ratio <= 1e-6, max(worst_ratio, 0.0))

    def move_paren(rng):
        m1, m2 = draw(rng, m, 2)
        rhs = m1 @ m2.conj().T
        return hs_norm(pa(m1, eye_s, m2) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'move_unit_paren', n_samples, move_paren)

    def move_bracket(rng):
        m1, m2 = draw(rng, m, 2)
        rhs = m1.conj().T @ m2
        return hs_norm(br(m1, eye_t, m2) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'move_unit_bracket', n_samples, move_bracket)

    _check_properties(ctx, report, n_samples)
    return report


def _check_properties(ctx: ContextBundle, report: VerificationReport, n_samples: int) -> None:
    """Identities that follow from the Δ-context relations."""
    s, t, m = ctx.s, ctx.t, ctx.carrier
    br, pa = ctx.bracket, ctx.paren
    eye_s, eye_t = np.eye(s.rows), np.eye(t.rows)

    def h(x: CMatrix) -> CMatrix:
        return x.conj().T

    def six(rng):
        m1, m2, m3, n1, n2, n3 = [_random_in(m, rng) for _ in range(6)]
        tt, ss = _random_in(t, rng), _random_in(s, rng)
        pairs = [
            (br(m1, pa(m2, br(m3, tt, n3), n2), n1),
             br(m3 @ h(m2) @ m1, tt, n3 @ h(n2) @ n1)),
            (pa(m1, br(m2, pa(m3, ss, n3), n2), n1),
             pa(m1 @ h(m2) @ m3, ss, n1 @ h(n2) @ n3)),
            (pa(m1, eye_s, m2), m1 @ h(m2)),
            (br(m1, eye_t, m2), h(m1) @ m2),
            (br(m1, pa(m2, eye_s, n2), n1), br(m1, eye_t, m2 @ h(n2) @ n1),
             br(n2 @ h(m2) @ m1, eye_t, n1)),
            (pa(m1, br(m2, eye_t, n2), n1), pa(m1, eye_s, n1 @ h(n2) @ m2),
             pa(m1 @ h(m2) @ n2, eye_s, n1)),
        ]
        out = []
        for group in pairs:
            ref = group[0]
            out.append((max(hs_norm(ref - g) for g in group[1:]),
                        max(hs_norm(g) for g in group)))
        return out

    results = [six(ctx.tol.rng(79, sample)) for sample in range(n_samples)]
    for item, label in enumerate(['nested_bracket', 'nested_paren', 'unit_paren', 'unit_bracket',
                                  'unit_through_bracket', 'unit_through_paren']):
        worst = max(r[item][0] / (1.0 + r[item][1]) for r in results)
        ok = worst <= ctx.tol.small(1.0) * 10
        report.add(label, ok, worst)


@dataclass
class SemiUnits:
    """
    Finite semi-units: Σ [x_i*, 1_T, y_i] = 1_S and Σ (z_i, 1_S, w_i*) = 1_T.
    """
    x: list[CMatrix]
    y: list[CMatrix]
    z: list[CMatrix]
    w: list[CMatrix]
    residual_x: float
    residual_z: float


def semi_units(ctx: ContextBundle) -> SemiUnits:
    """
    Semi-units inside the carrier by a linear solve.

    With x_i = z_i the carrier basis, y_i = Σ_l c_il x_l and w_i = Σ_l d_il x_l
    are chosen so that the unit relations hold (least squares).
    """
    x = list(ctx.carrier.basis)
    n = len(x)
    eye_s, eye_t = np.eye(ctx.s.rows), np.eye(ctx.t.rows)

    # Σ_il c_il [x_i*, 1_T, x_l] = 1_S
    cols = np.array([ctx.bracket(xi, eye_t, xl).reshape(-1) for xi in x for xl in x]).T
    c, *_ = np.linalg.lstsq(cols, eye_s.reshape(-1), rcond=None) if n else (np.zeros(0),)
    c = c.reshape(n, n)
    y = [np.tensordot(c[i], ctx.carrier.basis, axes=1) for i in range(n)]

    # Σ_il conj(d_il) (x_i, 1_S, x_l*) = 1_T
    cols = np.array([ctx.paren(xi, eye_s, xl).reshape(-1) for xi in x for xl in x]).T
    dbar, *_ = np.linalg.lstsq(cols, eye_t.reshape(-1), rcond=None) if n else (np.zeros(0),)
    d = dbar.conj().reshape(n, n)
    w = [np.tensordot(d[i], ctx.carrier.basis, axes=1) for i in range(n)]

    res_x = hs_norm(sum((ctx.bracket(xi, eye_t, yi) for xi, yi in zip(x, y)),
                        np.zeros_like(eye_s)) - eye_s)
    res_z = hs_norm(sum((ctx.paren(xi, eye_s, wi) for xi, wi in zip(x, w)),
                        np.zeros_like(eye_t)) - eye_t)
    return SemiUnits(x, y, list(x), w, res_x, res_z)


def verify_bihom_context(ctx: ContextBundle) -> VerificationReport:
    """
    Verifies the bihomomorphism-context axioms.

    Entries:
        nondegenerate: the carrier and its adjoint
        cp_bracket, cp_paren, unit_in_multipliers: the trilinear maps
        associativity_bracket, associativity_paren
        contractivity
        semi_units_X, semi_units_Xstar, unit_recovery: finite semi-units
            exist and recover s and t
    """
    report = VerificationReport()
    s, t, x = ctx.s, ctx.t, ctx.carrier
    if not _shape_ok(s, t, x, report):
        return report
    tol = ctx.tol
    eye_s, eye_t = np.eye(s.rows), np.eye(t.rows)
    br, pa = ctx.bracket, ctx.paren
    n_samples = config.AXIOM_SAMPLES

    # carrier
    xstar = adjoint_space(x)
    ok_r, res_r = contains(product_span(xstar, x), eye_s)
    ok_l, res_l = contains(product_span(x, xstar), eye_t)
    ok = report.add('nondegenerate', ok_r and ok_l, max(res_r, res_l),
                    None if ok_r and ok_l else {'identity_in_XstarX': ok_r,
                                                'identity_in_XXstar': ok_l})
    if not ok:
        return report

    # trilinear maps
    ratio_b = _check_cp_and_contractivity(ctx, br, t, 'cp_bracket', report)
    ratio_p = _check_cp_and_contractivity(ctx, pa, s, 'cp_paren', report)
    a_s, a_t = multiplier_algebra(s), multiplier_algebra(t)
    worst = 0.0
    for xi in x.basis:
        for xj in x.basis:
            worst = max(worst, contains(a_s, br(xi, eye_t, xj))[1],
                        contains(a_t, pa(xi, eye_s, xj))[1])
    report.add('unit_in_multipliers', worst <= tol.small(1.0), worst)

    # associativity
    def assoc_bracket(rng):
        x1, x2, x3, x4 = [_random_in(x, rng) for _ in range(4)]
        ss = _random_in(s, rng)
        rhs = br(x1, eye_t, x2) @ ss @ br(x3, eye_t, x4)
        return hs_norm(br(x1, pa(x2, ss, x3), x4) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'associativity_bracket', n_samples, assoc_bracket)

    def assoc_paren(rng):
        x1, x2, x3, x4 = [_random_in(x, rng) for _ in range(4)]
        tt = _random_in(t, rng)
        rhs = pa(x1, eye_s, x2) @ tt @ pa(x3, eye_s, x4)
        return hs_norm(pa(x1, br(x2, tt, x3), x4) - rhs), hs_norm(rhs)
    _sampled(ctx, report, 'associativity_paren', n_samples, assoc_paren)

    # context conditions
    worst_ratio = max(ratio_b, ratio_p)
    report.add('contractivity', worst_ratio <= 1e-6, max(worst_ratio, 0.0))

    units = semi_units(ctx)
    report.artifacts['semi_units'] = units
    report.add('semi_units_X', units.residual_x <= tol.small(1.0), units.residual_x)
    report.add('semi_units_Xstar', units.residual_z <= tol.small(1.0), units.residual_z)

    worst = 0.0
    for tt in t.basis:
        total = sum(pa(zi, br(wi, tt, zj), wj)
                    for zi, wi in zip(units.z, units.w) for zj, wj in zip(units.z, units.w))
        worst = max(worst, hs_norm(total - tt))
    for ss in s.basis:
        total = sum(br(xi, pa(yi, ss, xj), yj)
                    for xi, yi in zip(units.x, units.y) for xj, yj in zip(units.x, units.y))
        worst = max(worst, hs_norm(total - ss))
    report.add('unit_recovery', worst <= tol.small(1.0) * 10, worst)
    return report
#endregion


#region constructions
def compose_equivalences(m1: MatSubspace, m2: MatSubspace) -> TRO:
    """
    M3 = [M2 D M1] for S ~ T via M1 and T ~ R via M2, where D is the
    *-algebra generated by M1 M1* and M2* M2.

    Raises:
        DimensionMismatchError: If M2 does not start where M1 ends.
    """
    if m2.cols != m1.rows:
        message = f'Cannot compose carriers of shapes {m1.ambient} and {m2.ambient}.'
        logger.error(message)
        raise DimensionMismatchError(message)
    gens = orthonormal_basis(list(product_span(m1, adjoint_space(m1)).basis)
                             + list(product_span(adjoint_space(m2), m2).basis),
                             m1.tol, (m1.rows, m1.rows))
    d = generated_star_algebra(gens, unital=False)
    return TRO.from_space(product_span(m2, product_span(d, m1)))


def build_delta_context(s: OperatorSystem, t: OperatorSystem, m: MatSubspace,
                        level_cap: int = config.DEFAULT_LEVEL_CAP,
                        samples: int = config.CP_SAMPLES) -> ContextBundle:
    """
    Δ-context of a verified TRO-equivalence.

    Raises:
        PreconditionError: If (S, T, M) is not a TRO-equivalence.
    """
    report = verify_tro_equivalence(s, t, m)
    if not report.passed:
        message = f'Not a TRO-equivalence: {report.failures()}.'
        logger.error(message)
        raise PreconditionError(message, report.failures()[0], report.worst_residual)
    return conjugation_context(s, t, m, level_cap, samples)


def build_bihom_context(s: OperatorSystem, t: OperatorSystem, x: MatSubspace,
                        level_cap: int = config.DEFAULT_LEVEL_CAP,
                        samples: int = config.CP_SAMPLES) -> ContextBundle:
    """
    Bihomomorphism context of a space X with X*TX ⊆ S and XSX* ⊆ T.

    Raises:
        PreconditionError: If the inclusions fail.
    """
    xstar = adjoint_space(x)
    for name, ok_res in [('inclusion_S', is_subspace(product_span(xstar, product_span(t, x)), s)),
                         ('inclusion_T', is_subspace(product_span(x, product_span(s, xstar)), t))]:
        if not ok_res[0]:
            message = f'{name} fails (residual {ok_res[1]:.3g}).'
            logger.error(message)
            raise PreconditionError(message, name, ok_res[1])
    return conjugation_context(s, t, x, level_cap, samples)


@dataclass
class Factorization:
    """
    φ(x) = [r_i x r_j*] in M_k(T) and ψ(φ(x)) = Σ r_i* φ(x)_ij r_j.

    Attributes:
        residual: ||ψ(φ(x)) - x||
        unit_residual: worst defect of Σ l_i l_i* = I and Σ r_i* r_i = I
    """
    phi_image: CMatrix
    roundtrip: CMatrix
    residual: float
    unit_residual: float = 0.0


def factorization_maps(m: MatSubspace, x: CMatrix) -> Factorization:
    """
    Factors the identity of S through M_k(T) using right quasi-units r_i.

    Raises:
        NonUnitalError: If either side algebra of M is not unital.
    """
    x = as_cmatrix(x)
    left = quasi_unit(m, 'left')
    r = quasi_unit(m, 'right')
    unit_residual = max(hs_norm(sum(li @ li.conj().T for li in left) - np.eye(m.rows)),
                        hs_norm(sum(ri.conj().T @ ri for ri in r) - np.eye(m.cols)))
    phi = np.block([[ri @ x @ rj.conj().T for rj in r] for ri in r])
    tr_ = m.rows
    back = sum(ri.conj().T @ phi[i * tr_:(i + 1) * tr_, j * tr_:(j + 1) * tr_] @ rj
               for i, ri in enumerate(r) for j, rj in enumerate(r))
    return Factorization(phi, back, hs_norm(back - x), unit_residual)
#endregion
