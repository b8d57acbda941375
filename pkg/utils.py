"""
Shared helpers: exception types, type aliases, canonical JSON and small
combinatorial generators.
"""

import hashlib
import json
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

# a sampler of random complex matrices of a fixed shape
MatrixSampler = Callable[[np.random.Generator], np.ndarray]
# vertex labels of a map [k] -> [m]
Labels = Sequence[int]


#region exceptions
class InputError(ValueError):
    """Malformed input: parse errors, wrong shapes, inconsistent data."""


class DimensionMismatchError(InputError):
    """Matrices or spaces whose shapes do not fit together."""


class NotAGraphSystemError(InputError):
    """An operator system that is not a span of matrix units."""


class PreconditionError(ValueError):
    """
    A documented precondition of an operation does not hold.

    Attributes:
        condition: short name of the violated condition
        residual: how far the input is from satisfying it
    """

    def __init__(self, message: str, condition: str = '', residual: float = float('nan')):
        super().__init__(message)
        self.condition = condition
        self.residual = residual


class NotRigidError(PreconditionError):
    """The multiplier algebra is larger than the scalars."""


class NonUnitalError(PreconditionError):
    """A side algebra of a TRO or space does not contain the identity."""


class NonCommutativeError(PreconditionError):
    """A generated C*-algebra expected to be commutative is not."""


class VerificationFailedError(RuntimeError):
    """A verification report contains a failing entry."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class LimitExceededError(RuntimeError):
    """A size cap or a search budget was exceeded."""
#endregion


#region serialization
def canonical_json(obj: Any) -> str:
    """
    Serializes `obj` to JSON with sorted keys.

    Args:
        obj: JSON-compatible object

    Returns:
        Canonical JSON text.

    Examples:
        >>> canonical_json({'b': 1, 'a': [1, 2]})
        '{"a": [1, 2], "b": 1}'
    """
    return json.dumps(obj, sort_keys=True, default=_builtin)


def _builtin(obj: Any) -> Any:
    # numpy scalars and arrays reach certificates through residuals and labels
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')


def digest(obj: Any) -> str:
    """
    Computes the SHA-256 digest of the canonical JSON form of `obj`.

    Args:
        obj: JSON-compatible object

    Returns:
        Hexadecimal digest.

    Examples:
        >>> digest({'a': 1}) == digest({'a': 1})
        True
        >>> len(digest([]))
        64
    """
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()


def to_pairs(values: Iterable[complex]) -> list[list[float]]:
    """
    Converts complex numbers to `[re, im]` pairs.

    Examples:
        >>> to_pairs([1, 2j])
        [[1.0, 0.0], [0.0, 2.0]]
    """
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def from_pairs(pairs: Iterable[Sequence[float]]) -> list[complex]:
    """
    Converts `[re, im]` pairs (or plain reals) to complex numbers.

    Raises:
        InputError: If an entry is neither a number nor a pair.

    Examples:
        >>> from_pairs([[1, 0], [0, 2], 3])
        [(1+0j), 2j, (3+0j)]
    """
    out = []
    for p in pairs:
        if isinstance(p, (int, float)):
            out.append(complex(p))
        elif isinstance(p, (list, tuple)) and len(p) == 2:
            out.append(complex(p[0], p[1]))
        else:
            raise InputError(f'Cannot read complex entry {p!r}.')
    return out
#endregion


#region combinatorics
def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    """
    Generates all set partitions of `range(n)` as restricted growth strings.

    The i-th entry is the block of element i; blocks are numbered in order
    of first appearance.

    Args:
        n: number of elements

    Yields:
        Block labels of every partition.

    Examples:
        >>> list(restricted_growth_strings(3))
        [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1), (0, 1, 2)]
        >>> sum(1 for _ in restricted_growth_strings(5))
        52
    """
    if n == 0:
        yield ()
        return

    def extend(prefix: list[int], top: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            prefix.append(b)
            yield from extend(prefix, max(top, b))
            prefix.pop()

    yield from extend([0], 0)


def is_surjective(values: Labels, m: int) -> bool:
    """
    Checks whether the labels cover all of `range(m)`.

    Examples:
        >>> is_surjective([0, 1, 1], 2)
        True
        >>> is_surjective([0, 0], 2)
        False
    """
    return set(values) == set(range(m))


def relabel_by_first_occurrence(values: Labels) -> tuple[int, ...]:
    """
    Renumbers labels in order of first occurrence.

    Examples:
        >>> relabel_by_first_occurrence([5, 2, 5, 7])
        (0, 1, 0, 2)
    """
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(v, len(seen)) for v in values)
#endregion
