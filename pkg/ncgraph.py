"""
Graph operator systems S_G, twin reduction, canonical labelling, the
common-pullback decision for Δ-equivalence of graph systems and pattern
TRO synthesis.

Vertices are 0-based everywhere. The relation i ≃ j means i ∼ j or i = j.
"""

import logging_config
import config
from matcore import (OperatorSystem, MatSubspace, Tolerance, matrix_unit, contains,
                     orthonormal_basis, subspace_to_json)
from tro import TRO, KrausFamily, verify_tro_equivalence
from utils import (InputError, NotAGraphSystemError, PreconditionError,
                   LimitExceededError, restricted_growth_strings, is_surjective)

from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Iterable, Sequence
import json
import math
import numpy as np

logger = logging_config.get_local_logger(__name__)
run_logger = logging_config.get_run_logger(__name__)


#region graphs
@dataclass(frozen=True)
class Graph:
    """
    Finite simple undirected graph.

    Attributes:
        n: number of vertices
        edges: edges (i, j) with i < j
    """
    n: int
    edges: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> 'Graph':
        """
        Builds a graph, normalizing edge orientation.

        Raises:
            InputError: On loops or vertices out of range.
            LimitExceededError: If `n` exceeds the vertex cap.
        """
        if n < 1:
            message = f'A graph needs at least one vertex, got {n}.'
            logger.error(message)
            raise InputError(message)
        if n > config.MAX_VERTICES:
            message = f'Graph on {n} vertices exceeds the cap {config.MAX_VERTICES}.'
            logger.error(message)
            raise LimitExceededError(message)
        normalized = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                message = f'Loop at vertex {i}; ≃ is reflexive, loops are not stored.'
                logger.error(message)
                raise InputError(message)
            if not (0 <= i < n and 0 <= j < n):
                message = f'Edge ({i}, {j}) outside vertex range 0..{n - 1}.'
                logger.error(message)
                raise InputError(message)
            normalized.add((min(i, j), max(i, j)))
        return cls(n, frozenset(normalized))

    @classmethod
    def complete(cls, n: int) -> 'Graph':
        return cls.from_edges(n, combinations(range(n), 2))

    @classmethod
    def empty(cls, n: int) -> 'Graph':
        return cls.from_edges(n, [])

    @classmethod
    def path(cls, n: int) -> 'Graph':
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> 'Graph':
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    def adjacent(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def sim(self, i: int, j: int) -> bool:
        """i ≃ j."""
        return i == j or self.adjacent(i, j)

    def neighbours(self, v: int) -> frozenset[int]:
        return frozenset(u for u in range(self.n) if self.adjacent(u, v))

    def closed_neighbourhood(self, v: int) -> frozenset[int]:
        return self.neighbours(v) | {v}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            a[i, j] = a[j, i] = True
        return a

    def complement(self) -> 'Graph':
        return Graph.from_edges(self.n, [e for e in combinations(range(self.n), 2)
                                         if e not in self.edges])

    def disjoint_union(self, other: 'Graph') -> 'Graph':
        shifted = [(i + self.n, j + self.n) for i, j in other.edges]
        return Graph.from_edges(self.n + other.n, list(self.edges) + shifted)

    def induced_subgraph(self, vertices: Sequence[int]) -> 'Graph':
        """Subgraph on `vertices`, relabelled 0.. in the given order."""
        index = {v: k for k, v in enumerate(vertices)}
        return Graph.from_edges(len(vertices), [(index[i], index[j]) for i, j in self.edges
                                                if i in index and j in index])

    def connected_components(self) -> list[list[int]]:
        """Components as sorted vertex lists, ordered by their smallest vertex."""
        seen, components = set(), []
        for start in range(self.n):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                v = stack.pop()
                comp.append(v)
                for u in self.neighbours(v):
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            components.append(sorted(comp))
        return components

    def to_json(self) -> dict:
        return {'vertices': self.n, 'edges': [list(e) for e in sorted(self.edges)]}

    @classmethod
    def from_json(cls, data: dict) -> 'Graph':
        try:
            return cls.from_edges(int(data['vertices']), data.get('edges', []))
        except (KeyError, TypeError, IndexError) as e:
            message = f'Malformed graph JSON: {e}.'
            logger.error(message)
            raise InputError(message)

    def to_edge_list(self) -> str:
        return '\n'.join([str(self.n)] + [f'{i} {j}' for i, j in sorted(self.edges)]) + '\n'

    @classmethod
    def from_edge_list(cls, text: str) -> 'Graph':
        """
        Parses "n" followed by one "i j" edge per line.

        Examples:
            >>> Graph.from_edge_list('3\\n0 1\\n1 2\\n') == Graph.path(3)
            True
        """
        lines = [line.split('#')[0].strip() for line in text.splitlines()]
        lines = [line for line in lines if line]
        try:
            n = int(lines[0])
            edges = [tuple(int(t) for t in line.split()) for line in lines[1:]]
        except (IndexError, ValueError) as e:
            message = f'Malformed edge list: {e}.'
            logger.error(message)
            raise InputError(message)
        if any(len(e) != 2 for e in edges):
            message = 'Every edge line must contain exactly two vertices.'
            logger.error(message)
            raise InputError(message)
        return cls.from_edges(n, edges)


def parse_graph(text: str) -> Graph:
    """Reads a graph from JSON or edge-list text."""
    stripped = text.lstrip()
    if stripped.startswith('{'):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as e:
            message = f'Invalid graph JSON: {e}.'
            logger.error(message)
            raise InputError(message)
        return Graph.from_json(data)
    return Graph.from_edge_list(text)


@dataclass(frozen=True)
class VertexMap:
    """A total map [domain] -> [codomain]."""
    domain: int
    codomain: int
    values: tuple[int, ...]

    def __post_init__(self):
        if len(self.values) != self.domain or any(not 0 <= v < self.codomain
                                                  for v in self.values):
            message = (f'Vertex map {self.values} is not a map '
                       f'[{self.domain}] -> [{self.codomain}].')
            logger.error(message)
            raise InputError(message)

    @classmethod
    def identity(cls, n: int) -> 'VertexMap':
        return cls(n, n, tuple(range(n)))

    @property
    def surjective(self) -> bool:
        return is_surjective(self.values, self.codomain)

    def __call__(self, x: int) -> int:
        return self.values[x]

    def then(self, other: 'VertexMap') -> 'VertexMap':
        """other ∘ self."""
        return VertexMap(self.domain, other.codomain, tuple(other(v) for v in self.values))

    def inverse(self) -> 'VertexMap':
        if self.domain != self.codomain or not self.surjective:
            message = 'Only bijections can be inverted.'
            logger.error(message)
            raise InputError(message)
        inv = [0] * self.domain
        for x, v in enumerate(self.values):
            inv[v] = x
        return VertexMap(self.domain, self.domain, tuple(inv))

    def to_json(self) -> dict:
        return {'domain': self.domain, 'codomain': self.codomain, 'values': list(self.values)}

    @classmethod
    def from_json(cls, data: dict) -> 'VertexMap':
        return cls(int(data['domain']), int(data['codomain']), tuple(int(v) for v in data['values']))
#endregion


#region graph systems
def graph_system(g: Graph, tol: Tolerance = Tolerance()) -> OperatorSystem:
    """
    S_G = span{E_ij : i ≃ j}.

    Examples:
        >>> graph_system(Graph.path(3)).dim
        7
    """
    n = g.n
    units = [matrix_unit(i, j, (n, n)) for i in range(n) for j in range(n) if g.sim(i, j)]
    return OperatorSystem((n, n), np.array(units), tol)


def system_graph(s: OperatorSystem) -> Graph:
    """
    Recovers G from S = S_G.

    Raises:
        NotAGraphSystemError: If S is not the span of the matrix units in
            its support pattern.
    """
    n = s.d
    support = np.abs(s.basis).max(axis=0) > s.tol.small(1.0)
    for i, j in zip(*np.nonzero(support)):
        ok, residual = contains(s, matrix_unit(i, j, (n, n)))
        if not ok:
            message = (f'E_{i}{j} is in the support but not in the span '
                       f'(residual {residual:.3g}); not a graph system.')
            logger.error(message)
            raise NotAGraphSystemError(message)
    return Graph.from_edges(n, [(i, j) for i, j in zip(*np.nonzero(support)) if i < j])
#endregion


#region twins, pullbacks and canonical forms
def twin_classes(g: Graph) -> list[list[int]]:
    """Classes of true twins (equal closed neighbourhoods), ordered by smallest vertex."""
    classes: dict[frozenset[int], list[int]] = {}
    for v in range(g.n):
        classes.setdefault(g.closed_neighbourhood(v), []).append(v)
    return sorted(classes.values(), key=min)


def twin_quotient(g: Graph) -> tuple[Graph, VertexMap]:
    """
    Collapses true-twin classes.

    Returns:
        A tuple containing:
            1. the twin-free quotient graph
            2. the class map from V(g)
    """
    classes = twin_classes(g)
    label = [0] * g.n
    for a, cls in enumerate(classes):
        for v in cls:
            label[v] = a
    edges = [(a, b) for a, b in combinations(range(len(classes)), 2)
             if g.adjacent(classes[a][0], classes[b][0])]
    return Graph.from_edges(len(classes), edges), VertexMap(g.n, len(classes), tuple(label))


def verify_pullback(g: Graph, k: Graph, f: VertexMap) -> bool:
    """True iff x ≃ x' in g exactly when f(x) ≃ f(x') in k."""
    if f.domain != g.n or f.codomain != k.n:
        return False
    return all(g.sim(x, y) == k.sim(f(x), f(y))
               for x in range(g.n) for y in range(x + 1, g.n))


def is_isomorphism(g: Graph, h: Graph, f: VertexMap) -> bool:
    if g.n != h.n or f.domain != g.n or f.codomain != h.n or not f.surjective:
        return False
    return all(g.adjacent(x, y) == h.adjacent(f(x), f(y))
               for x in range(g.n) for y in range(x + 1, g.n))


def _certificate(g: Graph, order: Sequence[int]) -> str:
    """Upper-triangle adjacency bits of g with vertices listed in `order`."""
    bits = ''.join('1' if g.adjacent(order[p], order[q]) else '0'
                   for p in range(g.n) for q in range(p + 1, g.n))
    return f'{g.n}:{bits}'


def _refine(g: Graph, colours: list[int], nbrs: list[frozenset[int]]) -> list[int]:
    while True:
        signatures = [(colours[v], tuple(sorted(colours[u] for u in nbrs[v])))
                      for v in range(g.n)]
        ranks = {sig: r for r, sig in enumerate(sorted(set(signatures)))}
        refined = [ranks[sig] for sig in signatures]
        if len(ranks) == len(set(colours)):
            return refined
        colours = refined


def canonical_form(g: Graph) -> tuple[str, tuple[int, ...]]:
    """
    Canonical labelling by colour refinement and individualization.

    The search branches on the first non-singleton colour cell; of several
    twins inside that cell only one is explored, since swapping twins is an
    automorphism fixing everything else.

    Args:
        g: graph

    Returns:
        A tuple containing:
            1. certificate string, equal for isomorphic graphs only
            2. vertices in canonical order

    Raises:
        LimitExceededError: If the search exceeds the node budget.

    Examples:
        >>> canonical_form(Graph.path(3))[0] == canonical_form(
        ...     Graph.from_edges(3, [(0, 2), (2, 1)]))[0]
        True
    """
    nbrs = [g.neighbours(v) for v in range(g.n)]
    closed = [nbrs[v] | {v} for v in range(g.n)]
    best: list = [None, None]
    nodes = [0]

    def search(colours: list[int]) -> None:
        nodes[0] += 1
        if nodes[0] > config.CANON_NODE_BUDGET:
            message = f'Canonical labelling exceeded {config.CANON_NODE_BUDGET} search nodes.'
            logger.error(message)
            raise LimitExceededError(message)
        if len(set(colours)) == g.n:
            order = tuple(sorted(range(g.n), key=lambda v: colours[v]))
            cert = _certificate(g, order)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, order
            return
        sizes: dict[int, int] = {}
        for c in colours:
            sizes[c] = sizes.get(c, 0) + 1
        target = min(c for c, k in sizes.items() if k > 1)
        cell = [v for v in range(g.n) if colours[v] == target]
        explored: list[int] = []
        for v in cell:
            if any(nbrs[v] == nbrs[w] or closed[v] == closed[w] for w in explored):
                continue
            explored.append(v)
            individualized = [2 * c + (1 if c == target and u != v else 0)
                              for u, c in enumerate(colours)]
            search(_refine(g, individualized, nbrs))

    search(_refine(g, [0] * g.n, nbrs))
    return best[0], best[1]


def brute_force_certificate(g: Graph) -> str:
    """Smallest adjacency certificate over all vertex orders; exponential, n <= 7."""
    if g.n > 7:
        message = f'Brute-force certificate requested for {g.n} > 7 vertices.'
        logger.error(message)
        raise LimitExceededError(message)
    return min(_certificate(g, order) for order in permutations(range(g.n)))


def find_isomorphism(g: Graph, h: Graph) -> VertexMap | None:
    """An isomorphism g -> h, or None."""
    if g.n != h.n or len(g.edges) != len(h.edges):
        return None
    cert_g, order_g = canonical_form(g)
    cert_h, order_h = canonical_form(h)
    if cert_g != cert_h:
        return None
    values = [0] * g.n
    for p in range(g.n):
        values[order_g[p]] = order_h[p]
    iso = VertexMap(g.n, h.n, tuple(values))
    assert is_isomorphism(g, h, iso)
    return iso
#endregion


#region delta-equivalence decision
@dataclass
class PullbackWitness:
    """
    G and H as pullbacks of isomorphic twin-free graphs.

    Attributes:
        quotient_g: twin quotient of G
        quotient_h: twin quotient of H
        map_g: class map G -> quotient_g
        map_f: class map H -> quotient_h
        iso: isomorphism quotient_g -> quotient_h
    """
    quotient_g: Graph
    quotient_h: Graph
    map_g: VertexMap
    map_f: VertexMap
    iso: VertexMap

    def verify(self, g: Graph, h: Graph) -> bool:
        return (verify_pullback(g, self.quotient_g, self.map_g)
                and verify_pullback(h, self.quotient_h, self.map_f)
                and is_isomorphism(self.quotient_g, self.quotient_h, self.iso))

    def transposed(self) -> 'PullbackWitness':
        return PullbackWitness(self.quotient_h, self.quotient_g, self.map_f, self.map_g,
                               self.iso.inverse())

    def to_json(self) -> dict:
        return {'quotient_g': self.quotient_g.to_json(), 'quotient_h': self.quotient_h.to_json(),
                'map_g': self.map_g.to_json(), 'map_f': self.map_f.to_json(),
                'iso': self.iso.to_json(), 'targets_restricted_to_images': True}

    @classmethod
    def from_json(cls, data: dict) -> 'PullbackWitness':
        return cls(Graph.from_json(data['quotient_g']), Graph.from_json(data['quotient_h']),
                   VertexMap.from_json(data['map_g']), VertexMap.from_json(data['map_f']),
                   VertexMap.from_json(data['iso']))


@dataclass
class NotEquivalent:
    """Twin quotients with different canonical certificates."""
    certificate_g: str
    certificate_h: str

    def to_json(self) -> dict:
        return {'certificate_g': self.certificate_g, 'certificate_h': self.certificate_h}


def decide_delta_graphs(g: Graph, h: Graph) -> PullbackWitness | NotEquivalent:
    """
    Decides S_G ∼Δ S_H: G and H must be pullbacks of isomorphic graphs,
    i.e. their twin quotients must be isomorphic.

    Examples:
        >>> isinstance(decide_delta_graphs(Graph.complete(2), Graph.complete(3)), PullbackWitness)
        True
        >>> isinstance(decide_delta_graphs(Graph.cycle(5), Graph.cycle(4)), NotEquivalent)
        True
    """
    qg, map_g = twin_quotient(g)
    qh, map_f = twin_quotient(h)
    iso = find_isomorphism(qg, qh)
    if iso is None:
        run_logger.info(f'Graphs {g.to_json()} and {h.to_json()}: not Δ-equivalent.')
        return NotEquivalent(canonical_form(qg)[0], canonical_form(qh)[0])

    witness = PullbackWitness(qg, qh, map_g, map_f, iso)
    if not witness.verify(g, h):
        message = 'Constructed pullback witness failed verification.'
        logger.error(message)
        raise RuntimeError(message)
    run_logger.info(f'Graphs {g.to_json()} and {h.to_json()}: Δ-equivalent via '
                    f'a twin-free quotient on {qg.n} vertices.')
    return witness


def brute_force_pullback_targets(g: Graph, max_target: int = 5) -> set[str]:
    """
    Brute-force certificates of every K on <= max_target vertices such that g
    is a pullback of K via a surjection.

    A surjection is a set partition of V(g) (the target is determined up to
    relabelling); the pullback condition forces blocks to be cliques, forces
    all-or-nothing adjacency between blocks and fixes the edges of K.
    """
    targets = set()
    for labels in restricted_growth_strings(g.n):
        k = max(labels) + 1
        if k > max_target:
            continue
        edges, ok = set(), True
        for x in range(g.n):
            for y in range(x + 1, g.n):
                a, b = labels[x], labels[y]
                if a == b:
                    ok = g.adjacent(x, y)
                else:
                    pair = (min(a, b), max(a, b))
                    if g.adjacent(x, y):
                        edges.add(pair)
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        target = Graph.from_edges(k, edges)
        f = VertexMap(g.n, k, labels)
        if verify_pullback(g, target, f):
            targets.add(brute_force_certificate(target))
    return targets


def brute_force_common_pullback(g: Graph, h: Graph, max_target: int = 5) -> bool:
    """Oracle: do g and h have isomorphic pullback targets on <= max_target vertices?"""
    return bool(brute_force_pullback_targets(g, max_target)
                & brute_force_pullback_targets(h, max_target))


def enumerate_graphs(n: int) -> list[Graph]:
    """
    All graphs on `n` vertices up to isomorphism, by brute-force certificates.

    Examples:
        >>> [len(enumerate_graphs(n)) for n in range(1, 5)]
        [1, 2, 4, 11]
    """
    pairs = list(combinations(range(n), 2))
    seen, graphs = set(), []
    for mask in range(2 ** len(pairs)):
        g = Graph.from_edges(n, [p for b, p in enumerate(pairs) if mask >> b & 1])
        cert = brute_force_certificate(g)
        if cert not in seen:
            seen.add(cert)
            graphs.append(g)
    return graphs
#endregion


#region pattern TROs
def pattern_tro(f: VertexMap, g: VertexMap, tol: Tolerance = Tolerance()) -> TRO:
    """
    M = span{E_ij : f(i) = g(j)} inside M_{ℓ,r}.

    Args:
        f: labels of the ℓ rows
        g: labels of the r columns, same codomain as `f`

    Raises:
        PreconditionError: If the maps are not surjective onto a common codomain.
    """
    if f.codomain != g.codomain or not f.surjective or not g.surjective:
        message = (f'Pattern maps must be surjective onto a common codomain, got '
                   f'{f.values}->[{f.codomain}] and {g.values}->[{g.codomain}].')
        logger.error(message)
        raise PreconditionError(message, 'surjective_labels')
    shape = (f.domain, g.domain)
    units = [matrix_unit(i, j, shape) for i in range(f.domain) for j in range(g.domain)
             if f(i) == g(j)]
    return TRO(shape, np.array(units), tol)


def pullback_graph(k: Graph, f: VertexMap) -> Graph:
    """
    The graph on [f.domain] with x ∼ y iff x ≠ y and f(x) ≃ f(y).

    Examples:
        >>> sorted(pullback_graph(Graph.empty(2), VertexMap(3, 2, (0, 0, 1))).edges)
        [(0, 1)]
    """
    if f.codomain != k.n:
        message = f'Vertex map codomain [{f.codomain}] does not match a graph on {k.n} vertices.'
        logger.error(message)
        raise InputError(message)
    return Graph.from_edges(f.domain, [(x, y) for x, y in combinations(range(f.domain), 2)
                                       if k.sim(f(x), f(y))])


def synthesize_graph_tro(w: PullbackWitness, tol: Tolerance = Tolerance()) -> TRO:
    """
    Pattern TRO M ⊆ M_{|H|,|G|} implementing S_G ∼TRO S_H.

    G and H are rebuilt from the witness as pullbacks of its quotients. Rows
    (vertices of H) are labelled by their twin class, columns (vertices of
    G) by the image of their twin class under the quotient isomorphism.

    Raises:
        PreconditionError: If the witness or the resulting equivalence fails
            verification.
    """
    g = pullback_graph(w.quotient_g, w.map_g)
    h = pullback_graph(w.quotient_h, w.map_f)
    if not w.verify(g, h):
        message = 'Pullback witness does not verify.'
        logger.error(message)
        raise PreconditionError(message, 'witness')
    m = pattern_tro(w.map_f, w.map_g.then(w.iso), tol)
    report = verify_tro_equivalence(graph_system(g, tol), graph_system(h, tol), m)
    if not report.passed:
        message = f'Synthesized TRO fails the equivalence check: {report.failures()}.'
        logger.error(message)
        raise PreconditionError(message, 'tro_equivalence', report.worst_residual)
    return m


def homomorphism_kraus(g: Graph, h: Graph, f: VertexMap) -> KrausFamily:
    """
    Kraus operator A = Σ_x E_{f(x), x} of the cohomomorphism S_{H̄} -> S_{Ḡ}
    induced by a graph homomorphism f: G -> H.

    Raises:
        PreconditionError: If `f` is not a graph homomorphism.
    """
    if f.domain != g.n or f.codomain != h.n:
        message = f'Vertex map shape [{f.domain}]->[{f.codomain}] does not fit the graphs.'
        logger.error(message)
        raise InputError(message)
    bad = [(x, y) for x, y in sorted(g.edges) if not h.adjacent(f(x), f(y))]
    if bad:
        message = f'Map is not a graph homomorphism; edge {bad[0]} is not preserved.'
        logger.error(message)
        raise PreconditionError(message, 'homomorphism')
    a = np.zeros((h.n, g.n), dtype=np.complex128)
    for x in range(g.n):
        a[f(x), x] = 1
    return KrausFamily([a])
#endregion


#region environments and bimodules
@dataclass
class Embedding:
    """Components of H (vertex lists) whose union is Δ-equivalent to G."""
    components: list[list[int]]
    witness: PullbackWitness

    def to_json(self) -> dict:
        return {'components': self.components, 'witness': self.witness.to_json()}


@dataclass
class NotEmbeddable:
    subsets_tried: int

    def to_json(self) -> dict:
        return {'subsets_tried': self.subsets_tried}


def graph_env_embedding(g: Graph, h: Graph) -> Embedding | NotEmbeddable:
    """
    Finds connected components of `h` whose union is Δ-equivalent to `g`.

    Twin quotients keep the number of connected components, so only unions
    of exactly that many components are tried.

    Raises:
        LimitExceededError: If the number of candidate unions exceeds the
            search budget.
    """
    components = h.connected_components()
    needed = len(g.connected_components())
    total = math.comb(len(components), needed) if needed <= len(components) else 0
    if total > config.CANON_NODE_BUDGET:
        message = f'{total} component unions exceed the search budget.'
        logger.error(message)
        raise LimitExceededError(message)

    tried = 0
    for chosen in combinations(range(len(components)), needed):
        tried += 1
        vertices = sorted(v for c in chosen for v in components[c])
        verdict = decide_delta_graphs(g, h.induced_subgraph(vertices))
        if isinstance(verdict, PullbackWitness):
            return Embedding([components[c] for c in chosen], verdict)
    return NotEmbeddable(tried)


def twin_block_pairs(g: Graph) -> list[tuple[int, int]]:
    """Pairs (a, b) of twin classes with a ≃ b in the quotient."""
    q, _ = twin_quotient(g)
    return [(a, b) for a in range(q.n) for b in range(q.n) if q.sim(a, b)]


def twin_block_bimodule(g: Graph, pairs: Iterable[tuple[int, int]],
                        tol: Tolerance = Tolerance()) -> MatSubspace:
    """
    Span of the full twin-class blocks X_a × X_b for the given pairs; these
    are exactly the bimodules over the multiplier algebra inside S_G.
    """
    classes = twin_classes(g)
    n = g.n
    units = [matrix_unit(i, j, (n, n)) for a, b in pairs
             for i in classes[a] for j in classes[b]]
    return orthonormal_basis(units, tol, (n, n))


def witness_bundle(w: PullbackWitness, m: TRO) -> dict:
    """Witness JSON together with the serialized TRO."""
    return {**w.to_json(), 'tro': subspace_to_json(m)}
#endregion
