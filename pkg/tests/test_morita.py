from itertools import combinations

import numpy as np
import pytest

from matcore import (Tolerance, orthonormal_basis, scalars, full_matrices, diagonal_matrices,
                     adjoint_space, intersection, matrix_unit, span_equal, zero_space)
from tro import TRO
from funcsys import toeplitz_system, amplification_tro
from morita import (gram_space, Representation, identity_representation, random_representation,
                    induce_rep, roundtrip_unitary, identity_collapse, transport_intertwiner,
                    check_bimodule, transport_bimodule)
from ncgraph import (Graph, VertexMap, PullbackWitness, graph_system, decide_delta_graphs,
                     synthesize_graph_tro, enumerate_graphs, pullback_graph, twin_block_pairs,
                     twin_block_bimodule)
from utils import InputError, PreconditionError, DimensionMismatchError


@pytest.fixture
def column():
    return TRO.from_space(orthonormal_basis([[[1], [0]], [[0], [1]]]))


def test_gram_space_quotients_the_kernel():
    g = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    space = gram_space(g, [(0, 0), (1, 0), (2, 0)], Tolerance())
    assert space.rank == 2
    np.testing.assert_allclose(space.coords @ space.lift, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(space.coords.conj().T @ space.coords, g, atol=1e-10)


def test_gram_space_rejects_indefinite_matrices():
    with pytest.raises(PreconditionError):
        gram_space(np.diag([1.0, -1.0]), [(0, 0), (1, 0)], Tolerance())


def test_representations_validate():
    assert identity_representation(toeplitz_system(3)).validate().passed
    rep = random_representation(diagonal_matrices(2), seed=3, copies=3)
    assert rep.hilbert_dim == 6
    assert rep.validate().passed


def test_random_representation_requires_copies():
    with pytest.raises(InputError):
        random_representation(scalars(1), copies=0)


def test_strict_apply_rejects_elements_outside_the_system():
    rep = identity_representation(diagonal_matrices(2))
    with pytest.raises(PreconditionError) as info:
        rep.apply(matrix_unit(0, 1, (2, 2)), strict=True)
    assert info.value.condition == 'in_system'


def test_representation_json_round_trip():
    rep = random_representation(diagonal_matrices(2), seed=3)
    again = Representation.from_json(rep.to_json())
    for b in diagonal_matrices(2).basis:
        np.testing.assert_allclose(again.apply(b), rep.apply(b), atol=1e-10)


def test_induce_identity_through_column(column):
    induced = induce_rep(column, identity_representation(scalars(1)))
    assert induced.hilbert_dim == 2
    assert induced.system.dim == 4
    assert induced.validate().passed
    w, residual = identity_collapse(column, induced)
    assert residual < 1e-8
    np.testing.assert_allclose(w.conj().T @ w, np.eye(2), atol=1e-8)


def test_identity_collapse_requires_identity_induction(column):
    induced = induce_rep(column, random_representation(scalars(1), copies=2))
    with pytest.raises(PreconditionError):
        identity_collapse(column, induced)


def test_induce_rejects_carrier_of_wrong_width(column):
    with pytest.raises(DimensionMismatchError):
        induce_rep(column, identity_representation(diagonal_matrices(2)))


def test_roundtrip_through_column(column):
    u, residual = roundtrip_unitary(column, identity_representation(scalars(1)))
    assert u.shape == (1, 1)
    assert residual < 1e-8


@pytest.mark.parametrize('seed', [0, 1])
def test_roundtrip_of_random_toeplitz_representation(seed):
    s = toeplitz_system(3)
    rep = random_representation(s, seed=seed, copies=2)
    u, residual = roundtrip_unitary(amplification_tro(3, 2), rep)
    assert u.shape == (6, 6)
    assert residual < 1e-8


def test_roundtrip_through_graph_pattern_tro():
    g, h = Graph.complete(2), Graph.complete(3)
    m = synthesize_graph_tro(decide_delta_graphs(g, h))
    u, residual = roundtrip_unitary(m, identity_representation(graph_system(g)))
    assert residual < 1e-8


def test_transport_intertwiner(column):
    rep1 = identity_representation(scalars(1))
    rep2 = random_representation(scalars(1), seed=2, copies=2)
    op = np.array([[1.0], [0.0]])
    moved = transport_intertwiner(column, op, rep1, rep2)
    assert moved.shape == (4, 2)
    np.testing.assert_allclose(moved.conj().T @ moved, np.eye(2), atol=1e-8)


def test_transport_intertwiner_requires_an_intertwiner(column):
    rep = identity_representation(diagonal_matrices(2))
    with pytest.raises(PreconditionError) as info:
        transport_intertwiner(column, matrix_unit(0, 1, (2, 2)), rep, rep)
    assert info.value.condition == 'intertwiner'


def test_transport_bimodule_of_pattern_tro():
    g, h = Graph.complete(2), Graph.complete(3)
    m = synthesize_graph_tro(decide_delta_graphs(g, h))
    s = graph_system(g)
    assert span_equal(transport_bimodule(m, s, s), full_matrices(3))[0]
    assert transport_bimodule(m, zero_space((2, 2)), s).dim == 0


def test_transport_bimodule_requires_a_bimodule():
    s = full_matrices(2)
    j = orthonormal_basis([matrix_unit(0, 1, (2, 2))])
    assert not check_bimodule(j, s)[0]
    with pytest.raises(PreconditionError):
        transport_bimodule(amplification_tro(2, 1), j, s)


def test_bimodule_lattice_is_transported():
    h = Graph.path(3)
    g = pullback_graph(h, VertexMap(4, 3, (0, 1, 1, 2)))
    m = synthesize_graph_tro(decide_delta_graphs(g, h))
    s, t = graph_system(g), graph_system(h)
    j1 = twin_block_bimodule(g, [(0, 1), (1, 0), (1, 1)])
    j2 = twin_block_bimodule(g, [(1, 1), (2, 2)])

    moved = transport_bimodule(m, j1, s)
    assert check_bimodule(moved, t)[0]
    back = transport_bimodule(adjoint_space(m), moved, t)
    assert span_equal(back, j1)[0]

    meet = transport_bimodule(m, intersection(j1, j2), s)
    assert span_equal(meet, intersection(moved, transport_bimodule(m, j2, s)))[0]


def graph_witnesses(n: int):
    graphs = [g for k in range(1, n + 1) for g in enumerate_graphs(k)]
    for g in graphs:
        for h in graphs:
            w = decide_delta_graphs(g, h)
            if isinstance(w, PullbackWitness):
                yield g, synthesize_graph_tro(w)


@pytest.mark.parametrize('n', [3, pytest.param(4, marks=pytest.mark.slow)])
def test_roundtrip_through_every_graph_witness(n):
    for g, m in graph_witnesses(n):
        u, residual = roundtrip_unitary(m, identity_representation(graph_system(g)))
        assert residual < 1e-8
        np.testing.assert_allclose(u.conj().T @ u, np.eye(g.n), atol=1e-8)


@pytest.mark.parametrize('g, h', [
    (Graph.path(3), pullback_graph(Graph.path(3), VertexMap(4, 3, (0, 1, 1, 2)))),
    (Graph.complete(2).disjoint_union(Graph.empty(1)), Graph.empty(2)),
])
@pytest.mark.parametrize('seed', [s if s < 5 else pytest.param(s, marks=pytest.mark.slow)
                                  for s in range(50)])
def test_roundtrip_of_random_graph_representations(g, h, seed):
    m = synthesize_graph_tro(decide_delta_graphs(g, h))
    rep = random_representation(graph_system(g), seed=seed, copies=2)
    u, residual = roundtrip_unitary(m, rep)
    assert u.shape == (2 * g.n, 2 * g.n)
    assert residual < 1e-8


def blown_up(g: Graph) -> Graph:
    """G with vertex 0 doubled into a pair of twins."""
    return pullback_graph(g, VertexMap(g.n + 1, g.n, (*range(g.n), 0)))


@pytest.mark.parametrize('n', [1, 2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_every_twin_block_bimodule_is_transported(n):
    for g in enumerate_graphs(n):
        h = blown_up(g)
        m = synthesize_graph_tro(decide_delta_graphs(g, h))
        s, t = graph_system(g), graph_system(h)
        pairs = twin_block_pairs(g)
        subsets = [c for k in range(len(pairs) + 1) for c in combinations(pairs, k)]
        if len(subsets) > 1024:
            rng = np.random.default_rng(len(pairs))
            subsets = [subsets[i] for i in rng.choice(len(subsets), 1024, replace=False)]
        other = twin_block_bimodule(g, pairs[::2])
        moved_other = transport_bimodule(m, other, s)
        for subset in subsets:
            j = twin_block_bimodule(g, subset)
            moved = transport_bimodule(m, j, s)
            assert check_bimodule(moved, t)[0]
            assert span_equal(transport_bimodule(adjoint_space(m), moved, t), j)[0]
            meet = transport_bimodule(m, intersection(j, other), s)
            assert span_equal(meet, intersection(moved, moved_other))[0]
