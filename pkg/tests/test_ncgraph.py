import numpy as np
import pytest

import config
from matcore import (operator_system, full_matrices, matrix_unit, span_equal, product_span,
                     adjoint_space)
from ncgraph import (Graph, VertexMap, parse_graph, graph_system, system_graph, twin_classes,
                     twin_quotient, verify_pullback, canonical_form, brute_force_certificate,
                     find_isomorphism, decide_delta_graphs, PullbackWitness, NotEquivalent,
                     brute_force_common_pullback, enumerate_graphs, pattern_tro, pullback_graph,
                     synthesize_graph_tro, homomorphism_kraus, graph_env_embedding, Embedding,
                     NotEmbeddable, twin_block_pairs, twin_block_bimodule, witness_bundle,
                     brute_force_pullback_targets)
from cstar import multiplier_algebra
from tro import (verify_tro_equivalence, verify_tro, verify_cohomomorphism, build_delta_context,
                 build_bihom_context, verify_delta_context, verify_bihom_context, factorization_maps)
from morita import check_bimodule
from utils import InputError, NotAGraphSystemError, PreconditionError, LimitExceededError


def relabelled(g: Graph, perm: list[int]) -> Graph:
    return Graph.from_edges(g.n, [(perm[i], perm[j]) for i, j in g.edges])


def test_graph_construction_and_validation():
    assert len(Graph.complete(4).edges) == 6
    assert Graph.cycle(5).complement() == relabelled(Graph.cycle(5), [0, 2, 4, 1, 3])
    with pytest.raises(InputError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(InputError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(LimitExceededError):
        Graph.empty(config.MAX_VERTICES + 1)


def test_parse_graph_json_and_edge_list():
    assert parse_graph('{"vertices": 3, "edges": [[0, 1], [1, 2]]}') == Graph.path(3)
    assert parse_graph('3\n0 1\n1 2  # path\n') == Graph.path(3)
    with pytest.raises(InputError):
        parse_graph('3\n0 1 2\n')


def test_components_and_subgraphs():
    g = Graph.path(2).disjoint_union(Graph.complete(3))
    assert g.connected_components() == [[0, 1], [2, 3, 4]]
    assert g.induced_subgraph([2, 3, 4]) == Graph.complete(3)


def test_graph_system_round_trip():
    g = Graph.cycle(5)
    s = graph_system(g)
    assert s.dim == 5 + 2 * 5
    assert system_graph(s) == g


def test_system_graph_rejects_non_graph_systems():
    s = operator_system([np.eye(2), matrix_unit(0, 1, (2, 2)) + matrix_unit(1, 0, (2, 2))])
    with pytest.raises(NotAGraphSystemError):
        system_graph(s)


def test_twin_quotient_of_complete_graph_is_a_point():
    q, f = twin_quotient(Graph.complete(4))
    assert q.n == 1
    assert f.values == (0, 0, 0, 0)
    assert verify_pullback(Graph.complete(4), q, f)


def test_twin_classes_of_path():
    # paths have no twins; a triangle is one class
    assert twin_classes(Graph.path(4)) == [[0], [1], [2], [3]]
    assert twin_classes(Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])) == [[0, 1, 2]]


@pytest.mark.parametrize('g', [Graph.path(5), Graph.cycle(6), Graph.from_edges(
    5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)])])
def test_canonical_form_is_invariant(g):
    perm = [int(v) for v in np.random.default_rng(g.n).permutation(g.n)]
    assert canonical_form(g)[0] == canonical_form(relabelled(g, perm))[0]
    assert brute_force_certificate(g) == brute_force_certificate(relabelled(g, perm))


def test_find_isomorphism():
    g = Graph.path(4)
    h = relabelled(g, [2, 0, 3, 1])
    iso = find_isomorphism(g, h)
    assert iso is not None
    assert all(h.adjacent(iso(x), iso(y)) for x, y in g.edges)
    assert find_isomorphism(Graph.path(4), Graph.cycle(4)) is None


def test_enumerate_graphs_counts():
    assert [len(enumerate_graphs(n)) for n in range(1, 5)] == [1, 2, 4, 11]


def test_decide_complete_graphs_equivalent():
    verdict = decide_delta_graphs(Graph.complete(2), Graph.complete(3))
    assert isinstance(verdict, PullbackWitness)
    assert verdict.quotient_g.n == 1
    assert verdict.verify(Graph.complete(2), Graph.complete(3))


def test_decide_cycles_not_equivalent():
    verdict = decide_delta_graphs(Graph.cycle(5), Graph.cycle(4))
    assert isinstance(verdict, NotEquivalent)
    assert verdict.certificate_g != verdict.certificate_h


def test_decide_blown_up_path():
    # blowing vertex 1 of P3 up into a triangle of twins
    g = Graph.path(3)
    h = pullback_graph(g, VertexMap(5, 3, (0, 1, 1, 1, 2)))
    verdict = decide_delta_graphs(g, h)
    assert isinstance(verdict, PullbackWitness)
    assert verdict.transposed().verify(h, g)


def test_witness_json_round_trip():
    verdict = decide_delta_graphs(Graph.complete(2), Graph.complete(3))
    again = PullbackWitness.from_json(verdict.to_json())
    assert again.verify(Graph.complete(2), Graph.complete(3))


@pytest.mark.parametrize('n', [1, 2, 3])
def test_decision_agrees_with_oracle(n):
    graphs = [g for k in range(1, n + 1) for g in enumerate_graphs(k)]
    for g in graphs:
        for h in graphs:
            decided = isinstance(decide_delta_graphs(g, h), PullbackWitness)
            assert decided == brute_force_common_pullback(g, h, max_target=n)


@pytest.mark.slow
def test_decision_agrees_with_oracle_on_four_vertices():
    graphs = [g for k in range(1, 5) for g in enumerate_graphs(k)]
    for g in graphs:
        for h in graphs:
            decided = isinstance(decide_delta_graphs(g, h), PullbackWitness)
            assert decided == brute_force_common_pullback(g, h, max_target=4)


def test_pattern_tro_is_a_tro():
    m = pattern_tro(VertexMap(3, 2, (0, 0, 1)), VertexMap(2, 2, (1, 0)))
    assert m.ambient == (3, 2)
    assert m.dim == 3
    assert verify_tro(m).passed


def test_pattern_tro_requires_surjective_labels():
    with pytest.raises(PreconditionError):
        pattern_tro(VertexMap(2, 2, (0, 0)), VertexMap(2, 2, (0, 1)))


@pytest.mark.parametrize('g, h', [
    (Graph.complete(2), Graph.complete(3)),
    (Graph.path(3), pullback_graph(Graph.path(3), VertexMap(5, 3, (0, 1, 1, 1, 2)))),
    (Graph.empty(2), Graph.empty(2)),
])
def test_synthesized_tro_implements_the_equivalence(g, h):
    w = decide_delta_graphs(g, h)
    m = synthesize_graph_tro(w)
    assert m.ambient == (h.n, g.n)
    report = verify_tro_equivalence(graph_system(g), graph_system(h), m)
    assert report.passed, report.failures()
    bundle = witness_bundle(w, m)
    assert bundle['tro']['ambient'] == [h.n, g.n]


def test_homomorphism_gives_a_cohomomorphism():
    g, h = Graph.path(2), Graph.complete(3)
    f = VertexMap(2, 3, (0, 1))
    k = homomorphism_kraus(g, h, f)
    report = verify_cohomomorphism(k, graph_system(h.complement()), graph_system(g.complement()))
    assert report.passed, report.failures()


def test_homomorphism_kraus_rejects_non_homomorphisms():
    with pytest.raises(PreconditionError):
        homomorphism_kraus(Graph.path(2), Graph.empty(2), VertexMap(2, 2, (0, 1)))


def test_environment_embedding():
    g = Graph.complete(2)
    h = Graph.path(3).disjoint_union(Graph.complete(4))
    found = graph_env_embedding(g, h)
    assert isinstance(found, Embedding)
    assert found.components == [[3, 4, 5, 6]]
    missing = graph_env_embedding(Graph.cycle(5), h)
    assert isinstance(missing, NotEmbeddable)
    assert missing.subsets_tried == 2


def test_twin_block_bimodules_are_bimodules():
    g = pullback_graph(Graph.path(3), VertexMap(4, 3, (0, 1, 1, 2)))
    s = graph_system(g)
    pairs = twin_block_pairs(g)
    assert len(pairs) == 3 + 2 * 2
    j = twin_block_bimodule(g, [(0, 1), (1, 0)])
    assert j.dim == 4
    assert check_bimodule(j, s)[0]
    assert span_of_all_blocks(g).dim == s.dim


def span_of_all_blocks(g: Graph):
    return twin_block_bimodule(g, twin_block_pairs(g))


def test_full_matrices_are_complete_graph_system():
    assert system_graph(full_matrices(3)) == Graph.complete(3)


def graphs_up_to(n: int) -> list[Graph]:
    return [g for k in range(1, n + 1) for g in enumerate_graphs(k)]


def random_graph(n: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)
                                if rng.random() < 0.5])


def positive_pairs(n: int):
    """Every equivalent pair of graphs on at most n vertices, with its witness."""
    graphs = graphs_up_to(n)
    for g in graphs:
        for h in graphs:
            w = decide_delta_graphs(g, h)
            if isinstance(w, PullbackWitness):
                yield g, h, w


def assert_twin_free_pullback(g: Graph):
    q, f = twin_quotient(g)
    assert verify_pullback(g, q, f)
    assert all(len(c) == 1 for c in twin_classes(q))
    assert q.n == len(twin_classes(g))


@pytest.mark.parametrize('n', [1, 2, 3, 4, 5])
def test_twin_quotient_is_a_twin_free_pullback(n):
    for g in enumerate_graphs(n):
        assert_twin_free_pullback(g)


@pytest.mark.parametrize('seed', range(30))
def test_twin_quotient_of_random_graphs(seed):
    g = random_graph(6 + seed % 3, seed)
    assert_twin_free_pullback(g)
    # blowing a vertex up into twins does not change the quotient
    blown = pullback_graph(g, VertexMap(g.n + 1, g.n, (*range(g.n), 0)))
    assert canonical_form(twin_quotient(blown)[0])[0] == canonical_form(twin_quotient(g)[0])[0]


@pytest.mark.parametrize('n', [3, 4, pytest.param(5, marks=pytest.mark.slow)])
def test_decision_is_symmetric(n):
    graphs = graphs_up_to(n)
    for g in graphs:
        for h in graphs:
            forward, backward = decide_delta_graphs(g, h), decide_delta_graphs(h, g)
            assert type(forward) is type(backward)
            if isinstance(forward, PullbackWitness):
                assert forward.transposed().verify(h, g)
                assert backward.verify(h, g)


@pytest.mark.slow
def test_decision_agrees_with_oracle_on_five_vertices():
    graphs = graphs_up_to(5)
    targets = [brute_force_pullback_targets(g, 5) for g in graphs]
    for i, g in enumerate(graphs):
        for j, h in enumerate(graphs):
            decided = isinstance(decide_delta_graphs(g, h), PullbackWitness)
            assert decided == bool(targets[i] & targets[j])


@pytest.mark.parametrize('n', [3, pytest.param(5, marks=pytest.mark.slow)])
def test_witness_side_algebras_are_the_multiplier_algebras(n):
    for g, h, w in positive_pairs(n):
        m = synthesize_graph_tro(w)
        s, t = graph_system(g), graph_system(h)
        assert span_equal(product_span(adjoint_space(m), m), multiplier_algebra(s))[0]
        assert span_equal(product_span(m, adjoint_space(m)), multiplier_algebra(t))[0]


@pytest.mark.parametrize('g, h', [
    (Graph.complete(2), Graph.complete(3)),
    (Graph.path(3), pullback_graph(Graph.path(3), VertexMap(4, 3, (0, 1, 1, 2)))),
    (Graph.complete(2).disjoint_union(Graph.empty(1)), Graph.empty(2)),
])
def test_graph_witness_contexts(g, h):
    m = synthesize_graph_tro(decide_delta_graphs(g, h))
    s, t = graph_system(g), graph_system(h)
    delta = build_delta_context(s, t, m, level_cap=2, samples=20)
    report = verify_delta_context(delta)
    assert report.passed, report.failures()
    bihom = build_bihom_context(s, t, m, level_cap=2, samples=20)
    report = verify_bihom_context(bihom)
    assert report.passed, report.failures()


@pytest.mark.parametrize('n', [3, pytest.param(4, marks=pytest.mark.slow)])
def test_factorization_through_graph_witnesses(n):
    for g, h, w in positive_pairs(n):
        m = synthesize_graph_tro(w)
        for b in graph_system(g).basis:
            f = factorization_maps(m, b)
            assert f.residual <= 1e-10
            assert f.unit_residual <= 1e-10
