import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnngrammar import counting as C
from gnngrammar import graph as G
from gnngrammar import matlang as ml
from gnngrammar.counting import CountKind


def perm_paths(g, l):
    """Every ordered sequence of l+1 distinct nodes joined by edges, halved for direction."""
    total = 0
    for seq in itertools.permutations(range(g.n), l + 1):
        if all(g.adj[a, b] for a, b in zip(seq, seq[1:])):
            total += 1
    return total // 2


def perm_cycles(g, l):
    total = 0
    for seq in itertools.permutations(range(g.n), l):
        if all(g.adj[a, b] for a, b in zip(seq, seq[1:] + seq[:1])):
            total += 1
    return total // (2 * l)


def subset_chordal(g):
    # counted as subgraphs, not induced: a 4-set with 5 edges hosts one, a K4 hosts six
    per_edges = {5: 1, 6: 6}
    return sum(
        per_edges.get(int(sum(g.adj[a, b] for a, b in itertools.combinations(s, 2))), 0)
        for s in itertools.combinations(range(g.n), 4)
    )


small_graphs = st.builds(lambda n, p, s: G.erdos_renyi(n, p, s),
                         st.integers(4, 7), st.sampled_from([0.3, 0.5, 0.7]), st.integers(0, 10**6))


class TestCountKind:
    def test_parse(self):
        assert CountKind.parse("path3") == CountKind("path", 3)
        assert CountKind.parse("Cycle4") == CountKind("cycle", 4)
        assert CountKind.parse("chordal").name == "chordal"

    @pytest.mark.parametrize("text", ["path1", "path6", "cycle2", "cycle7", "star3", ""])
    def test_out_of_range(self, text):
        with pytest.raises(ValueError):
            CountKind.parse(text)

    def test_conversion_constants(self):
        assert CountKind("cycle", 5).edge_to_node == 2
        assert CountKind("cycle", 5).node_to_graph == 5
        assert CountKind("path", 4).node_to_graph == 2
        assert CountKind("chordal").edge_to_node == 1

    def test_all_kinds(self):
        assert [k.name for k in C.ALL_KINDS] == [
            "path2", "path3", "path4", "path5", "cycle3", "cycle4", "cycle5", "cycle6", "chordal"]


class TestExamples:
    def test_cycle4_graph_level(self):
        assert C.graph_level("cycle4", G.cycle(4)) == 1

    def test_cycle4_edge_matrix(self):
        np.testing.assert_array_equal(C.cycle_edge(G.cycle(4), 4), G.cycle(4).adj)

    def test_triangle_edges(self):
        np.testing.assert_array_equal(C.cycle_edge(G.complete(3), 3), G.complete(3).adj)

    def test_k3_paths(self):
        # the three Hamiltonian paths of K3 have two edges each
        assert C.graph_level("path2", G.complete(3)) == 3
        assert C.graph_level("path3", G.complete(3)) == 0

    def test_path3_tips(self):
        np.testing.assert_array_equal(C.node_level("path2", G.path(3)), [1, 0, 1])

    def test_diamond_chordal(self):
        assert C.graph_level("chordal", G.builtin("diamond")) == 1
        e = C.chordal_edge(G.builtin("diamond"))
        # the chord of the diamond joins the two degree-3 nodes
        assert e[0, 1] == e[1, 0] == 1 and e.sum() == 2

    def test_k4(self):
        k4 = G.complete(4)
        assert C.graph_level("cycle3", k4) == 4
        assert C.graph_level("cycle4", k4) == 3
        assert C.graph_level("path3", k4) == 12
        assert C.graph_level("chordal", k4) == 6

    def test_path_matrix_symmetric(self):
        m = C.path_matrix(G.erdos_renyi(8, 0.5, 2), 4)
        np.testing.assert_array_equal(m, m.T)
        assert np.all(np.diag(m) == 0)

    def test_result_json(self):
        d = C.count("cycle3", "graph", G.complete(4)).to_dict()
        assert d == {"kind": "cycle3", "level": "graph", "value": 4}
        assert "vector" in C.count("cycle3", "node", G.complete(4)).to_dict()

    def test_bad_level(self):
        with pytest.raises(ValueError):
            C.count("cycle3", "pair", G.cycle(3))

    def test_oracle_size_limit(self):
        with pytest.raises(ValueError):
            C.oracle_count("cycle3", "graph", G.cycle(C.ORACLE_MAX_N + 1))


class TestExpressions:
    def test_closed_forms_are_vector_free(self):
        for k in C.ALL_KINDS:
            assert ml.infer_shape(C.edge_expr(k)) is ml.Shape.MATRIX
            assert ml.infer_shape(C.node_expr(k)) is ml.Shape.COLVEC
            assert ml.infer_shape(C.graph_expr(k)) is ml.Shape.SCALAR

    def test_integrality_guard(self):
        with pytest.raises(C.IntegralityError):
            C._to_int(np.array([0.5]), "x")
        np.testing.assert_array_equal(C._to_int(np.array([2.0 + 1e-9]), "x"), [2])


class TestOracles:
    @settings(max_examples=25, deadline=None)
    @given(small_graphs)
    def test_path_oracle_vs_permutations(self, g):
        for l in range(2, 6):
            assert len(C.enumerate_paths(g, l)) == perm_paths(g, l)

    @settings(max_examples=25, deadline=None)
    @given(small_graphs)
    def test_cycle_oracle_vs_permutations(self, g):
        for l in range(3, 7):
            assert len(C.enumerate_cycles(g, l)) == perm_cycles(g, l)

    @settings(max_examples=25, deadline=None)
    @given(small_graphs)
    def test_chordal_oracle_vs_subsets(self, g):
        assert len(C.enumerate_chordal(g)) == subset_chordal(g)


class TestFormulas:
    @pytest.mark.parametrize("index", range(50))
    def test_formula_matches_oracle(self, index):
        n, p, s = C.verification_corpus()[index]
        g = G.erdos_renyi(n, p, s)
        assert C.check_graph(g, index) == []

    def test_corpus_shape(self):
        corpus = C.verification_corpus()
        assert len(corpus) == 50
        assert all(6 <= n <= 12 for n, _, _ in corpus)
        assert {p for _, p, _ in corpus} == {0.3, 0.5}

    @settings(max_examples=40, deadline=None)
    @given(small_graphs)
    def test_formula_matches_permutation_count(self, g):
        for l in range(2, 6):
            assert C.graph_level(CountKind("path", l), g) == perm_paths(g, l)
        for l in range(3, 7):
            assert C.graph_level(CountKind("cycle", l), g) == perm_cycles(g, l)
        assert C.graph_level("chordal", g) == subset_chordal(g)

    @pytest.mark.parametrize("seed", range(5))
    def test_relabel_invariance(self, seed):
        g = G.erdos_renyi(9, 0.5, seed)
        perm = np.random.default_rng(seed).permutation(9)
        h = g.relabel(perm)
        for k in C.ALL_KINDS:
            assert C.graph_level(k, g) == C.graph_level(k, h)
            np.testing.assert_array_equal(C.node_level(k, h)[perm], C.node_level(k, g))
            eh = C.count(k, "edge", h).data
            np.testing.assert_array_equal(eh[np.ix_(perm, perm)], C.count(k, "edge", g).data)

    @pytest.mark.parametrize("g", [G.cycle(6), G.cycle(8), G.grid(3, 3), G.path(7)], ids=str)
    def test_triangle_free(self, g):
        for level in C.LEVELS:
            assert not np.any(C.count("cycle3", level, g).data)
            assert not np.any(C.count("chordal", level, g).data)
