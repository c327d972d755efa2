import numpy as np
import pytest
from corpus import full_corpus, pair_corpus

from gnngrammar import cfg
from gnngrammar import graph as G
from gnngrammar import matlang as ml
from gnngrammar.matlang import A, I, J, ONE, Diag, Shape


class TestPresets:
    def test_rgl1(self):
        g = cfg.preset("rgl1")
        assert g.variables == ("V_c",)
        assert g.num_productions() == 3
        assert g.to_text() == "V_c → diag(V_c)V_c | AV_c | 𝟙"

    def test_rgl3(self):
        g = cfg.preset("rgl3")
        assert set(g.variables) == {"V_c", "M"}
        assert [r.text() for r in g.productions["V_c"]] == ["MV_c", "𝟙"]
        assert [r.text() for r in g.productions["M"]] == ["(M⊙M)", "MM", "diag(V_c)", "A"]

    def test_ppgn(self):
        g = cfg.preset("ppgn")
        assert g.variables == ("M",)
        assert g.num_productions() == 5

    def test_gnnml1(self):
        assert cfg.preset("gnnml1").to_text() == "V_c → V_c⊙V_c | AV_c | 𝟙"

    def test_full_grammars(self):
        assert cfg.preset("gl1_full").num_productions() == 15
        assert cfg.preset("gl3_full").num_productions() == 19
        assert cfg.preset("gl1_full").start == "S"

    def test_gcn_support_value(self):
        g = G.erdos_renyi(7, 0.5, 3)
        Ah = g.adj + np.eye(7)
        d = Ah.sum(axis=1)
        want = Ah / np.sqrt(np.outer(d, d))
        np.testing.assert_allclose(ml.evaluate(cfg.GCN_SUPPORT, g).matrix(), want, atol=1e-12)
        assert cfg.preset("gcn").to_text() == "V_c → CV_c | 𝟙"

    def test_support_mpnn(self):
        gram = cfg.support_mpnn({"A": A, "L": (A @ A) * I - A})
        sents = cfg.enumerate_sentences(gram, 2)
        assert list(sents) == [ONE, A @ ONE, ((A @ A) * I - A) @ ONE]
        with pytest.raises(ValueError):
            cfg.support_mpnn({"v": A @ ONE})

    def test_unknown(self):
        with pytest.raises(ValueError):
            cfg.preset("gin")

    def test_invariants_checked(self):
        with pytest.raises(ValueError):
            cfg.Grammar("bad", ("V",), frozenset(), {}, "S")
        with pytest.raises(ValueError):
            cfg.Grammar("bad", ("V",), frozenset(), {"V": (cfg.Production("V", ("X",), lambda: ONE),)}, "V")


class TestEnumerate:
    def test_rgl1_depth1(self):
        assert list(cfg.enumerate_sentences(cfg.preset("rgl1"), 1)) == [ONE]

    def test_rgl1_depth3_contains(self):
        s = cfg.enumerate_sentences(cfg.preset("rgl1"), 3)
        assert A @ (A @ ONE) in s
        assert Diag(ONE) @ ONE in s
        assert len(s) == 13

    def test_order_is_height_then_rule(self):
        s = cfg.enumerate_sentences(cfg.preset("rgl1"), 2)
        assert list(s) == [ONE, Diag(ONE) @ ONE, A @ ONE]
        assert s.heights == [1, 2, 2]

    def test_heights_sorted(self):
        s = cfg.enumerate_sentences(cfg.preset("rgl3"), 4)
        assert s.heights == sorted(s.heights)
        assert len(s) == 316

    def test_figure_sentence_height(self):
        # 1ᵀ A diag(A1) 1 needs five levels: S, V_r, V_r→V_r M, V_c→M V_c inside diag, A and 𝟙
        fig = ONE.T @ A @ Diag(A @ ONE) @ ONE
        assert fig not in cfg.enumerate_sentences(cfg.preset("gl1_full"), 4)
        assert fig in cfg.enumerate_sentences(cfg.preset("gl1_full"), 5, limit=10**6)

    def test_limit_truncates_prefix(self):
        full = cfg.enumerate_sentences(cfg.preset("rgl1"), 4)
        cut = cfg.enumerate_sentences(cfg.preset("rgl1"), 4, limit=50)
        assert cut.truncated and not full.truncated
        assert list(cut) == list(full)[:50]

    def test_deterministic(self):
        a = cfg.enumerate_sentences(cfg.preset("gl3_full"), 4).to_lines()
        b = cfg.enumerate_sentences(cfg.preset("gl3_full"), 4).to_lines()
        assert a == b

    def test_no_duplicates(self):
        s = cfg.enumerate_sentences(cfg.preset("rgl3"), 4)
        assert len(set(s.sentences)) == len(s)

    def test_invalid(self):
        with pytest.raises(ValueError):
            cfg.enumerate_sentences(cfg.preset("rgl1"), 0)

    def test_start_never_reached(self):
        assert len(cfg.enumerate_sentences(cfg.preset("gl1_full"), 2)) == 0

    @pytest.mark.parametrize("name, depth", [("rgl1", 5), ("gl1_full", 4), ("gcn", 5), ("gnnml1", 4),
                                             ("rgl3", 4), ("gl3_full", 4), ("ppgn", 3)])
    def test_every_sentence_well_shaped(self, name, depth):
        gram = cfg.preset(name)
        want = {"V_c": Shape.COLVEC, "S": Shape.SCALAR, "M": Shape.MATRIX}[gram.start]
        for e in cfg.enumerate_sentences(gram, depth, limit=20000):
            assert ml.infer_shape(e) is want

    def test_sentence_lines_parse_back(self):
        s = cfg.enumerate_sentences(cfg.preset("gl3_full"), 4)
        assert [ml.parse_expr(t) for t in s.to_lines()] == list(s)


class TestFingerprint:
    def test_ones(self):
        np.testing.assert_array_equal(cfg.fingerprint(G.complete(3), [ONE]), [1, 1, 1])

    def test_sorted_degrees(self):
        np.testing.assert_array_equal(cfg.fingerprint(G.path(3), [A @ ONE]), [1, 1, 2])

    def test_triangle_sentence(self):
        e = (A * (A @ A)) @ ONE
        np.testing.assert_array_equal(cfg.fingerprint(G.cycle(6), [e]), np.zeros(6))
        np.testing.assert_array_equal(cfg.fingerprint(G.builtin("two_triangles"), [e]), np.full(6, 2.0))

    def test_scalar_and_concatenation(self):
        fp = cfg.fingerprint(G.complete(3), [ml.trace(A @ A @ A), A @ ONE])
        np.testing.assert_array_equal(fp, [6, 2, 2, 2])

    def test_matrix_rejected(self):
        with pytest.raises(ValueError):
            cfg.fingerprint(G.cycle(4), [A])


class TestDistinguish:
    def test_isomorphic(self):
        g = G.complete(3)
        v = cfg.distinguish_by_sentences(g, g.relabel([2, 0, 1]), cfg.preset("rgl3"), 4)
        assert not v.distinguished and v.checked == 316

    def test_exp_pair_rgl1(self):
        g1, g2 = G.builtin_pair("exppair")
        assert not cfg.distinguish_by_sentences(g1, g2, cfg.preset("rgl1"), 5).distinguished

    def test_exp_pair_rgl3(self):
        g1, g2 = G.builtin_pair("exppair")
        assert not cfg.distinguish_by_sentences(g1, g2, cfg.preset("rgl3"), 3).distinguished
        v = cfg.distinguish_by_sentences(g1, g2, cfg.preset("rgl3"), 4)
        assert v.distinguished
        assert any(isinstance(n, ml.Hadamard) for n in _nodes(v.witness))

    def test_size_mismatch(self):
        v = cfg.distinguish_by_sentences(G.cycle(4), G.cycle(5), cfg.preset("rgl1"), 1)
        assert v.distinguished and v.witness is None

    def test_verdict_json(self):
        g1, g2 = G.builtin_pair("exppair")
        d = cfg.distinguish_by_sentences(g1, g2, cfg.preset("rgl3"), 4).to_dict()
        assert d["distinguished"] and ml.parse_expr(d["witness"])

    def test_monotone_in_depth(self):
        for _, g1, g2 in full_corpus():
            seen = False
            for depth in range(1, 5):
                now = cfg.distinguish_by_sentences(g1, g2, cfg.preset("rgl3"), depth).distinguished
                assert now or not seen
                seen = now


class TestReductionFaithfulness:
    """Reduced and full grammars agree on a fixed pair corpus.

    The full grammars start at S and spend one extra level on (V_r)(V_c), so a
    reduced budget d is matched with full budget d + 1.
    """

    @pytest.fixture(scope="class")
    @classmethod
    def sentence_sets(cls):
        return {
            "rgl1": cfg.enumerate_sentences(cfg.preset("rgl1"), 4),
            "gl1_full": cfg.enumerate_sentences(cfg.preset("gl1_full"), 5, limit=10**6),
            "rgl3": cfg.enumerate_sentences(cfg.preset("rgl3"), 4),
            "gl3_full": cfg.enumerate_sentences(cfg.preset("gl3_full"), 5, limit=20000),
        }

    @pytest.mark.slow
    @pytest.mark.parametrize("reduced, full", [("rgl1", "gl1_full"), ("rgl3", "gl3_full")])
    def test_same_verdicts(self, sentence_sets, reduced, full):
        corpus = pair_corpus()
        assert len(corpus) == 20
        for name, g1, g2 in corpus:
            a = cfg.distinguish_by_sentences(g1, g2, None, 0, sentences=sentence_sets[reduced]).distinguished
            b = cfg.distinguish_by_sentences(g1, g2, None, 0, sentences=sentence_sets[full]).distinguished
            assert a == b, name


def _nodes(e):
    out = [e]
    for c in e.children():
        out.extend(_nodes(c))
    return out
