import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnngrammar import graph as G
from gnngrammar import matlang as ml
from gnngrammar import spectral as S


def random_symmetric(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    return M + M.T


class TestLaplacian:
    def test_k2(self):
        want = np.array([[1.0, -1.0], [-1.0, 1.0]])
        np.testing.assert_array_equal(S.laplacian(G.complete(2)), want)
        np.testing.assert_allclose(S.laplacian(G.complete(2), normalized=True), want, atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_direct_formulas(self, seed):
        g = G.erdos_renyi(10, 0.5, seed)
        A = g.adj
        d = A.sum(axis=1)
        np.testing.assert_array_equal(S.laplacian(g), np.diag(d) - A)
        inv = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
        np.testing.assert_allclose(S.laplacian(g, True), np.eye(10) - inv[:, None] * A * inv[None, :], atol=1e-14)

    def test_isolated_node(self):
        g = G.Graph(3, np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]))
        L = S.laplacian(g, normalized=True)
        assert L[2, 2] == 1.0 and not np.any(L[2, :2])

    def test_cycle4_spectra(self):
        np.testing.assert_allclose(S.decompose_laplacian(G.cycle(4), False).lambdas, [0, 2, 2, 4], atol=1e-12)
        np.testing.assert_allclose(S.decompose_laplacian(G.cycle(4)).lambdas, [0, 1, 1, 2], atol=1e-12)


class TestEigSym:
    def test_diagonal(self):
        d = S.eig_sym(np.diag([3.0, 1.0]))
        np.testing.assert_array_equal(d.lambdas, [1.0, 3.0])
        np.testing.assert_array_equal(np.abs(d.U), [[0, 1], [1, 0]])

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            S.eig_sym(np.array([[0.0, 1.0], [0.0, 0.0]]))
        with pytest.raises(ValueError):
            S.eig_sym(np.zeros((2, 3)))

    def test_sweep_budget(self):
        with pytest.raises(S.ConvergenceError):
            S.eig_sym(random_symmetric(12, 0), max_sweeps=1)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 25), st.integers(0, 10**6))
    def test_matches_lapack(self, n, seed):
        M = random_symmetric(n, seed)
        d = S.eig_sym(M)
        np.testing.assert_allclose(d.lambdas, np.linalg.eigvalsh(M), atol=1e-9 * max(1, np.abs(M).max()))

    @pytest.mark.parametrize("seed", range(20))
    def test_decomposition_invariants(self, seed):
        rng = np.random.default_rng(seed)
        g = G.erdos_renyi(int(rng.integers(5, 40)), float(rng.uniform(0.1, 0.6)), seed)
        L = S.laplacian(g, normalized=True)
        d = S.eig_sym(L)
        assert np.max(np.abs(d.U.T @ d.U - np.eye(g.n))) < 1e-8
        assert np.max(np.abs(d.reconstruct() - L)) < 1e-8
        assert np.all(np.diff(d.lambdas) >= 0)
        assert d.lambdas[0] >= -1e-9 and d.lambdas[-1] <= 2 + 1e-9


class TestResponse:
    @pytest.fixture(scope="class")
    @classmethod
    def grid8(cls):
        g = G.grid(8, 8)
        return g, S.decompose_laplacian(g)

    @pytest.mark.parametrize("k", range(6))
    def test_powers(self, grid8, k):
        g, d = grid8
        Lk = ml.evaluate(S.polynomial_expr(S.NORMALIZED_LAPLACIAN, [0.0] * k + [1.0]), g).matrix()
        np.testing.assert_allclose(S.spectral_response(Lk, d), d.lambdas**k, atol=1e-8)

    def test_linearity(self, grid8):
        g, d = grid8
        rng = np.random.default_rng(1)
        C1, C2 = random_symmetric(64, 2), random_symmetric(64, 3)
        a, b = rng.normal(size=2)
        np.testing.assert_allclose(
            S.spectral_response(a * C1 + b * C2, d),
            a * S.spectral_response(C1, d) + b * S.spectral_response(C2, d),
            atol=1e-10,
        )

    def test_size_check(self, grid8):
        with pytest.raises(ValueError):
            S.spectral_response(np.eye(3), grid8[1])

    def test_chebyshev_matches_monomial(self):
        g = G.erdos_renyi(12, 0.4, 0)
        cheb = np.array([0.3, -1.2, 0.5, 0.25])
        mono = np.polynomial.Chebyshev(cheb, domain=[0, 2]).convert(kind=np.polynomial.Polynomial).coef
        a = ml.evaluate(S.chebyshev_expr(S.NORMALIZED_LAPLACIAN, cheb), g).matrix()
        b = ml.evaluate(S.polynomial_expr(S.NORMALIZED_LAPLACIAN, mono), g).matrix()
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestFilters:
    def test_shapes(self):
        x = np.linspace(0, 2, 5)
        np.testing.assert_allclose(S.get_filter("lowpass")(x) + S.get_filter("highpass")(x), 1.0)
        assert S.get_filter("bandpass")(1.0) == 1.0
        with pytest.raises(ValueError):
            S.get_filter("notch")

    def test_tabulated(self):
        f = S.FilterSpec.tabulated([2.0, 0.0], [1.0, 0.0])
        np.testing.assert_allclose(f([0.0, 0.5, 2.0, 3.0]), [0.0, 0.25, 1.0, 1.0])
        with pytest.raises(ValueError):
            S.FilterSpec.tabulated([0.0], [1.0, 2.0])

    def test_r_squared(self):
        y = np.array([1.0, 2.0, 3.0])
        assert S.r_squared(y, y) == 1.0
        assert S.r_squared(y, np.full(3, 2.0)) == 0.0


class TestFit:
    def test_identity_filter(self):
        g = G.erdos_renyi(15, 0.4, 5)
        fit = S.fit_filter(g, S.FilterSpec("identity", lambda x: x), 1)
        np.testing.assert_allclose(fit.coefficients, [0.0, 1.0], atol=1e-9)
        assert abs(fit.r2 - 1.0) < 1e-9

    def test_matrix_is_polynomial_in_laplacian(self):
        g = G.erdos_renyi(10, 0.5, 1)
        fit = S.fit_filter(g, "lowpass", 4)
        L = S.laplacian(g, normalized=True)
        want = sum(c * np.linalg.matrix_power(L, k) for k, c in enumerate(fit.coefficients))
        np.testing.assert_allclose(fit.matrix, want, atol=1e-9)

    def test_rank_deficient_flag(self):
        g = G.cycle(4)  # three distinct eigenvalues
        assert not S.fit_filter(g, "lowpass", 2).rank_deficient
        assert S.fit_filter(g, "lowpass", 3).rank_deficient

    def test_json_and_table(self):
        fit = S.fit_filter(G.cycle(5), "highpass", 2)
        assert set(fit.to_dict()) == {"filter", "degree", "coefficients", "r2", "rank_deficient"}
        assert fit.table().shape == (5, 3)

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            S.fit_filter(G.cycle(5), "lowpass", -1)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["lowpass", "highpass"])
    def test_grid_smooth_filters(self, grid30, name):
        g, d, _ = grid30
        assert S.fit_filter(g, name, 10, decomp=d).r2 >= 0.99

    @pytest.mark.slow
    def test_grid_bandpass(self, grid30):
        g, d, _ = grid30
        assert S.fit_filter(g, "bandpass", 20, decomp=d).r2 >= 0.8

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["lowpass", "highpass", "bandpass"])
    def test_r2_monotone_in_degree(self, grid30, name):
        g, d, _ = grid30
        r2 = [S.fit_filter(g, name, k, decomp=d).r2 for k in range(0, 21)]
        assert np.all(np.diff(r2) >= -1e-12)
