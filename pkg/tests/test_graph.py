import numpy as np
import pytest

from akgnn import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateKernelError,
    DimensionError,
    NumericError,
    build_graph,
    build_kernel,
    dense_kernel,
    filter_weights,
    spectrum,
    unnormalized_kernel,
)
from synthgen import ring_edges

PATH2 = [(0, 1)]  # 2-node path


def scatter_dense(graph, values):
    pat = graph.kernel_pattern
    out = np.zeros((graph.num_nodes, graph.num_nodes))
    out[pat.row_ids, pat.cols] = values
    return out


class TestBuildGraph:
    def test_symmetrize_and_dedup(self):
        g = build_graph(3, [(0, 1), (1, 0), (0, 1), (1, 2)])
        assert g.num_edges == 2
        assert np.array_equal(g.degrees, [1, 2, 1])
        assert np.array_equal(g.row_offsets, [0, 1, 3, 4])
        assert np.array_equal(g.col_indices, [1, 0, 2, 1])

    def test_rejects_out_of_range(self):
        with pytest.raises(DataError, match=r"\(1, 5\) out of range"):
            build_graph(3, [(0, 1), (1, 5)])
        with pytest.raises(DataError, match="out of range"):
            build_graph(3, [(-1, 0)])

    def test_rejects_self_loop(self):
        with pytest.raises(DataError, match=r"self-loop \(2, 2\)"):
            build_graph(3, [(0, 1), (2, 2)])

    def test_rejects_bad_shapes(self):
        with pytest.raises(DataError, match="pairs"):
            build_graph(3, [(0, 1, 2)])
        with pytest.raises(DataError):
            build_graph(0, [])

    def test_empty_edges_allowed(self):
        g = build_graph(2, [])
        assert g.num_edges == 0
        assert np.array_equal(g.degrees, [0, 0])

    def test_kernel_pattern_has_diagonal(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        pat = g.kernel_pattern
        assert pat.cols.shape[0] == 2 * g.num_edges + 4
        assert np.array_equal(pat.cols[pat.diag_slots], np.arange(4))
        assert np.array_equal(pat.row_ids[pat.diag_slots], np.arange(4))
        # columns sorted within each row
        for i in range(4):
            seg = pat.cols[pat.offsets[i]:pat.offsets[i + 1]]
            assert np.array_equal(seg, np.sort(seg))


class TestFilterWeights:
    def test_balanced_at_one(self):
        w = filter_weights(1.0)
        assert w.a == 1.0 and w.b == 1.0 and w.lam_max == 2.0

    def test_low_pass_at_zero_and_below(self):
        for phi in (0.0, -0.5, -100.0):
            w = filter_weights(phi)
            assert w.a == 0.0 and w.b == 2.0 and w.lam_max == 1.0

    def test_known_point(self):
        w = filter_weights(3.0)
        assert w.a == 1.5 and w.b == 0.5 and w.lam_max == 4.0

    def test_nonfinite_rejected(self):
        for phi in (np.nan, np.inf, -np.inf):
            with pytest.raises(NumericError):
                filter_weights(phi)

    def test_sum_exact_everywhere(self):
        rng = np.random.default_rng(0)
        phis = np.concatenate([
            rng.uniform(-10, 10, 5000),
            10.0 ** rng.uniform(-12, 12, 2000),
            -(10.0 ** rng.uniform(-12, 12, 500)),
            [0.0, 1e-300, 1e300, -1e300, 5e-324],
        ])
        for phi in phis:
            w = filter_weights(float(phi))
            assert w.a + w.b == 2.0
            assert 0.0 <= w.a <= 2.0  # a hits 2.0 in float once b < ulp(2)/2
            assert 0.0 < w.b <= 2.0
            assert w.lam_max == 1.0 + max(phi, 0.0)


class TestBuildKernel:
    def test_two_node_oracle(self):
        # phi=1: A_k = I + A, row sums 2, every entry 1/2
        g = build_graph(2, PATH2)
        k = build_kernel(g, 1.0)
        assert np.array_equal(scatter_dense(g, k.values),
                              [[0.5, 0.5], [0.5, 0.5]])

    def test_spmm_oracle(self):
        g = build_graph(2, PATH2)
        y = build_kernel(g, 1.0).apply(np.array([[1.0], [3.0]]))
        assert np.array_equal(y, [[2.0], [2.0]])

    def test_spmm_shape_mismatch(self):
        g = build_graph(2, PATH2)
        with pytest.raises(DimensionError, match="2 nodes"):
            build_kernel(g, 1.0).apply(np.zeros((3, 4)))

    def test_phi_zero_equals_plain_normalization_exactly(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            n = int(rng.integers(4, 40))
            g = build_graph(n, ring_edges(n, chords=n, seed=trial))
            got = dense_kernel(g, 0.0)
            d = g.degrees.astype(float)
            oracle = np.zeros((n, n))
            rows = np.repeat(np.arange(n), g.degrees)
            for i, j in zip(rows, g.col_indices):
                oracle[i, j] = 1.0 / np.sqrt(d[i] * d[j])
            assert np.abs(got - oracle).max() == 0.0

    def test_dense_matches_sparse_bitwise(self):
        rng = np.random.default_rng(2)
        for trial in range(10):
            n = int(rng.integers(3, 30))
            g = build_graph(n, ring_edges(n, chords=n // 2, seed=100 + trial))
            for phi in (-2.0, 0.0, 0.3, 1.0, 2.0, 50.0):
                sparse = scatter_dense(g, build_kernel(g, phi).values)
                assert np.abs(dense_kernel(g, phi) - sparse).max() == 0.0

    def test_kernel_symmetric_bitwise(self):
        g = build_graph(12, ring_edges(12, chords=8, seed=3))
        for phi in (0.0, 0.7, 1.0, 4.0):
            m = dense_kernel(g, phi)
            assert np.array_equal(m, m.T)

    def test_all_pass_limit(self):
        g = build_graph(30, ring_edges(30, chords=10, seed=4))
        m = dense_kernel(g, 1e4)
        assert np.abs(m - np.eye(30)).max() < 1e-3

    def test_spectral_radius_at_most_one(self):
        rng = np.random.default_rng(5)
        for trial in range(8):
            n = int(rng.integers(4, 25))
            g = build_graph(n, ring_edges(n, chords=n // 2, seed=200 + trial))
            for phi in (0.0, 0.5, 1.0, 3.0, 100.0):
                eig = spectrum(dense_kernel(g, phi)).eigenvalues
                assert np.abs(eig).max() <= 1.0 + 1e-12

    def test_dvalues_match_finite_differences(self):
        g = build_graph(10, ring_edges(10, chords=5, seed=6))
        eps = 1e-6
        for phi in (0.25, 1.0, 2.5, 7.0):
            k = build_kernel(g, phi)
            numeric = (dense_kernel(g, phi + eps) - dense_kernel(g, phi - eps)) / (2 * eps)
            assert np.abs(scatter_dense(g, k.dvalues) - numeric).max() < 1e-7

    def test_dvalues_zero_in_dead_zone(self):
        g = build_graph(6, ring_edges(6, seed=7))
        for phi in (0.0, -0.1, -5.0):
            assert np.all(build_kernel(g, phi).dvalues == 0.0)

    def test_isolated_node_identity_row_when_phi_positive(self):
        g = build_graph(3, [(0, 1)])  # node 2 isolated
        m = dense_kernel(g, 1.0)
        assert np.array_equal(m[2], [0.0, 0.0, 1.0])

    def test_isolated_node_degenerate_at_phi_zero(self):
        g = build_graph(3, [(0, 1)])
        with pytest.raises(DegenerateKernelError, match=r"\[2\]"):
            build_kernel(g, 0.0)
        with pytest.raises(DegenerateKernelError):
            dense_kernel(g, -1.0)

    def test_dense_node_guard(self):
        g = build_graph(10_001, [(i, i + 1) for i in range(10_000)])
        with pytest.raises(ConfigError, match="10000"):
            dense_kernel(g, 1.0)
        with pytest.raises(ConfigError):
            unnormalized_kernel(g, 1.0)


class TestUnnormalizedKernel:
    def test_two_node_oracle(self):
        g = build_graph(2, PATH2)
        m = unnormalized_kernel(g, 1.0)
        assert np.array_equal(m, [[1.0, 1.0], [1.0, 1.0]])
        eig = spectrum(m).eigenvalues
        assert np.allclose(eig, [0.0, 2.0], atol=1e-12)

    def test_family_commutes(self):
        rng = np.random.default_rng(8)
        g = build_graph(15, ring_edges(15, chords=10, seed=9))
        for _ in range(6):
            p1, p2 = rng.uniform(-1, 5, 2)
            m1 = unnormalized_kernel(g, p1)
            m2 = unnormalized_kernel(g, p2)
            assert np.abs(m1 @ m2 - m2 @ m1).max() < 1e-10

    def test_degree_zero_rejected_any_phi(self):
        g = build_graph(3, [(0, 1)])
        for phi in (-1.0, 0.0, 1.0, 10.0):
            with pytest.raises(DegenerateKernelError):
                unnormalized_kernel(g, phi)


class TestSpectrum:
    def test_ascending_and_reconstructs(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(20, 20))
        m = (x + x.T) / 2
        s = spectrum(m)
        assert np.all(np.diff(s.eigenvalues) >= 0)
        rebuilt = s.eigenvectors @ np.diag(s.eigenvalues) @ s.eigenvectors.T
        assert np.abs(rebuilt - m).max() < 1e-12

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            spectrum(np.zeros((3, 4)))

    def test_rejects_non_symmetric(self):
        m = np.eye(3)
        m[0, 1] = 1e-6
        with pytest.raises(ContractError, match="not symmetric"):
            spectrum(m)

    def test_rejects_large(self):
        with pytest.raises(ConfigError, match="500"):
            spectrum(np.eye(501))
