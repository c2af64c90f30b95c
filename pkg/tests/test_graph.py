import numpy as np
import pytest

from conftest import complete_graph, cycle_graph, path_graph, random_connected_graph
from gcnseg.errors import DimensionError
from gcnseg.graph import (
    Graph,
    adjacency,
    adjacency_sparse,
    build_grid_graph,
    degree_diagonal,
    laplacian,
    laplacian_sparse,
    renormalized_adjacency,
    renormalized_adjacency_sparse,
)


class TestGraphValidation:
    def test_rejects_zero_nodes(self):
        with pytest.raises(DimensionError):
            Graph(n=0, edges=())

    def test_rejects_self_loop(self):
        with pytest.raises(ValueError):
            Graph(n=2, edges=((1, 1, 1.0),))

    def test_rejects_unordered_edge(self):
        with pytest.raises(ValueError):
            Graph(n=2, edges=((1, 0, 1.0),))

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            Graph(n=2, edges=((0, 1, -0.5),))

    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            Graph(n=2, edges=((0, 2, 1.0),))

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError):
            Graph(n=3, edges=((0, 1, 1.0), (0, 1, 2.0)))


class TestBuildGridGraph:
    def test_single_node(self):
        g = build_grid_graph(1, 1, 4)
        assert g.n == 1
        assert g.num_edges == 0

    def test_2x2_four_connected(self):
        g = build_grid_graph(2, 2, 4)
        assert g.n == 4
        assert g.num_edges == 4

    def test_3x3_eight_connected(self):
        # 6 horizontal + 6 vertical + 8 diagonal adjacencies.
        g = build_grid_graph(3, 3, 8)
        assert g.n == 9
        assert g.num_edges == 20

    def test_rejects_zero_dimension(self):
        with pytest.raises(DimensionError):
            build_grid_graph(0, 5)
        with pytest.raises(DimensionError):
            build_grid_graph(5, 0)

    def test_rejects_bad_connectivity(self):
        with pytest.raises(ValueError):
            build_grid_graph(2, 2, connectivity=6)

    def test_edge_count_closed_form(self):
        # h(w-1) + w(h-1) edges under 4-connectivity, checked by enumeration.
        for h in range(1, 9):
            for w in range(1, 9):
                g = build_grid_graph(h, w, 4)
                assert g.num_edges == h * (w - 1) + w * (h - 1)

    def test_row_major_node_order(self):
        g = build_grid_graph(2, 3, 4)
        # pixel (1, 2) -> node 5; its 4-neighbours are 4 (left) and 2 (up)
        incident = {(i, j) for i, j, _ in g.edges if 5 in (i, j)}
        assert incident == {(4, 5), (2, 5)}


class TestDegreeDiagonal:
    def test_path_p2(self):
        assert degree_diagonal(path_graph(2)).tolist() == [1.0, 1.0]

    def test_path_p3(self):
        assert degree_diagonal(path_graph(3)).tolist() == [1.0, 2.0, 1.0]

    def test_3x3_grid_by_neighbour_count(self):
        g = build_grid_graph(3, 3, 4)
        deg = degree_diagonal(g)
        expected = np.array([2, 3, 2, 3, 4, 3, 2, 3, 2], dtype=float)
        np.testing.assert_array_equal(deg, expected)

    def test_matches_dense_row_sums(self):
        rng = np.random.default_rng(7)
        g = random_connected_graph(rng, 12)
        np.testing.assert_array_equal(degree_diagonal(g), adjacency(g).sum(axis=1))


class TestLaplacian:
    def test_p2(self):
        np.testing.assert_array_equal(laplacian(path_graph(2)),
                                      [[1.0, -1.0], [-1.0, 1.0]])

    def test_edgeless_graph_is_zero(self):
        np.testing.assert_array_equal(laplacian(Graph(n=3, edges=())),
                                      np.zeros((3, 3)))

    def test_four_cycle_spectrum(self):
        # Brute-force eigensolve of the 4x4 Laplacian.
        lam = np.linalg.eigvalsh(laplacian(cycle_graph(4)))
        np.testing.assert_allclose(lam, [0.0, 2.0, 2.0, 4.0], atol=1e-12)

    def test_symmetric_and_rows_sum_to_zero(self):
        rng = np.random.default_rng(11)
        for n in (2, 5, 9, 16):
            g = random_connected_graph(rng, n)
            lap = laplacian(g)
            np.testing.assert_array_equal(lap, lap.T)
            # Dyadic weights make the row sums exact.
            assert np.max(np.abs(lap @ np.ones(n))) == 0.0

    def test_positive_semidefinite(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            n = int(rng.integers(2, 33))
            g = random_connected_graph(rng, n)
            assert np.linalg.eigvalsh(laplacian(g)).min() >= -1e-10

    def test_connected_graph_has_simple_zero_eigenvalue(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            n = int(rng.integers(2, 17))
            g = random_connected_graph(rng, n)
            lam = np.sort(np.linalg.eigvalsh(laplacian(g)))
            assert lam[1] > 1e-10

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(19)
        g = random_connected_graph(rng, 10)
        np.testing.assert_array_equal(laplacian_sparse(g).toarray(), laplacian(g))


class TestRenormalizedAdjacency:
    def test_single_node(self):
        np.testing.assert_array_equal(renormalized_adjacency(build_grid_graph(1, 1)),
                                      [[1.0]])

    def test_p2(self):
        np.testing.assert_allclose(renormalized_adjacency(path_graph(2)),
                                   [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_triangle(self):
        np.testing.assert_allclose(renormalized_adjacency(complete_graph(3)),
                                   np.full((3, 3), 1.0 / 3.0), atol=1e-15)

    def test_isolated_node_gets_unit_self_loop(self):
        a_hat = renormalized_adjacency(Graph(n=3, edges=((0, 1, 1.0),)))
        assert a_hat[2, 2] == 1.0

    def test_symmetric_with_bounded_spectrum(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            n = int(rng.integers(2, 33))
            g = random_connected_graph(rng, n)
            a_hat = renormalized_adjacency(g)
            np.testing.assert_allclose(a_hat, a_hat.T, atol=1e-15)
            lam = np.linalg.eigvalsh(a_hat)
            assert np.max(np.abs(lam)) <= 1.0 + 1e-12

    def test_sparse_matches_dense(self):
        rng = np.random.default_rng(29)
        g = random_connected_graph(rng, 14)
        np.testing.assert_array_equal(renormalized_adjacency_sparse(g).toarray(),
                                      renormalized_adjacency(g))

    def test_adjacency_sparse_matches_dense(self):
        rng = np.random.default_rng(31)
        g = random_connected_graph(rng, 9)
        np.testing.assert_array_equal(adjacency_sparse(g).toarray(), adjacency(g))

    def test_dense_limit_enforced(self):
        g = Graph(n=4097, edges=((0, 1, 1.0),))
        with pytest.raises(DimensionError):
            laplacian(g)
