import numpy as np
import pytest

from conftest import path_graph, random_connected_graph
from gcnseg.errors import DimensionError
from gcnseg.graph import laplacian
from gcnseg.spectral import eig_sym, graph_fourier, spectral_filter


def random_symmetric(rng, n, scale=1.0):
    m = rng.uniform(-scale, scale, size=(n, n))
    return (m + m.T) / 2.0


class TestEigSym:
    def test_identity(self):
        dec = eig_sym(np.eye(3))
        np.testing.assert_allclose(dec.lam, [1.0, 1.0, 1.0], atol=1e-14)

    def test_path_p2(self):
        dec = eig_sym(laplacian(path_graph(2)))
        np.testing.assert_allclose(dec.lam, [0.0, 2.0], atol=1e-12)
        s = 1.0 / np.sqrt(2.0)
        # Sign convention: first nonzero component of each column nonnegative.
        np.testing.assert_allclose(dec.phi[:, 0], [s, s], atol=1e-12)
        np.testing.assert_allclose(dec.phi[:, 1], [s, -s], atol=1e-12)

    def test_reconstruction_is_its_own_oracle(self):
        rng = np.random.default_rng(5)
        m = random_symmetric(rng, 8)
        dec = eig_sym(m)
        rebuilt = dec.phi @ np.diag(dec.lam) @ dec.phi.T
        assert np.max(np.abs(rebuilt - m)) <= 1e-10

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(7)
        m = random_symmetric(rng, 16)
        dec = eig_sym(m)
        assert np.max(np.abs(dec.phi.T @ dec.phi - np.eye(16))) <= 1e-10

    def test_eigenvalues_match_numpy(self):
        # Cross-check against an independent solver.
        rng = np.random.default_rng(9)
        for n in (2, 5, 12, 24):
            m = random_symmetric(rng, n)
            dec = eig_sym(m)
            np.testing.assert_allclose(dec.lam, np.linalg.eigvalsh(m), atol=1e-11)

    def test_eigenvalues_ascending(self):
        rng = np.random.default_rng(11)
        dec = eig_sym(random_symmetric(rng, 20))
        assert np.all(np.diff(dec.lam) >= 0.0)

    def test_laplacian_eigenvalues_nonnegative(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            g = random_connected_graph(rng, int(rng.integers(2, 20)))
            dec = eig_sym(laplacian(g))
            assert dec.lam[0] >= -1e-10

    def test_deterministic(self):
        rng = np.random.default_rng(15)
        m = random_symmetric(rng, 10)
        d1 = eig_sym(m)
        d2 = eig_sym(m)
        np.testing.assert_array_equal(d1.phi, d2.phi)
        np.testing.assert_array_equal(d1.lam, d2.lam)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            eig_sym(np.ones((2, 3)))

    def test_rejects_oversized(self):
        with pytest.raises(DimensionError):
            eig_sym(np.eye(5), max_n=4)

    def test_single_entry(self):
        dec = eig_sym(np.array([[4.0]]))
        assert dec.lam.tolist() == [4.0]
        assert dec.phi.tolist() == [[1.0]]


class TestGraphFourier:
    def test_zero_signal(self):
        dec = eig_sym(laplacian(path_graph(3)))
        np.testing.assert_array_equal(graph_fourier(dec, np.zeros(3)), np.zeros(3))

    def test_eigenvector_maps_to_unit_vector(self):
        dec = eig_sym(laplacian(path_graph(4)))
        for k in range(4):
            f_hat = graph_fourier(dec, dec.phi[:, k])
            expected = np.zeros(4)
            expected[k] = 1.0
            np.testing.assert_allclose(f_hat, expected, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(21)
        dec = eig_sym(laplacian(path_graph(3)))
        f = rng.normal(size=3)
        np.testing.assert_allclose(dec.phi @ graph_fourier(dec, f), f, atol=1e-10)

    def test_parseval(self):
        rng = np.random.default_rng(23)
        for n in (4, 17, 64):
            g = random_connected_graph(rng, n)
            dec = eig_sym(laplacian(g))
            f = rng.normal(size=n)
            assert abs(np.linalg.norm(graph_fourier(dec, f)) - np.linalg.norm(f)) <= 1e-10

    def test_rejects_wrong_length(self):
        dec = eig_sym(laplacian(path_graph(3)))
        with pytest.raises(DimensionError):
            graph_fourier(dec, np.zeros(4))


class TestSpectralFilter:
    def test_all_ones_gain_is_identity(self):
        rng = np.random.default_rng(25)
        dec = eig_sym(laplacian(path_graph(5)))
        f = rng.normal(size=5)
        np.testing.assert_allclose(spectral_filter(dec, np.ones(5), f), f, atol=1e-10)

    def test_gain_lambda_equals_laplacian_action(self):
        rng = np.random.default_rng(27)
        g = random_connected_graph(rng, 9)
        lap = laplacian(g)
        dec = eig_sym(lap)
        f = rng.normal(size=9)
        np.testing.assert_allclose(spectral_filter(dec, dec.lam, f), lap @ f, atol=1e-10)

    def test_matches_dense_product(self):
        rng = np.random.default_rng(29)
        g = random_connected_graph(rng, 8)
        dec = eig_sym(laplacian(g))
        g_hat = rng.normal(size=8)
        f = rng.normal(size=8)
        dense = dec.phi @ np.diag(g_hat) @ dec.phi.T @ f
        np.testing.assert_allclose(spectral_filter(dec, g_hat, f), dense, atol=1e-12)

    def test_polynomial_gain_equals_matrix_polynomial(self):
        # Filtering with p(lambda) must equal applying p(L) directly.
        rng = np.random.default_rng(31)
        for _ in range(5):
            n = int(rng.integers(3, 33))
            g = random_connected_graph(rng, n)
            lap = laplacian(g)
            dec = eig_sym(lap)
            coeffs = rng.uniform(-1, 1, size=int(rng.integers(1, 10)))
            g_hat = np.polynomial.polynomial.polyval(dec.lam, coeffs)
            p_of_l = np.zeros((n, n))
            power = np.eye(n)
            for c in coeffs:
                p_of_l += c * power
                power = power @ lap
            f = rng.normal(size=n)
            np.testing.assert_allclose(spectral_filter(dec, g_hat, f), p_of_l @ f,
                                       atol=1e-8)

    def test_multi_column_signals(self):
        rng = np.random.default_rng(33)
        dec = eig_sym(laplacian(path_graph(6)))
        g_hat = rng.normal(size=6)
        f = rng.normal(size=(6, 3))
        cols = np.stack([spectral_filter(dec, g_hat, f[:, j]) for j in range(3)], axis=1)
        np.testing.assert_allclose(spectral_filter(dec, g_hat, f), cols, atol=1e-13)

    def test_rejects_mismatched_lengths(self):
        dec = eig_sym(laplacian(path_graph(3)))
        with pytest.raises(DimensionError):
            spectral_filter(dec, np.ones(2), np.zeros(3))
        with pytest.raises(DimensionError):
            spectral_filter(dec, np.ones(3), np.zeros(4))
