"""
test_numerics.py - Unit Tests untuk Kernel Numerik

Oracle: scipy.linalg.solve_sylvester dan sistem Kronecker dense.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import linalg

# Add parent directory to path untuk import module
sys.path.insert(0, str(Path(__file__).parent.parent))

from errors import (
    NonFiniteError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ShapeMismatchError,
    SingularSystemError,
)
from numerics import solve_spd, solve_sylvester_kron, solve_sylvester_structured, svd, sym_eig
from operators import temporal_gram


# =============================================================================
# FIXTURES
# =============================================================================
@pytest.fixture
def rng():
    return np.random.default_rng(17)


def random_spd(rng: np.random.Generator, r: int) -> np.ndarray:
    M = rng.normal(size=(r, r))
    return M @ M.T + 0.5 * np.eye(r)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


# =============================================================================
# TESTS - EIGEN & SVD
# =============================================================================
class TestSymEig:
    """Tests untuk sym_eig."""

    def test_reconstruct_and_order(self, rng):
        A = random_spd(rng, 5)
        eig = sym_eig(A)

        assert np.all(np.diff(eig.eigenvalues) >= 0)
        V = eig.eigenvectors
        np.testing.assert_allclose(V @ np.diag(eig.eigenvalues) @ V.T, A, atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(5), atol=1e-12)

    def test_sign_convention(self, rng):
        """Komponen bermagnitudo terbesar tiap eigenvector non-negatif."""
        eig = sym_eig(random_spd(rng, 4))
        idx = np.argmax(np.abs(eig.eigenvectors), axis=0)
        assert np.all(eig.eigenvectors[idx, np.arange(4)] >= 0)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_not_square(self):
        with pytest.raises(ShapeMismatchError):
            sym_eig(np.zeros((2, 3)))


class TestSvd:
    """Tests untuk svd."""

    @pytest.mark.parametrize('shape', [(5, 3), (3, 5), (4, 4)])
    def test_reconstruct(self, rng, shape):
        M = rng.normal(size=shape)
        decomposition = svd(M)

        assert np.all(np.diff(decomposition.D) <= 0)
        np.testing.assert_allclose(decomposition.reconstruct(), M, atol=1e-12)

    def test_sign_convention(self, rng):
        decomposition = svd(rng.normal(size=(6, 3)))
        idx = np.argmax(np.abs(decomposition.U), axis=0)
        assert np.all(decomposition.U[idx, np.arange(3)] >= 0)

    def test_non_finite(self):
        with pytest.raises(NonFiniteError):
            svd(np.array([[1.0, np.nan], [0.0, 1.0]]))


# =============================================================================
# TESTS - SYLVESTER
# =============================================================================
class TestSylvesterKron:
    """Tests untuk solve_sylvester_kron."""

    def test_matches_scipy(self, rng):
        A = random_spd(rng, 3)
        B = random_spd(rng, 4)
        C = rng.normal(size=(3, 4))

        X = solve_sylvester_kron(A, B, C)

        np.testing.assert_allclose(A @ X + X @ B, C, atol=1e-10)
        np.testing.assert_allclose(X, linalg.solve_sylvester(A, B, C), atol=1e-10)

    @pytest.mark.parametrize('A, B', [
        (np.eye(2), -np.eye(2)),
        (np.diag([1.0, 2.0]), -np.diag([1.0, 3.0])),
        (np.array([[1.0, 1.0], [0.0, 2.0]]), -2.0 * np.eye(1)),
    ])
    def test_singular(self, A, B):
        """Eigenvalue A dan -B bertemu: sistem singular dilaporkan, bukan inf."""
        C = np.ones((A.shape[0], B.shape[0]))
        with pytest.raises(SingularSystemError):
            solve_sylvester_kron(A, B, C)

    def test_non_finite_input(self):
        with pytest.raises(NonFiniteError):
            solve_sylvester_kron(np.eye(2), np.eye(2), np.full((2, 2), np.nan))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            solve_sylvester_kron(np.eye(2), np.eye(3), np.ones((2, 2)))


class TestSylvesterStructured:
    """Tests untuk solve_sylvester_structured."""

    def test_matches_dense_kronecker(self, rng):
        """50 instance acak: r <= 4, T di {3, 4, 5}, blok <= 4."""
        for _ in range(50):
            r = int(rng.integers(1, 5))
            T = int(rng.integers(3, 6))
            d = int(rng.integers(1, 5))
            c = float(rng.uniform(0.0, 3.0))
            A = random_spd(rng, r)
            L = temporal_gram(T)
            C = rng.normal(size=(r, T * d))

            X = solve_sylvester_structured(A, L, c, d, C)
            expected = solve_sylvester_kron(A, c * np.kron(L, np.eye(d)), C)

            assert relative_error(X, expected) <= 1e-8

    def test_zero_weight_is_plain_solve(self, rng):
        A = random_spd(rng, 3)
        C = rng.normal(size=(3, 8))
        X = solve_sylvester_structured(A, temporal_gram(4), 0.0, 2, C)
        np.testing.assert_allclose(X, np.linalg.solve(A, C), atol=1e-10)

    def test_single_step(self, rng):
        """T = 1: L = 0."""
        A = random_spd(rng, 2)
        C = rng.normal(size=(2, 3))
        X = solve_sylvester_structured(A, np.zeros((1, 1)), 1.0, 3, C)
        np.testing.assert_allclose(A @ X, C, atol=1e-10)

    def test_not_positive_definite(self, rng):
        with pytest.raises(NotPositiveDefiniteError):
            solve_sylvester_structured(-np.eye(2), temporal_gram(3), 1.0, 1, rng.normal(size=(2, 3)))

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeMismatchError):
            solve_sylvester_structured(np.eye(2), temporal_gram(3), 1.0, 2, rng.normal(size=(2, 5)))


class TestSolveSpd:
    """Tests untuk solve_spd."""

    def test_solution(self, rng):
        A = random_spd(rng, 4)
        B = rng.normal(size=(4, 2))
        np.testing.assert_allclose(A @ solve_spd(A, B), B, atol=1e-10)

    def test_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            solve_spd(np.zeros((2, 2)), np.ones(2))
