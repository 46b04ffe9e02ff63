"""
numerics.py - Kernel Numerik Matriks Kecil

Berisi:
- sym_eig: eigendecomposition simetris dengan konvensi tanda deterministik
- svd: thin SVD dengan konvensi tanda yang sama
- solve_sylvester_kron: A X + X B = C lewat sistem Kronecker (oracle)
- solve_sylvester_structured: A X + X (c L kron I_d) = C lewat eigen L (jalur produksi)
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from errors import (
    ConfigError,
    NonFiniteError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ShapeMismatchError,
    SingularSystemError,
)

SYMMETRY_RTOL = 1e-10
# Batas pivot faktorisasi Cholesky untuk sistem r x r yang di-shift
PIVOT_FLOOR = 1e-12


@dataclass
class SymEig:
    """Eigenvalue ascending + eigenvector ortonormal."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass
class Svd:
    """Thin SVD: M = U diag(D) V'."""

    U: np.ndarray
    D: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.D) @ self.V.T


def _sign_fix(vectors: np.ndarray) -> np.ndarray:
    """Tanda per kolom: komponen dengan magnitudo terbesar dibuat non-negatif."""
    if vectors.size == 0:
        return np.ones(vectors.shape[1])
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def sym_eig(A: np.ndarray) -> SymEig:
    """
    Eigendecomposition matriks simetris.

    Args:
        A: Matriks k x k simetris

    Returns:
        SymEig dengan eigenvalue ascending
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"sym_eig butuh matriks persegi, dapat {A.shape}")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise NotSymmetricError("Matriks tidak simetris")

    eigenvalues, eigenvectors = linalg.eigh(A)
    eigenvectors = eigenvectors * _sign_fix(eigenvectors)
    return SymEig(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def svd(M: np.ndarray) -> Svd:
    """
    Thin SVD dengan singular value descending.

    Args:
        M: Matriks p x q

    Returns:
        Svd
    """
    M = np.asarray(M, dtype=float)
    if not np.isfinite(M).all():
        raise NonFiniteError("SVD: input mengandung NaN/Inf")

    U, D, Vt = linalg.svd(M, full_matrices=False)
    signs = _sign_fix(U)
    return Svd(U=U * signs, D=D, V=Vt.T * signs)


def solve_sylvester_kron(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """
    Selesaikan A X + X B = C via (I kron A + B' kron I) vec(X) = vec(C).

    Args:
        A: r x r
        B: q x q
        C: r x q

    Returns:
        X: r x q
    """
    A, B, C = (np.asarray(x, dtype=float) for x in (A, B, C))
    r, q = C.shape
    if A.shape != (r, r) or B.shape != (q, q):
        raise ShapeMismatchError(f"Dimensi tidak cocok: A {A.shape}, B {B.shape}, C {C.shape}")

    K = np.kron(np.eye(q), A) + np.kron(B.T, np.eye(r))
    if not (np.isfinite(K).all() and np.isfinite(C).all()):
        raise NonFiniteError("Sistem Kronecker: input mengandung NaN/Inf")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', linalg.LinAlgWarning)
            lu, piv = linalg.lu_factor(K)
    except linalg.LinAlgError as e:
        raise SingularSystemError(f"Sistem Kronecker singular: {e}") from e

    # Pivot LU relatif terhadap skala K; pivot nol = singular
    pivots = np.abs(np.diag(lu))
    threshold = np.finfo(float).eps * K.shape[0] * np.abs(K).max(initial=0.0)
    if pivots.min(initial=np.inf) <= threshold:
        raise SingularSystemError(f"Sistem Kronecker singular (pivot minimum {pivots.min():.3e})")

    with np.errstate(all='ignore'):
        x = linalg.lu_solve((lu, piv), C.reshape(-1, order='F'))
    if not np.isfinite(x).all():
        raise SingularSystemError("Solusi sistem Kronecker non-finite")
    return x.reshape((r, q), order='F')


def _cholesky(A: np.ndarray) -> tuple:
    """Faktorisasi Cholesky dengan pengecekan pivot."""
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(f"Matriks tidak SPD: {e}") from e
    if np.diag(factor[0]).min(initial=np.inf) <= PIVOT_FLOOR:
        raise NotPositiveDefiniteError("Pivot Cholesky terlalu kecil")
    return factor


def solve_sylvester_structured(
    A: np.ndarray,
    L: np.ndarray,
    c: float,
    d: int,
    C: np.ndarray,
) -> np.ndarray:
    """
    Selesaikan A X + X (c L kron I_d) = C.

    L = V diag(mu) V' didekomposisi sekali, lalu T sistem r x r
    (A + c mu_k I) Y_k = C~_k diselesaikan dengan Cholesky, masing-masing d RHS.

    Args:
        A: r x r SPD
        L: T x T simetris PSD
        c: Bobot >= 0
        d: Ukuran blok
        C: r x (T*d)

    Returns:
        X: r x (T*d)
    """
    A, L, C = (np.asarray(x, dtype=float) for x in (A, L, C))
    r = A.shape[0]
    T = L.shape[0]
    if A.shape != (r, r) or L.shape != (T, T) or C.shape != (r, T * d):
        raise ShapeMismatchError(
            f"Dimensi tidak cocok: A {A.shape}, L {L.shape}, d={d}, C {C.shape}"
        )
    if c < 0:
        raise ConfigError(f"Bobot c harus >= 0, dapat {c}")

    eig = sym_eig(L)
    # mu bisa sedikit negatif karena roundoff
    mu = np.clip(eig.eigenvalues, 0.0, None)
    V = eig.eigenvectors

    blocks = C.reshape(r, T, d)
    rotated = np.einsum('rtd,tk->rkd', blocks, V)

    eye = np.eye(r)
    solved = np.empty_like(rotated)
    for k in range(T):
        factor = _cholesky(A + c * mu[k] * eye)
        solved[:, k, :] = linalg.cho_solve(factor, rotated[:, k, :])

    X = np.einsum('rkd,tk->rtd', solved, V)
    return X.reshape(r, T * d)


def solve_spd(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Selesaikan A X = B untuk A SPD (Cholesky)."""
    return linalg.cho_solve(_cholesky(np.asarray(A, dtype=float)), np.asarray(B, dtype=float))
