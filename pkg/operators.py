"""
operators.py - Operator Selisih Kedua & Block Matrix

Membangun:
- D2 (selisih kedua) dan Gram L = D2' D2 untuk penalti locally linear
- Bentuk dense block matrix F, W, Q_O, Q_P (hanya dipakai sebagai oracle test)
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from dataset import HoldoutSplit, TemporalDataset
from errors import ConfigError, ShapeMismatchError


@dataclass
class SecondDiffGram:
    """Gram matrix L = D2' D2 untuk T langkah waktu."""

    T: int
    L: np.ndarray


@dataclass
class BlockAssembly:
    """Block matrix F dan W berukuran (T*m) x (T*n)."""

    F_block: np.ndarray
    W_block: np.ndarray


def second_difference_matrix(T: int) -> np.ndarray:
    """D2 berukuran (T-2) x T dengan baris (..., 1, -2, 1, ...)."""
    if T < 3:
        raise ConfigError(f"Operator selisih kedua butuh T >= 3, dapat T={T}")
    return np.diff(np.eye(T), n=2, axis=0)


def second_difference_gram(T: int) -> SecondDiffGram:
    """
    Gram matrix L = D2' D2 (pentadiagonal, PSD, null space = konstanta & linear).

    Args:
        T: Jumlah langkah waktu (>= 3)

    Returns:
        SecondDiffGram
    """
    D2 = second_difference_matrix(T)
    return SecondDiffGram(T=T, L=D2.T @ D2)


def temporal_gram(T: int) -> np.ndarray:
    """L untuk solver: nol jika T <= 2 (penalti kosong)."""
    if T < 3:
        return np.zeros((T, T))
    return second_difference_gram(T).L


def block_difference_operator(T: int, d: int) -> np.ndarray:
    """Q = D2 kron I_d, bentuk block Q_O (d = m) atau Q_P (d = n)."""
    return np.kron(second_difference_matrix(T), np.eye(d))


def curvature_penalty(factors: np.ndarray) -> float:
    """
    Jumlah ||(X_{t+1} - X_t) - (X_t - X_{t-1})||_F^2 untuk t = 2..T-1.

    Args:
        factors: Array (T, a, b) atau list T matriks berukuran sama

    Returns:
        Penalti (0 jika T <= 2)
    """
    try:
        stack = np.asarray(factors, dtype=float)
    except ValueError as e:
        raise ShapeMismatchError("Semua faktor harus berukuran sama") from e
    if stack.ndim != 3:
        raise ShapeMismatchError(f"Faktor harus berdimensi (T, a, b), dapat {stack.shape}")
    if stack.shape[0] < 3:
        return 0.0
    return float((np.diff(stack, n=2, axis=0) ** 2).sum())


def stack_factors(factors: np.ndarray) -> np.ndarray:
    """Susun (T, a, r) menjadi (T*a, r), blok ke-t = faktor ke-t."""
    factors = np.asarray(factors, dtype=float)
    T, a, r = factors.shape
    return factors.reshape(T * a, r)


def assemble_blocks(dataset: TemporalDataset, split: HoldoutSplit) -> BlockAssembly:
    """
    Susun block matrix F dan W.

    Setiap row-block F = [F_1, ..., F_T] (missing diisi 0),
    W block-diagonal dengan blok observed_mask ke-t.

    Args:
        dataset: Dataset
        split: Holdout split (observed_mask berperan sebagai W_t)

    Returns:
        BlockAssembly
    """
    if split.observed_mask.shape != dataset.slices.shape:
        raise ShapeMismatchError("observed_mask tidak sejajar dengan dataset")

    filled = np.where(split.observed_mask, dataset.slices, 0.0)
    row_block = np.hstack(list(filled))
    F_block = np.vstack([row_block] * dataset.T)
    W_block = block_diag(*split.observed_mask.astype(float))
    return BlockAssembly(F_block=F_block, W_block=W_block)
