"""
baselines.py - Imputer Pembanding

Metode:
- mean: isi entry hidden dengan mean atribut (pooled semua slice atau per slice)
- softimpute_als: ALS dengan ridge lambda per slice + soft-threshold SVD
- softimpute_svd: iterasi Z <- SVT_lam(W * F + (1 - W) * Z) per slice

Metode per-slice diterapkan satu per satu sepanjang arah waktu.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config import config
from errors import ConfigError, DatasetError, ShapeMismatchError
from numerics import solve_spd, svd

logger = logging.getLogger(__name__)

METHODS = ('mean', 'softimpute_als', 'softimpute_svd')


@dataclass
class BaselineConfig:
    """Konfigurasi baseline. rank hanya dipakai ALS (None = min(m, n, 15))."""

    method: str = 'softimpute_als'
    lam: float = field(default_factory=lambda: config.DEFAULT_LAMBDA)
    rank: Optional[int] = None
    tol: float = field(default_factory=lambda: config.DEFAULT_TOL)
    max_iter: int = field(default_factory=lambda: config.DEFAULT_MAX_ITER)
    seed: int = field(default_factory=lambda: config.DEFAULT_SEED)
    per_slice_mean: bool = False

    def validate(self) -> None:
        """Raise ConfigError jika parameter tidak valid untuk metode ini."""
        if self.method not in METHODS:
            raise ConfigError(f"method harus salah satu {METHODS}, dapat '{self.method}'")
        if self.method == 'mean':
            return
        if self.method == 'softimpute_als' and not self.lam > 0:
            raise ConfigError(f"softimpute_als butuh lambda > 0, dapat {self.lam}")
        if self.lam < 0:
            raise ConfigError(f"lambda harus >= 0, dapat {self.lam}")
        if not self.tol > 0:
            raise ConfigError(f"tol harus > 0, dapat {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter harus >= 1, dapat {self.max_iter}")
        if self.method == 'softimpute_als' and self.rank is not None and self.rank < 1:
            raise ConfigError(f"rank harus >= 1, dapat {self.rank}")


@dataclass
class SliceImputation:
    """Hasil imputasi satu slice."""

    imputed: np.ndarray
    fit: np.ndarray
    iterations: int
    converged: bool
    objective_trace: list[float] = field(default_factory=list)


# =============================================================================
# MEAN IMPUTATION
# =============================================================================
def mean_impute(
    slices: np.ndarray,
    observed_mask: np.ndarray,
    per_slice: bool = False,
) -> np.ndarray:
    """
    Isi entry yang tidak terlihat dengan mean atribut dari entry terlihat.

    Args:
        slices: Array (T, m, n)
        observed_mask: Mask (T, m, n)
        per_slice: True = mean per slice, False = pooled semua slice

    Returns:
        Array (T, m, n) terimputasi
    """
    slices = np.asarray(slices, dtype=float)
    mask = np.asarray(observed_mask, dtype=bool)
    if slices.shape != mask.shape:
        raise ShapeMismatchError(f"slices {slices.shape} dan mask {mask.shape} tidak sejajar")

    axes = (1,) if per_slice else (0, 1)
    counts = mask.sum(axis=axes, keepdims=True)
    if (counts == 0).any():
        raise DatasetError("Ada atribut tanpa entry terlihat untuk mean imputation")

    means = np.where(mask, slices, 0.0).sum(axis=axes, keepdims=True) / counts
    return np.where(mask, slices, np.broadcast_to(means, slices.shape))


# =============================================================================
# SOFTIMPUTE
# =============================================================================
def _als_objective(F: np.ndarray, mask: np.ndarray, A: np.ndarray, B: np.ndarray, lam: float) -> float:
    residual = np.where(mask, F - A @ B.T, 0.0)
    return 0.5 * float((residual ** 2).sum()) + 0.5 * lam * float((A ** 2).sum() + (B ** 2).sum())


def _shrink(matrix: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """SVT: return (matriks hasil, singular value setelah shrink)."""
    decomposition = svd(matrix)
    shrunk = np.maximum(decomposition.D - lam, 0.0)
    return (decomposition.U * shrunk) @ decomposition.V.T, shrunk


def softimpute_als_slice(
    F: np.ndarray,
    mask: np.ndarray,
    lam: float,
    rank: Optional[int] = None,
    tol: float = 1e-5,
    max_iter: int = 500,
    seed: int = 0,
    init: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> SliceImputation:
    """
    softImpute-ALS untuk satu slice.

    min 0.5 ||W * (F - A B')||^2 + 0.5 lam (||A||^2 + ||B||^2)
    lewat update ridge bergantian (B dulu, lalu A) dengan surrogate fill.

    Args:
        F: Matriks m x n (entry di luar mask tidak dibaca)
        mask: Mask observasi m x n
        lam: lambda > 0
        rank: Rank faktor (None = min(m, n, 15))
        tol: Threshold convergence rate
        max_iter: Batas iterasi
        seed: Seed init (urutan draw: A lalu B, sd 1/sqrt(r))
        init: (A, B) awal, menggantikan init acak

    Returns:
        SliceImputation (imputed = soft-threshold SVD dari A B')
    """
    F = np.asarray(F, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if F.shape != mask.shape:
        raise ShapeMismatchError(f"F {F.shape} dan mask {mask.shape} tidak sejajar")
    if not lam > 0:
        raise ConfigError(f"softimpute_als butuh lambda > 0, dapat {lam}")

    m, n = F.shape
    if init is not None:
        A, B = (np.array(x, dtype=float) for x in init)
        r = A.shape[1]
    else:
        r = rank if rank is not None else min(m, n, config.DEFAULT_MAX_RANK)
        if not 1 <= r <= min(m, n):
            raise ConfigError(f"rank harus di [1, {min(m, n)}], dapat {r}")
        rng = np.random.default_rng(seed)
        sd = 1.0 / math.sqrt(r)
        A = rng.normal(0.0, sd, size=(m, r))
        B = rng.normal(0.0, sd, size=(n, r))

    observed = np.where(mask, F, 0.0)
    ridge = lam * np.eye(r)
    F_hat = observed.copy()
    trace: list[float] = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        A_old, B_old = A, B

        B = solve_spd(ridge + A.T @ A, A.T @ F_hat).T
        F_hat = np.where(mask, observed, A @ B.T)

        A = solve_spd(ridge + B.T @ B, B.T @ F_hat.T).T
        F_hat = np.where(mask, observed, A @ B.T)

        K_old = np.where(mask, A_old @ B_old.T, 0.0)
        K_new = np.where(mask, A @ B.T, 0.0)
        denominator = float((K_old ** 2).sum())
        rate = math.inf if denominator == 0.0 else float(((K_new - K_old) ** 2).sum()) / denominator
        trace.append(_als_objective(observed, mask, A, B, lam))

        if rate < tol:
            converged = True
            break

    fit = A @ B.T
    imputed, _ = _shrink(fit, lam)
    return SliceImputation(imputed=imputed, fit=fit, iterations=iterations,
                           converged=converged, objective_trace=trace)


def nuclear_objective(F: np.ndarray, mask: np.ndarray, Z: np.ndarray, lam: float) -> float:
    """0.5 ||W * (F - Z)||^2 + lam ||Z||_*"""
    residual = np.where(mask, np.asarray(F, dtype=float) - Z, 0.0)
    return 0.5 * float((residual ** 2).sum()) + lam * float(svd(Z).D.sum())


def softimpute_svd_slice(
    F: np.ndarray,
    mask: np.ndarray,
    lam: float,
    tol: float = 1e-5,
    max_iter: int = 500,
) -> SliceImputation:
    """
    softImpute-SVD untuk satu slice: Z <- SVT_lam(W * F + (1 - W) * Z), mulai Z = 0.

    Berhenti saat ||Z_new - Z||^2 / ||Z||^2 < tol.

    Args:
        F: Matriks m x n
        mask: Mask observasi
        lam: Threshold >= 0
        tol: Threshold perubahan relatif
        max_iter: Batas iterasi

    Returns:
        SliceImputation (imputed = fit = Z)
    """
    F = np.asarray(F, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if F.shape != mask.shape:
        raise ShapeMismatchError(f"F {F.shape} dan mask {mask.shape} tidak sejajar")
    if lam < 0:
        raise ConfigError(f"lambda harus >= 0, dapat {lam}")

    observed = np.where(mask, F, 0.0)
    Z = np.zeros(F.shape)
    trace: list[float] = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        Z_new, shrunk = _shrink(np.where(mask, observed, Z), lam)
        residual = np.where(mask, observed - Z_new, 0.0)
        trace.append(0.5 * float((residual ** 2).sum()) + lam * float(shrunk.sum()))

        denominator = float((Z ** 2).sum())
        change = float(((Z_new - Z) ** 2).sum())
        Z = Z_new

        if change == 0.0 or (denominator > 0.0 and change / denominator < tol):
            converged = True
            break

    return SliceImputation(imputed=Z, fit=Z, iterations=iterations,
                           converged=converged, objective_trace=trace)


def impute_slices(
    slices: np.ndarray,
    observed_mask: np.ndarray,
    baseline_config: BaselineConfig,
) -> np.ndarray:
    """
    Jalankan baseline di semua slice (seed slice ke-t = seed + t).

    Args:
        slices: Array (T, m, n)
        observed_mask: Mask (T, m, n)
        baseline_config: Konfigurasi baseline

    Returns:
        Array (T, m, n) terimputasi
    """
    baseline_config.validate()
    slices = np.asarray(slices, dtype=float)
    mask = np.asarray(observed_mask, dtype=bool)

    if baseline_config.method == 'mean':
        return mean_impute(slices, mask, per_slice=baseline_config.per_slice_mean)

    outputs = []
    for t in range(slices.shape[0]):
        if baseline_config.method == 'softimpute_als':
            result = softimpute_als_slice(
                slices[t], mask[t], baseline_config.lam, baseline_config.rank,
                baseline_config.tol, baseline_config.max_iter, baseline_config.seed + t,
            )
        else:
            result = softimpute_svd_slice(
                slices[t], mask[t], baseline_config.lam,
                baseline_config.tol, baseline_config.max_iter,
            )
        if not result.converged:
            logger.debug(f"{baseline_config.method} slice {t} belum konvergen "
                         f"setelah {result.iterations} iterasi")
        outputs.append(result.imputed)
    return np.stack(outputs)
