"""
solver.py - Temporal Matrix Completion dengan Locally Linear Latent Factors

Algoritma utama:
1. Inisialisasi faktor O_t (m x r) dan P_t (n x r) secara acak
2. Update P dengan menyelesaikan persamaan Sylvester (O fixed)
3. Refresh surrogate F^ = W * F + (1 - W) * (O P')
4. Update O dengan persamaan Sylvester (P fixed), refresh surrogate
5. Hitung convergence rate, berhenti jika < tol
6. Output soft-threshold SVD dari O_t P_t'
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import block_diag

from config import config
from dataset import HoldoutSplit, TemporalDataset
from errors import ConfigError, DatasetError, NonFiniteError, ShapeMismatchError
from numerics import solve_spd, solve_sylvester_structured, svd
from operators import curvature_penalty, stack_factors, temporal_gram

logger = logging.getLogger(__name__)

BLOCK_FILL_MODES = ('estimate', 'exact')
FINAL_SVD_MODES = ('slice', 'block')


# =============================================================================
# DOMAIN TYPES
# =============================================================================
@dataclass
class SolverConfig:
    """
    Parameter solver.

    block_fill:
        'estimate' - blok off-diagonal F^ berisi estimasi saat ini O_s P_t'
        'exact'    - blok off-diagonal mengikuti variabel, sehingga saling hilang
        Dengan alpha = beta = 0 hanya mode 'exact' yang tereduksi ke SoftImpute-ALS per slice;
        mode 'estimate' (default) konvergen ke titik lain untuk T > 1.
    final_svd:
        'slice' - soft-threshold SVD per blok diagonal
        'block' - SVD seluruh block matrix O P', lalu ambil blok diagonal
    """

    lam: float = field(default_factory=lambda: config.DEFAULT_LAMBDA)
    alpha: float = field(default_factory=lambda: config.DEFAULT_ALPHA)
    beta: float = field(default_factory=lambda: config.DEFAULT_BETA)
    rank: Optional[int] = None
    max_iter: int = field(default_factory=lambda: config.DEFAULT_MAX_ITER)
    tol: float = field(default_factory=lambda: config.DEFAULT_TOL)
    init_seed: int = field(default_factory=lambda: config.DEFAULT_SEED)
    block_fill: str = 'estimate'
    final_svd: str = 'slice'

    def validate(self) -> None:
        """Raise ConfigError jika parameter tidak valid."""
        if not self.lam > 0:
            raise ConfigError(f"lambda harus > 0, dapat {self.lam}")
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"alpha/beta harus >= 0, dapat {self.alpha}/{self.beta}")
        if not self.tol > 0:
            raise ConfigError(f"tol harus > 0, dapat {self.tol}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter harus >= 1, dapat {self.max_iter}")
        if self.block_fill not in BLOCK_FILL_MODES:
            raise ConfigError(f"block_fill harus salah satu {BLOCK_FILL_MODES}")
        if self.final_svd not in FINAL_SVD_MODES:
            raise ConfigError(f"final_svd harus salah satu {FINAL_SVD_MODES}")

    def resolve_rank(self, m: int, n: int) -> int:
        """Rank efektif: nilai config atau default min(m, n, 15)."""
        rank = self.rank if self.rank is not None else min(m, n, config.DEFAULT_MAX_RANK)
        if not 1 <= rank <= min(m, n):
            raise ConfigError(f"rank harus di [1, {min(m, n)}], dapat {rank}")
        return rank


@dataclass
class FactorState:
    """Faktor laten O (T, m, r), P (T, n, r) dan bookkeeping iterasi."""

    O: np.ndarray
    P: np.ndarray
    iteration: int = 0
    last_rate: float = math.inf
    objective_trace: list[float] = field(default_factory=list)
    rate_trace: list[float] = field(default_factory=list)


@dataclass
class CompletionResult:
    """Hasil run: slice terimputasi + diagnostik."""

    imputed: np.ndarray
    effective_rank: int
    iterations_used: int
    converged: bool
    objective_trace: list[float]
    rate_trace: list[float] = field(default_factory=list)
    slice_ranks: list[int] = field(default_factory=list)
    state: Optional[FactorState] = None


# =============================================================================
# OPERASI DASAR
# =============================================================================
def reconstruct(O: np.ndarray, P: np.ndarray) -> np.ndarray:
    """K_t = O_t P_t' untuk setiap t."""
    return np.einsum('tmr,tnr->tmn', O, P)


def init_factors(solver_config: SolverConfig, T: int, m: int, n: int) -> FactorState:
    """
    Inisialisasi O_t dan P_t dengan Gaussian sd 1/sqrt(r).

    Setara dengan U^, V^ acak dan D^ = I. Urutan draw: semua O lalu semua P.

    Args:
        solver_config: Konfigurasi (rank, init_seed)
        T, m, n: Dimensi

    Returns:
        FactorState awal
    """
    r = solver_config.resolve_rank(m, n)
    rng = np.random.default_rng(solver_config.init_seed)
    sd = 1.0 / math.sqrt(r)
    O = rng.normal(0.0, sd, size=(T, m, r))
    P = rng.normal(0.0, sd, size=(T, n, r))
    return FactorState(O=O, P=P)


def fill_surrogate(
    F: np.ndarray,
    observed_mask: np.ndarray,
    O: np.ndarray,
    P: np.ndarray,
) -> np.ndarray:
    """
    F^_t = W_t * F_t + (1 - W_t) * (O_t P_t').

    Args:
        F: Slice (T, m, n); entry tidak terobservasi tidak dibaca
        observed_mask: Mask (T, m, n)
        O, P: Faktor saat ini

    Returns:
        Surrogate (T, m, n)
    """
    F = np.asarray(F, dtype=float)
    if F.shape != observed_mask.shape:
        raise ShapeMismatchError(f"F {F.shape} dan mask {observed_mask.shape} tidak sejajar")
    return np.where(observed_mask, F, reconstruct(O, P))


def convergence_rate(
    O_new: np.ndarray,
    P_new: np.ndarray,
    O_old: np.ndarray,
    P_old: np.ndarray,
    observed_mask: np.ndarray,
) -> float:
    """
    C = sum_t ||W_t * (K_new - K_old)||^2 / sum_t ||W_t * K_old||^2.

    Returns:
        Rate >= 0, atau inf jika penyebut nol (iterate lama semuanya nol)
    """
    K_new = reconstruct(O_new, P_new)
    K_old = reconstruct(O_old, P_old)
    denominator = float((np.where(observed_mask, K_old, 0.0) ** 2).sum())
    if denominator == 0.0:
        return math.inf
    numerator = float((np.where(observed_mask, K_new - K_old, 0.0) ** 2).sum())
    return numerator / denominator


def objective(
    O: np.ndarray,
    P: np.ndarray,
    F: np.ndarray,
    observed_mask: np.ndarray,
    lam: float,
    alpha: float,
    beta: float,
) -> float:
    """
    Nilai objektif:
    0.5 sum ||W_t*(F_t - O_t P_t')||^2 + 0.5 lam (||O||^2 + ||P||^2)
    + 0.5 alpha curvature(O) + 0.5 beta curvature(P)
    """
    residual = np.where(observed_mask, np.asarray(F, dtype=float) - reconstruct(O, P), 0.0)
    value = 0.5 * float((residual ** 2).sum())
    value += 0.5 * lam * float((O ** 2).sum() + (P ** 2).sum())
    value += 0.5 * alpha * curvature_penalty(O)
    value += 0.5 * beta * curvature_penalty(P)
    return value


def soft_threshold_svd(
    O: np.ndarray,
    P: np.ndarray,
    lam: float,
    mode: str = 'slice',
) -> tuple[np.ndarray, list[int]]:
    """
    Soft-threshold SVD: U S_lam(D) V' dengan S_lam(D)_ii = max(D_ii - lam, 0).

    Args:
        O, P: Faktor (T, m, r), (T, n, r)
        lam: Threshold >= 0
        mode: 'slice' (per blok diagonal) atau 'block' (seluruh block matrix)

    Returns:
        Tuple (slice hasil (T, m, n), rank yang bertahan)
            mode 'slice': satu rank per slice; mode 'block': satu rank
    """
    if lam < 0:
        raise ConfigError(f"lambda threshold harus >= 0, dapat {lam}")
    T, m, _ = O.shape
    n = P.shape[1]

    if mode == 'slice':
        slices = np.empty((T, m, n))
        ranks = []
        for t in range(T):
            decomposition = svd(O[t] @ P[t].T)
            shrunk = np.maximum(decomposition.D - lam, 0.0)
            slices[t] = (decomposition.U * shrunk) @ decomposition.V.T
            ranks.append(int((shrunk > 0).sum()))
        return slices, ranks

    if mode == 'block':
        decomposition = svd(stack_factors(O) @ stack_factors(P).T)
        shrunk = np.maximum(decomposition.D - lam, 0.0)
        full = (decomposition.U * shrunk) @ decomposition.V.T
        slices = np.stack([full[t * m:(t + 1) * m, t * n:(t + 1) * n] for t in range(T)])
        return slices, [int((shrunk > 0).sum())]

    raise ConfigError(f"mode harus salah satu {FINAL_SVD_MODES}")


# =============================================================================
# PERSAMAAN NORMAL FAKTOR
# =============================================================================
def assemble_rhs(fixed: np.ndarray, target: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """
    Kolom-blok ke-t dari O' F^ (bentuk block matrix).

    Blok off-diagonal F^ berisi O_s anchor_t', jadi kontribusinya
    (sum_{s != t} O_s' O_s) anchor_t'.

    Args:
        fixed: Faktor yang ditahan (T, a, r)
        target: Surrogate per slice (T, a, b)
        anchor: Faktor yang diupdate, nilai saat ini (T, b, r)

    Returns:
        Array (T, r, b)
    """
    gram = np.einsum('tar,tas->rs', fixed, fixed)
    own = np.einsum('tar,tas->trs', fixed, fixed)
    rhs = np.einsum('tar,tab->trb', fixed, target)
    rhs += np.einsum('trs,tbs->trb', gram[None] - own, anchor)
    return rhs


def normal_equation_residual(
    fixed: np.ndarray,
    target: np.ndarray,
    anchor: np.ndarray,
    current: np.ndarray,
    weight: float,
    lam: float,
) -> float:
    """
    Residual relatif (lam I + X'X) Y' + Y' (weight L kron I) - X' F^.

    Args:
        fixed: Faktor yang ditahan X (T, a, r)
        target: Surrogate (T, a, b)
        anchor: Faktor di blok off-diagonal (T, b, r)
        current: Solusi Y yang diuji (T, b, r)
        weight: alpha atau beta
        lam: lambda

    Returns:
        ||residual||_F / ||X' F^||_F
    """
    T = fixed.shape[0]
    L = temporal_gram(T)
    gram = np.einsum('tar,tas->rs', fixed, fixed)
    r = gram.shape[0]
    lhs = np.einsum('rs,tbs->trb', lam * np.eye(r) + gram, current)
    lhs += weight * np.einsum('ts,sbr->trb', L, current)
    rhs = assemble_rhs(fixed, target, anchor)
    scale = max(float(np.linalg.norm(rhs)), np.finfo(float).tiny)
    return float(np.linalg.norm(lhs - rhs)) / scale


def _solve_factor(
    fixed: np.ndarray,
    target: np.ndarray,
    anchor: np.ndarray,
    weight: float,
    lam: float,
    block_fill: str,
) -> np.ndarray:
    """
    Selesaikan faktor baru Y (T, b, r) dengan X = fixed ditahan.

    Returns:
        Faktor baru (T, b, r)
    """
    T, _, r = fixed.shape
    b = target.shape[2]
    L = temporal_gram(T)

    if block_fill == 'estimate':
        gram = np.einsum('tar,tas->rs', fixed, fixed)
        rhs = assemble_rhs(fixed, target, anchor)
        C = rhs.transpose(1, 0, 2).reshape(r, T * b)
        X = solve_sylvester_structured(lam * np.eye(r) + gram, L, weight, b, C)
        return X.reshape(r, T, b).transpose(1, 2, 0)

    # 'exact': kontribusi off-diagonal hilang, tiap kolom sistem (T*r) x (T*r)
    own = np.einsum('tar,tas->trs', fixed, fixed)
    system = block_diag(*(lam * np.eye(r) + own)) + weight * np.kron(L, np.eye(r))
    rhs = np.einsum('tar,tab->trb', fixed, target).reshape(T * r, b)
    X = solve_spd(system, rhs)
    return X.reshape(T, r, b).transpose(0, 2, 1)


def stationarity_residuals(
    state: FactorState,
    F: np.ndarray,
    observed_mask: np.ndarray,
    solver_config: SolverConfig,
) -> tuple[float, float]:
    """
    Residual persamaan normal P dan O di iterate saat ini.

    Returns:
        Tuple (residual_P, residual_O)
    """
    F_hat = fill_surrogate(np.where(observed_mask, F, 0.0), observed_mask, state.O, state.P)
    res_P = normal_equation_residual(state.O, F_hat, state.P, state.P,
                                     solver_config.beta, solver_config.lam)
    res_O = normal_equation_residual(state.P, F_hat.transpose(0, 2, 1), state.O, state.O,
                                     solver_config.alpha, solver_config.lam)
    return res_P, res_O


# =============================================================================
# SOLVER
# =============================================================================
class LocallyLinearSolver:
    """Solver matrix completion dengan locally linear constraint pada faktor laten."""

    def __init__(self, solver_config: Optional[SolverConfig] = None):
        """
        Initialize solver.

        Args:
            solver_config: Konfigurasi. Default dari config.
        """
        self.config = solver_config or SolverConfig()
        self.config.validate()

    def init_factors(self, T: int, m: int, n: int) -> FactorState:
        return init_factors(self.config, T, m, n)

    def update_P(self, state: FactorState, F_hat: np.ndarray) -> np.ndarray:
        """
        Update P dengan O fixed:
        (lam I + O'O) P' + P' (beta Q_P' Q_P) = O' F^
        """
        return _solve_factor(state.O, F_hat, state.P, self.config.beta,
                             self.config.lam, self.config.block_fill)

    def update_O(self, state: FactorState, F_hat: np.ndarray) -> np.ndarray:
        """
        Update O dengan P fixed:
        (lam I + P'P) O' + O' (alpha Q_O' Q_O) = P' F^'
        """
        return _solve_factor(state.P, F_hat.transpose(0, 2, 1), state.O, self.config.alpha,
                             self.config.lam, self.config.block_fill)

    def objective(self, state: FactorState, F: np.ndarray, observed_mask: np.ndarray) -> float:
        return objective(state.O, state.P, F, observed_mask,
                         self.config.lam, self.config.alpha, self.config.beta)

    def run(self, dataset: TemporalDataset, split: HoldoutSplit) -> CompletionResult:
        """
        Jalankan algoritma sampai konvergen atau max_iter.

        Args:
            dataset: Dataset (entry di luar observed_mask tidak dibaca)
            split: Holdout split; observed_mask berperan sebagai W

        Returns:
            CompletionResult
        """
        mask = np.asarray(split.observed_mask, dtype=bool)
        if mask.shape != dataset.slices.shape:
            raise ShapeMismatchError("observed_mask tidak sejajar dengan dataset")
        if not mask.any():
            raise DatasetError("Tidak ada entry terobservasi untuk solver")

        T, m, n = dataset.slices.shape
        F = np.where(mask, dataset.slices, 0.0)
        if not np.isfinite(F).all():
            raise NonFiniteError("Entry terobservasi mengandung NaN/Inf")

        state = self.init_factors(T, m, n)
        r = state.O.shape[2]
        logger.info(f"Mulai solver: T={T}, m={m}, n={n}, r={r}, lam={self.config.lam}, "
                    f"alpha={self.config.alpha}, beta={self.config.beta}, "
                    f"block_fill={self.config.block_fill}")

        # Missing diisi 0 sebelum iterasi pertama
        F_hat = F.copy()
        converged = False

        for iteration in range(1, self.config.max_iter + 1):
            O_old, P_old = state.O, state.P

            state.P = self.update_P(state, F_hat)
            F_hat = fill_surrogate(F, mask, state.O, state.P)

            state.O = self.update_O(state, F_hat)
            F_hat = fill_surrogate(F, mask, state.O, state.P)

            rate = convergence_rate(state.O, state.P, O_old, P_old, mask)
            value = self.objective(state, F, mask)

            state.iteration = iteration
            state.last_rate = rate
            state.rate_trace.append(rate)
            state.objective_trace.append(value)
            logger.debug(f"Iterasi {iteration}: rate={rate:.3e}, objective={value:.6f}")

            if rate < self.config.tol:
                converged = True
                break

        if not (np.isfinite(state.O).all() and np.isfinite(state.P).all()):
            raise NonFiniteError("Faktor laten menjadi non-finite")

        imputed, ranks = soft_threshold_svd(state.O, state.P, self.config.lam,
                                            self.config.final_svd)

        if converged:
            logger.info(f"Konvergen setelah {state.iteration} iterasi (rate={state.last_rate:.3e})")
        else:
            logger.warning(f"Belum konvergen setelah {state.iteration} iterasi "
                           f"(rate={state.last_rate:.3e})")

        return CompletionResult(
            imputed=imputed,
            effective_rank=max(ranks),
            iterations_used=state.iteration,
            converged=converged,
            objective_trace=list(state.objective_trace),
            rate_trace=list(state.rate_trace),
            slice_ranks=ranks,
            state=state,
        )
