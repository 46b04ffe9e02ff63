"""
errors.py - Exception Hierarchy

Semua error domain turunan dari LLMCError, sekaligus ValueError
(atau LinAlgError untuk kegagalan numerik) supaya bisa di-catch per kategori.
"""

import numpy as np


class LLMCError(Exception):
    """Base class untuk semua error LLMC."""


class ConfigError(LLMCError, ValueError):
    """Parameter konfigurasi tidak valid."""


class DatasetError(LLMCError, ValueError):
    """File dataset rusak atau input dataset tidak valid."""


class ShapeMismatchError(LLMCError, ValueError):
    """Dimensi matriks tidak konsisten."""


class NonFiniteError(LLMCError, ValueError):
    """Input atau output mengandung NaN/Inf."""


class EmptyEvaluationError(LLMCError, ValueError):
    """Mask evaluasi kosong (N_miss = 0)."""


class NotSymmetricError(LLMCError, np.linalg.LinAlgError):
    """Matriks tidak simetris."""


class NotPositiveDefiniteError(LLMCError, np.linalg.LinAlgError):
    """Matriks tidak positive definite."""


class SingularSystemError(LLMCError, np.linalg.LinAlgError):
    """Sistem linear singular."""
