"""
config.py - Konfigurasi dan Environment Loader

Memuat semua konfigurasi dari file .env dengan default values.
Default solver mengikuti protokol eksperimen: lambda 4, alpha 1e-3,
beta 1e-3, threshold konvergensi 1e-5.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env file
env_path = Path(__file__).parent / '.env'
load_dotenv(env_path)


def parse_fractions(raw: str) -> list[float]:
    """Parse daftar fraksi dari string '0.9,0.8,...'."""
    return [float(part) for part in raw.split(',') if part.strip()]


class Config:
    """Konfigurasi aplikasi dari environment variables."""

    # Logging
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO')
    LOG_DIR: str = os.getenv('LOG_DIR', 'logs')
    LOG_TO_FILE: bool = os.getenv('LOG_TO_FILE', 'true').lower() in ('1', 'true', 'yes')

    # Solver defaults
    DEFAULT_LAMBDA: float = float(os.getenv('LLMC_LAMBDA', '4.0'))
    DEFAULT_ALPHA: float = float(os.getenv('LLMC_ALPHA', '1e-3'))
    DEFAULT_BETA: float = float(os.getenv('LLMC_BETA', '1e-3'))
    DEFAULT_TOL: float = float(os.getenv('LLMC_TOL', '1e-5'))
    DEFAULT_MAX_ITER: int = int(os.getenv('LLMC_MAX_ITER', '500'))
    DEFAULT_MAX_RANK: int = int(os.getenv('LLMC_MAX_RANK', '15'))
    DEFAULT_SEED: int = int(os.getenv('LLMC_SEED', '0'))

    # Benchmark protocol
    DEFAULT_FRACTIONS: list[float] = parse_fractions(
        os.getenv('LLMC_FRACTIONS', '0.9,0.8,0.7,0.6,0.5,0.4')
    )
    DEFAULT_TRIALS: int = int(os.getenv('LLMC_TRIALS', '5'))

    # Database hasil benchmark
    RESULTS_DB_PATH: str = os.getenv('RESULTS_DB_PATH', 'llmc_results.db')

    # Token missing di file CSV
    MISSING_TOKEN: str = os.getenv('MISSING_TOKEN', 'NA')

    @classmethod
    def validate(cls) -> list[str]:
        """Validasi konfigurasi. Return list error jika ada."""
        errors = []

        if cls.DEFAULT_LAMBDA <= 0:
            errors.append("LLMC_LAMBDA harus > 0")

        if cls.DEFAULT_ALPHA < 0 or cls.DEFAULT_BETA < 0:
            errors.append("LLMC_ALPHA dan LLMC_BETA harus >= 0")

        if cls.DEFAULT_TOL <= 0:
            errors.append("LLMC_TOL harus > 0")

        if cls.DEFAULT_MAX_ITER < 1:
            errors.append("LLMC_MAX_ITER harus >= 1")

        if cls.DEFAULT_MAX_RANK < 1:
            errors.append("LLMC_MAX_RANK harus >= 1")

        if not cls.DEFAULT_FRACTIONS or any(not 0 < f <= 1 for f in cls.DEFAULT_FRACTIONS):
            errors.append("LLMC_FRACTIONS harus berisi nilai di (0, 1]")

        if cls.DEFAULT_TRIALS < 1:
            errors.append("LLMC_TRIALS harus >= 1")

        return errors

    @classmethod
    def print_config(cls) -> None:
        """Print konfigurasi untuk debugging."""
        print("=" * 50)
        print("KONFIGURASI LLMC")
        print("=" * 50)
        print(f"Lambda: {cls.DEFAULT_LAMBDA}")
        print(f"Alpha / Beta: {cls.DEFAULT_ALPHA} / {cls.DEFAULT_BETA}")
        print(f"Tol: {cls.DEFAULT_TOL}")
        print(f"Max Iter: {cls.DEFAULT_MAX_ITER}")
        print(f"Max Rank: {cls.DEFAULT_MAX_RANK}")
        print(f"Seed: {cls.DEFAULT_SEED}")
        print(f"Fractions: {','.join(str(f) for f in cls.DEFAULT_FRACTIONS)}")
        print(f"Trials: {cls.DEFAULT_TRIALS}")
        print(f"Results DB: {cls.RESULTS_DB_PATH}")
        print(f"Log Level: {cls.LOG_LEVEL}")
        print("=" * 50)


# Singleton instance
config = Config()
