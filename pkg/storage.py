"""
storage.py - SQLite Storage untuk Hasil Benchmark

Menyimpan:
- runs: satu baris per eksekusi benchmark (dataset, seed, plan)
- cell_results: hasil mentah per (metode, fraction, trial), termasuk sel gagal
"""

import json
import sqlite3
from datetime import datetime, timedelta
from typing import Any, Optional

from config import config


class ResultStore:
    """SQLite storage manager untuk hasil benchmark."""

    def __init__(self, db_path: Optional[str] = None):
        """
        Initialize storage.

        Args:
            db_path: Path ke database file. Default dari config.
        """
        self.db_path = db_path or config.RESULTS_DB_PATH
        self._init_db()

    def _get_connection(self) -> sqlite3.Connection:
        """Get database connection dengan row factory."""
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        return conn

    def _init_db(self) -> None:
        """Initialize database tables."""
        conn = self._get_connection()
        cursor = conn.cursor()

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS runs (
                run_id INTEGER PRIMARY KEY AUTOINCREMENT,
                dataset_id TEXT,
                base_seed INTEGER NOT NULL,
                plan_json TEXT NOT NULL,
                created_at TIMESTAMP NOT NULL
            )
        ''')

        cursor.execute('''
            CREATE TABLE IF NOT EXISTS cell_results (
                id INTEGER PRIMARY KEY AUTOINCREMENT,
                run_id INTEGER NOT NULL REFERENCES runs(run_id),
                method TEXT NOT NULL,
                fraction REAL NOT NULL,
                trial INTEGER NOT NULL,
                seed INTEGER NOT NULL,
                rmse REAL,
                status TEXT NOT NULL,
                error_message TEXT,
                iterations INTEGER,
                converged INTEGER,
                UNIQUE(run_id, method, fraction, trial)
            )
        ''')

        cursor.execute('''
            CREATE INDEX IF NOT EXISTS idx_cell_run
            ON cell_results(run_id, method)
        ''')

        conn.commit()
        conn.close()

    def start_run(self, dataset_id: str, base_seed: int, plan: dict[str, Any]) -> int:
        """
        Catat run baru.

        Args:
            dataset_id: Label dataset
            base_seed: Seed dasar plan
            plan: Plan dalam bentuk dict (disimpan sebagai JSON)

        Returns:
            run_id
        """
        conn = self._get_connection()
        cursor = conn.cursor()

        try:
            cursor.execute(
                'INSERT INTO runs (dataset_id, base_seed, plan_json, created_at) VALUES (?, ?, ?, ?)',
                (dataset_id, base_seed, json.dumps(plan, sort_keys=True), datetime.now().isoformat())
            )
            conn.commit()
            return int(cursor.lastrowid)
        finally:
            conn.close()

    def record_cell(self, run_id: int, outcome) -> None:
        """
        Simpan satu CellOutcome. RMSE NaN disimpan sebagai NULL.

        Args:
            run_id: ID run
            outcome: CellOutcome dari harness
        """
        rmse = outcome.rmse if outcome.status == 'ok' else None
        converged = None if outcome.converged is None else int(outcome.converged)

        conn = self._get_connection()
        cursor = conn.cursor()

        try:
            cursor.execute(
                '''INSERT OR REPLACE INTO cell_results
                   (run_id, method, fraction, trial, seed, rmse, status,
                    error_message, iterations, converged)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)''',
                (run_id, outcome.method, float(outcome.fraction), outcome.trial, outcome.seed,
                 rmse, outcome.status, outcome.error or None, outcome.iterations, converged)
            )
            conn.commit()
        finally:
            conn.close()

    def get_run_cells(self, run_id: int) -> list[dict]:
        """
        Ambil semua sel satu run, urut metode, fraction, trial.

        Returns:
            List dict
        """
        conn = self._get_connection()
        cursor = conn.cursor()

        cursor.execute(
            '''SELECT method, fraction, trial, seed, rmse, status, error_message,
                      iterations, converged
               FROM cell_results WHERE run_id = ?
               ORDER BY method, fraction, trial''',
            (run_id,)
        )
        rows = [dict(row) for row in cursor.fetchall()]
        conn.close()

        return rows

    def get_failures(self, run_id: int) -> list[dict]:
        """Sel gagal saja."""
        return [row for row in self.get_run_cells(run_id) if row['status'] != 'ok']

    def get_stats(self) -> dict:
        """
        Dapatkan statistik storage.

        Returns:
            Dict dengan statistik
        """
        conn = self._get_connection()
        cursor = conn.cursor()

        cursor.execute('SELECT COUNT(*) FROM runs')
        total_runs = cursor.fetchone()[0]

        cursor.execute('SELECT COUNT(*) FROM cell_results')
        total_cells = cursor.fetchone()[0]

        cursor.execute("SELECT COUNT(*) FROM cell_results WHERE status != 'ok'")
        failures = cursor.fetchone()[0]

        cursor.execute(
            'SELECT method, COUNT(*) as count FROM cell_results GROUP BY method'
        )
        by_method = {row['method']: row['count'] for row in cursor.fetchall()}

        conn.close()

        return {
            'total_runs': total_runs,
            'total_cells': total_cells,
            'failures': failures,
            'by_method': by_method,
        }

    def cleanup_old_runs(self, days: int = 30) -> int:
        """
        Hapus run lama beserta sel-selnya.

        Args:
            days: Hapus run lebih tua dari X hari

        Returns:
            Jumlah baris yang dihapus
        """
        conn = self._get_connection()
        cursor = conn.cursor()

        cutoff = datetime.now() - timedelta(days=days)

        cursor.execute(
            '''DELETE FROM cell_results WHERE run_id IN
               (SELECT run_id FROM runs WHERE created_at < ?)''',
            (cutoff.isoformat(),)
        )
        deleted_cells = cursor.rowcount

        cursor.execute('DELETE FROM runs WHERE created_at < ?', (cutoff.isoformat(),))
        deleted_runs = cursor.rowcount

        conn.commit()
        conn.close()

        return deleted_cells + deleted_runs
