"""
test_storage.py - Unit Tests untuk ResultStore (SQLite)
"""

import math
import sys
from pathlib import Path

import pytest

# Add parent directory to path untuk import module
sys.path.insert(0, str(Path(__file__).parent.parent))

from harness import CellOutcome
from storage import ResultStore


# =============================================================================
# FIXTURES
# =============================================================================
@pytest.fixture
def store(tmp_path):
    """Database baru untuk setiap test."""
    return ResultStore(str(tmp_path / 'results.db'))


@pytest.fixture
def run_id(store):
    return store.start_run('synthetic', 7, {'fractions': [0.9, 0.5]})


# =============================================================================
# TESTS
# =============================================================================
class TestResultStore:
    """Tests untuk penyimpanan hasil benchmark."""

    def test_run_ids_increase(self, store):
        first = store.start_run('a', 0, {})
        second = store.start_run('b', 0, {})
        assert second > first

    def test_cells_ordered(self, store, run_id):
        store.record_cell(run_id, CellOutcome('mean', 0.9, 1, 11, 0.9))
        store.record_cell(run_id, CellOutcome('llmc', 0.9, 0, 10, 0.5, iterations=12,
                                              converged=True))
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 12, 1.1))

        rows = store.get_run_cells(run_id)
        assert [(r['method'], r['fraction'], r['trial']) for r in rows] == [
            ('llmc', 0.9, 0), ('mean', 0.5, 0), ('mean', 0.9, 1),
        ]
        assert rows[0]['iterations'] == 12
        assert rows[0]['converged'] == 1
        assert rows[1]['converged'] is None

    def test_failure_stored_without_rmse(self, store, run_id):
        store.record_cell(run_id, CellOutcome('llmc', 0.5, 0, 3, math.nan, status='failed',
                                              error='NonFiniteError: boom'))
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 3, 1.0))

        failures = store.get_failures(run_id)
        assert len(failures) == 1
        assert failures[0]['rmse'] is None
        assert failures[0]['error_message'] == 'NonFiniteError: boom'

    def test_record_is_idempotent(self, store, run_id):
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 3, 1.0))
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 3, 2.0))

        rows = store.get_run_cells(run_id)
        assert len(rows) == 1
        assert rows[0]['rmse'] == 2.0

    def test_stats(self, store, run_id):
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 3, 1.0))
        store.record_cell(run_id, CellOutcome('llmc', 0.5, 0, 3, math.nan, status='failed'))

        stats = store.get_stats()
        assert stats['total_runs'] == 1
        assert stats['total_cells'] == 2
        assert stats['failures'] == 1
        assert stats['by_method'] == {'llmc': 1, 'mean': 1}

    def test_cleanup_old_runs(self, store, run_id):
        store.record_cell(run_id, CellOutcome('mean', 0.5, 0, 3, 1.0))

        assert store.cleanup_old_runs(days=30) == 0
        assert store.cleanup_old_runs(days=-1) == 2
        assert store.get_stats()['total_runs'] == 0
