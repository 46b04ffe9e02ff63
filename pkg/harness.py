"""
harness.py - Orkestrasi Benchmark, RMSE, dan Result Table

Alur per sel (fraction x trial):
1. generate holdout (seed diturunkan dari base_seed, index fraction, index trial)
2. normalisasi dengan statistik entry yang terlihat
3. sembunyikan entry eval (jadi NaN) lalu jalankan tiap metode
4. hitung RMSE di entry eval (ruang ternormalisasi, atau ruang asli)
"""

import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from baselines import BaselineConfig, impute_slices
from config import config
from dataset import (
    HoldoutSplit,
    TemporalDataset,
    denormalize,
    generate_holdout,
    hide_entries,
    normalize,
)
from errors import ConfigError, EmptyEvaluationError, LLMCError, NonFiniteError, ShapeMismatchError
from solver import LocallyLinearSolver, SolverConfig

logger = logging.getLogger(__name__)

METHOD_IDS = ('llmc', 'mean', 'softimpute-als', 'softimpute-svd')

# Nama parameter di spec file -> nama field config
PARAM_ALIASES = {
    'lambda': 'lam',
    'max-iter': 'max_iter',
    'block-fill': 'block_fill',
    'final-svd': 'final_svd',
    'per-slice': 'per_slice_mean',
    'per_slice': 'per_slice_mean',
}


# =============================================================================
# DOMAIN TYPES
# =============================================================================
@dataclass
class MethodSpec:
    """Satu baris result table: metode + parameter."""

    name: str
    method: str
    params: dict[str, Any] = field(default_factory=dict)
    group: str = ''

    def __post_init__(self):
        if self.method not in METHOD_IDS:
            raise ConfigError(f"Metode '{self.method}' tidak dikenal, pilih dari {METHOD_IDS}")
        self.params = {PARAM_ALIASES.get(k, k): v for k, v in self.params.items()}
        if not self.group:
            self.group = self.name


@dataclass
class ExperimentPlan:
    """Rencana benchmark."""

    methods: list[MethodSpec]
    fractions: list[float] = field(default_factory=lambda: list(config.DEFAULT_FRACTIONS))
    trials_per_fraction: int = field(default_factory=lambda: config.DEFAULT_TRIALS)
    base_seed: int = field(default_factory=lambda: config.DEFAULT_SEED)
    raw_space: bool = False
    best_of: bool = False

    def validate(self) -> None:
        if not self.methods:
            raise ConfigError("Plan tidak punya metode")
        if not self.fractions or any(not 0 < f <= 1 for f in self.fractions):
            raise ConfigError(f"fractions harus di (0, 1], dapat {self.fractions}")
        if self.trials_per_fraction < 1:
            raise ConfigError("trials_per_fraction harus >= 1")
        names = [spec.name for spec in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"Nama metode duplikat: {names}")


@dataclass
class CellOutcome:
    """Hasil satu (metode, fraction, trial)."""

    method: str
    fraction: float
    trial: int
    seed: int
    rmse: float
    status: str = 'ok'
    error: str = ''
    iterations: Optional[int] = None
    converged: Optional[bool] = None


@dataclass
class ResultTable:
    """Grid metode x fraction; tiap sel menyimpan nilai per trial."""

    methods: list[str]
    fractions: list[float]
    values: dict[tuple[str, float], list[float]] = field(default_factory=dict)
    flagged: set[tuple[str, float]] = field(default_factory=set)
    outcomes: list[CellOutcome] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def cell(self, method: str, fraction: float) -> float:
        """Mean RMSE sel, NaN jika sel di-flag atau kosong."""
        if (method, fraction) in self.flagged:
            return math.nan
        trials = self.values.get((method, fraction), [])
        if not trials:
            return math.nan
        return float(np.mean(trials))

    def row(self, method: str) -> list[float]:
        return [self.cell(method, fraction) for fraction in self.fractions]


# =============================================================================
# METRIK
# =============================================================================
def rmse(imputed: np.ndarray, truth: np.ndarray, eval_mask: np.ndarray) -> float:
    """
    E = (sum_{eval} (F_sol - F)^2 / N_miss)^0.5

    Args:
        imputed: Solusi (T, m, n)
        truth: Ground truth (T, m, n); hanya entry eval yang dibaca
        eval_mask: Entry yang disembunyikan

    Returns:
        RMSE
    """
    imputed = np.asarray(imputed, dtype=float)
    truth = np.asarray(truth, dtype=float)
    eval_mask = np.asarray(eval_mask, dtype=bool)
    if not imputed.shape == truth.shape == eval_mask.shape:
        raise ShapeMismatchError(
            f"Dimensi tidak cocok: imputed {imputed.shape}, truth {truth.shape}, mask {eval_mask.shape}"
        )
    n_miss = int(eval_mask.sum())
    if n_miss == 0:
        raise EmptyEvaluationError("Mask evaluasi kosong (N_miss = 0)")
    diff = np.where(eval_mask, imputed - truth, 0.0)
    return math.sqrt(float((diff ** 2).sum()) / n_miss)


def derive_seed(base_seed: int, fraction_index: int, trial: int) -> int:
    """Seed holdout deterministik dari (base_seed, index fraction, index trial)."""
    sequence = np.random.SeedSequence([base_seed, fraction_index, trial])
    return int(sequence.generate_state(1)[0])


# =============================================================================
# SPEC FILE METODE
# =============================================================================
def _variant_name(base: str, combo: dict[str, Any]) -> str:
    inner = ';'.join(f'{k}={v}' for k, v in combo.items())
    return f'{base}({inner})'


def parse_method_specs(entries: list[dict]) -> list[MethodSpec]:
    """
    Ubah daftar entry JSON menjadi MethodSpec.

    Entry: {"name", "method", "params": {...}, "grid": {"lambda": [..], ...}}
    Grid di-expand menjadi satu varian per kombinasi, dengan group = name.
    """
    specs = []
    for entry in entries:
        if 'method' not in entry:
            raise ConfigError(f"Entry metode tanpa field 'method': {entry}")
        method = entry['method']
        name = entry.get('name', method)
        params = dict(entry.get('params', {}))
        grid = entry.get('grid', {})

        if not grid:
            specs.append(MethodSpec(name=name, method=method, params=params))
            continue

        keys = list(grid)
        for values in product(*(grid[k] for k in keys)):
            combo = dict(zip(keys, values))
            specs.append(MethodSpec(
                name=_variant_name(name, combo),
                method=method,
                params={**params, **combo},
                group=name,
            ))
    return specs


def default_method_specs() -> list[MethodSpec]:
    """Satu baris per metode dengan parameter default."""
    return [MethodSpec(name=method_id, method=method_id) for method_id in METHOD_IDS]


def load_method_specs(path: str | Path) -> list[MethodSpec]:
    """Load spec file metode (JSON list)."""
    try:
        entries = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Gagal membaca spec metode {path}: {e}") from e
    if not isinstance(entries, list):
        raise ConfigError("Spec metode harus berupa JSON list")
    return parse_method_specs(entries)


# =============================================================================
# EKSEKUSI
# =============================================================================
def run_method(
    spec: MethodSpec,
    visible: TemporalDataset,
    split: HoldoutSplit,
    seed: int,
) -> tuple[np.ndarray, dict[str, Any]]:
    """
    Jalankan satu metode pada dataset yang entry eval-nya sudah disembunyikan.

    Returns:
        Tuple (slice terimputasi, diagnostik)
    """
    params = dict(spec.params)
    params.setdefault('seed', seed)

    if spec.method == 'llmc':
        params['init_seed'] = params.pop('seed')
        try:
            solver_config = SolverConfig(**params)
        except TypeError as e:
            raise ConfigError(f"Parameter tidak valid untuk {spec.name}: {e}") from e
        result = LocallyLinearSolver(solver_config).run(visible, split)
        return result.imputed, {'iterations': result.iterations_used, 'converged': result.converged}

    try:
        baseline_config = BaselineConfig(method=spec.method.replace('-', '_'), **params)
    except TypeError as e:
        raise ConfigError(f"Parameter tidak valid untuk {spec.name}: {e}") from e
    imputed = impute_slices(visible.slices, split.observed_mask, baseline_config)
    return imputed, {}


def _run_unit(
    dataset: TemporalDataset,
    plan: ExperimentPlan,
    fraction_index: int,
    trial: int,
) -> list[CellOutcome]:
    """Satu holdout, semua metode."""
    fraction = plan.fractions[fraction_index]
    seed = derive_seed(plan.base_seed, fraction_index, trial)

    try:
        split = generate_holdout(dataset, fraction, seed)
        normalized, stats = normalize(dataset, split)
        visible = hide_entries(normalized, split)
    except LLMCError as e:
        # Holdout tidak bisa dipakai: semua metode di unit ini di-flag
        logger.warning(f"Holdout gagal: fraction={fraction} trial={trial}: {e}")
        return [
            CellOutcome(method=spec.name, fraction=fraction, trial=trial, seed=seed,
                        rmse=math.nan, status='failed', error=f'{type(e).__name__}: {e}')
            for spec in plan.methods
        ]

    outcomes = []
    for spec in plan.methods:
        try:
            imputed, diagnostics = run_method(spec, visible, split, seed)
            if not np.isfinite(imputed).all():
                raise NonFiniteError("Output metode non-finite")
            if plan.raw_space:
                error = rmse(denormalize(imputed, stats), dataset.slices, split.eval_mask)
            else:
                error = rmse(imputed, normalized.slices, split.eval_mask)
            outcomes.append(CellOutcome(
                method=spec.name, fraction=fraction, trial=trial, seed=seed, rmse=error,
                iterations=diagnostics.get('iterations'), converged=diagnostics.get('converged'),
            ))
            logger.debug(f"{spec.name} fraction={fraction} trial={trial}: rmse={error:.6f}")
        except (LLMCError, np.linalg.LinAlgError, ValueError) as e:
            logger.warning(f"Sel gagal: {spec.name} fraction={fraction} trial={trial}: {e}")
            outcomes.append(CellOutcome(
                method=spec.name, fraction=fraction, trial=trial, seed=seed,
                rmse=math.nan, status='failed', error=f'{type(e).__name__}: {e}',
            ))
    return outcomes


def run_experiment(
    dataset: TemporalDataset,
    plan: ExperimentPlan,
    store=None,
    dataset_id: str = '',
    workers: int = 1,
    progress: bool = False,
) -> ResultTable:
    """
    Jalankan seluruh sweep fraction x trial x metode.

    Args:
        dataset: Dataset (ground truth)
        plan: Rencana eksperimen
        store: ResultStore opsional untuk menyimpan hasil per sel
        dataset_id: Label dataset untuk metadata
        workers: Jumlah thread; hasil identik dengan eksekusi sekuensial
        progress: Tampilkan progress bar

    Returns:
        ResultTable
    """
    plan.validate()
    units = [(fi, trial) for fi in range(len(plan.fractions))
             for trial in range(plan.trials_per_fraction)]

    run_id = None
    if store is not None:
        run_id = store.start_run(dataset_id, plan.base_seed, plan_to_dict(plan))

    logger.info(f"Benchmark mulai: {len(plan.methods)} metode, {len(plan.fractions)} fraction, "
                f"{plan.trials_per_fraction} trial")

    def job(unit: tuple[int, int]) -> list[CellOutcome]:
        return _run_unit(dataset, plan, *unit)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(tqdm(executor.map(job, units), total=len(units),
                                disable=not progress, desc='benchmark'))
    else:
        results = [job(unit) for unit in tqdm(units, disable=not progress, desc='benchmark')]

    table = ResultTable(
        methods=[spec.name for spec in plan.methods],
        fractions=list(plan.fractions),
        metadata={
            'dataset_id': dataset_id,
            'base_seed': plan.base_seed,
            'trials_per_fraction': plan.trials_per_fraction,
            'raw_space': plan.raw_space,
            'configs': {spec.name: {'method': spec.method, **spec.params} for spec in plan.methods},
            'groups': {spec.name: spec.group for spec in plan.methods},
        },
    )
    for outcomes in results:
        for outcome in outcomes:
            table.outcomes.append(outcome)
            key = (outcome.method, outcome.fraction)
            if outcome.status == 'ok':
                table.values.setdefault(key, []).append(outcome.rmse)
            else:
                table.flagged.add(key)
            if store is not None:
                store.record_cell(run_id, outcome)

    table.metadata['seeds'] = sorted({o.seed for o in table.outcomes})
    if run_id is not None:
        table.metadata['run_id'] = run_id

    failures = sum(1 for o in table.outcomes if o.status != 'ok')
    if failures:
        logger.warning(f"Benchmark selesai dengan {failures} sel gagal")
    else:
        logger.info("Benchmark selesai tanpa kegagalan")

    if plan.best_of:
        table = best_of(table)
    return table


def plan_to_dict(plan: ExperimentPlan) -> dict[str, Any]:
    return {
        'fractions': plan.fractions,
        'trials_per_fraction': plan.trials_per_fraction,
        'base_seed': plan.base_seed,
        'raw_space': plan.raw_space,
        'best_of': plan.best_of,
        'methods': [{'name': s.name, 'method': s.method, 'params': s.params, 'group': s.group}
                    for s in plan.methods],
    }


def best_of(table: ResultTable) -> ResultTable:
    """
    Reduksi best-of: per group, ambil varian dengan mean RMSE terendah di semua fraction.

    Returns:
        ResultTable baru dengan satu baris per group (data mentah tetap di outcomes)
    """
    groups: dict[str, list[str]] = {}
    for name in table.methods:
        groups.setdefault(table.metadata.get('groups', {}).get(name, name), []).append(name)

    def score(name: str) -> float:
        row = [v for v in table.row(name) if math.isfinite(v)]
        return float(np.mean(row)) if len(row) == len(table.fractions) else math.inf

    chosen = {group: min(names, key=score) for group, names in groups.items()}

    reduced = ResultTable(
        methods=list(chosen),
        fractions=list(table.fractions),
        outcomes=list(table.outcomes),
        metadata={**table.metadata, 'best_of': chosen},
    )
    for group, name in chosen.items():
        for fraction in table.fractions:
            if (name, fraction) in table.values:
                reduced.values[(group, fraction)] = list(table.values[(name, fraction)])
            if (name, fraction) in table.flagged:
                reduced.flagged.add((group, fraction))
    return reduced


# =============================================================================
# OUTPUT TABLE
# =============================================================================
def _format_fraction(fraction: float) -> str:
    return repr(float(fraction))


def _format_value(value: float) -> str:
    return f'{value:.6f}' if math.isfinite(value) else 'NA'


def emit_table(table: ResultTable, fmt: str = 'csv') -> str:
    """
    Render result table.

    Args:
        table: ResultTable
        fmt: 'csv' atau 'markdown' (minimum per kolom ditebalkan)

    Returns:
        Teks table (tanpa newline di akhir)
    """
    header = [_format_fraction(f) for f in table.fractions]

    if fmt == 'csv':
        lines = [','.join(['method', *header])]
        for method in table.methods:
            lines.append(','.join([method, *(_format_value(v) for v in table.row(method))]))
        return '\n'.join(lines)

    if fmt == 'markdown':
        rows = {method: table.row(method) for method in table.methods}
        best = {}
        for j, fraction in enumerate(table.fractions):
            finite = [(rows[m][j], i) for i, m in enumerate(table.methods) if math.isfinite(rows[m][j])]
            if finite:
                best[fraction] = table.methods[min(finite)[1]]

        cells = [['method', *header]]
        for method in table.methods:
            line = [method]
            for fraction, value in zip(table.fractions, rows[method]):
                text = _format_value(value)
                line.append(f'**{text}**' if best.get(fraction) == method else text)
            cells.append(line)

        widths = [max(len(row[j]) for row in cells) for j in range(len(cells[0]))]
        lines = ['| ' + ' | '.join(c.ljust(w) for c, w in zip(cells[0], widths)) + ' |']
        lines.append('|' + '|'.join(['-' * (widths[0] + 2)] +
                                    ['-' * (w + 1) + ':' for w in widths[1:]]) + '|')
        for row in cells[1:]:
            lines.append('| ' + ' | '.join([row[0].ljust(widths[0])] +
                                           [c.rjust(w) for c, w in zip(row[1:], widths[1:])]) + ' |')
        return '\n'.join(lines)

    raise ConfigError(f"Format table tidak dikenal: '{fmt}' (pilih csv atau markdown)")


def emit_trials_csv(table: ResultTable) -> str:
    """CSV long-format per trial (plot-ready)."""
    lines = ['method,fraction,trial,seed,rmse,status']
    for o in table.outcomes:
        lines.append(f'{o.method},{_format_fraction(o.fraction)},{o.trial},{o.seed},'
                     f'{_format_value(o.rmse)},{o.status}')
    return '\n'.join(lines)


def parse_table_csv(text: str) -> ResultTable:
    """
    Parse CSV hasil emit_table kembali menjadi ResultTable (satu nilai per sel).
    """
    try:
        frame = pd.read_csv(io.StringIO(text), na_values=['NA'], keep_default_na=False,
                            dtype={'method': str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigError(f"CSV table tidak valid: {e}") from e
    if frame.columns.empty or frame.columns[0] != 'method':
        raise ConfigError("CSV table harus diawali kolom 'method'")

    try:
        fractions = [float(c) for c in frame.columns[1:]]
    except ValueError as e:
        raise ConfigError(f"Header fraction tidak numerik: {e}") from e

    table = ResultTable(methods=[str(m) for m in frame['method']], fractions=fractions,
                        metadata={'parsed': True})
    for _, record in frame.iterrows():
        for column, fraction in zip(frame.columns[1:], fractions):
            try:
                value = float(record[column])
            except (TypeError, ValueError) as e:
                raise ConfigError(
                    f"Sel non-numerik '{record[column]}' di baris {record['method']}, "
                    f"kolom {column}"
                ) from e
            key = (str(record['method']), fraction)
            if math.isnan(value):
                table.flagged.add(key)
            else:
                table.values[key] = [value]
    return table
