"""
main.py - Main Entrypoint CLI LLMC Imputer

Perintah:
1. synth      - buat dataset sintetis (manifest + slice CSV)
2. impute     - imputasi satu dataset, tulis slice terimputasi + diagnostics.json
3. benchmark  - sweep fraction x trial x metode, tulis result table CSV
4. table      - render result table CSV ke csv/markdown
5. config     - tampilkan konfigurasi efektif

Exit code: 0 sukses, 1 error domain (satu baris JSON di stderr), 2 salah pakai CLI.
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional

# Fix untuk folder dengan spasi di nama
sys.path.insert(0, str(Path(__file__).parent))

import numpy as np

from config import config, parse_fractions
from dataset import denormalize, full_split, load_dataset, normalize, save_dataset, synthesize
from errors import ConfigError, LLMCError, NonFiniteError
from harness import (
    METHOD_IDS,
    ExperimentPlan,
    MethodSpec,
    default_method_specs,
    emit_table,
    emit_trials_csv,
    load_method_specs,
    parse_table_csv,
    run_experiment,
    run_method,
)
from solver import LocallyLinearSolver, SolverConfig, stationarity_residuals
from storage import ResultStore

logger = logging.getLogger(__name__)

OUTPUT_FLOAT_FORMAT = '%.6f'
DIAGNOSTICS_NAME = 'diagnostics.json'


# =============================================================================
# LOGGING SETUP
# =============================================================================
def setup_logging() -> logging.Logger:
    """Setup logging ke stderr dan (opsional) file. stdout khusus output data."""
    log_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    date_format = '%Y-%m-%d %H:%M:%S'

    root = logging.getLogger()
    root.setLevel(getattr(logging, config.LOG_LEVEL.upper(), logging.INFO))

    # Handler lama dari pemanggilan sebelumnya diganti
    for handler in list(root.handlers):
        if handler.get_name() in ('llmc-console', 'llmc-file'):
            root.removeHandler(handler)
            handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.set_name('llmc-console')
    console_handler.setFormatter(logging.Formatter(log_format, date_format))
    root.addHandler(console_handler)

    if config.LOG_TO_FILE:
        log_dir = Path(config.LOG_DIR)
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / 'llmc.log', encoding='utf-8')
        file_handler.set_name('llmc-file')
        file_handler.setFormatter(logging.Formatter(log_format, date_format))
        root.addHandler(file_handler)

    return logging.getLogger(__name__)


# =============================================================================
# ARGUMENT PARSING
# =============================================================================
def _fraction_list(raw: str) -> list[float]:
    try:
        fractions = parse_fractions(raw)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"fractions tidak valid: {raw}") from e
    if not fractions:
        raise argparse.ArgumentTypeError("fractions kosong")
    return fractions


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='llmc',
        description='Temporal matrix completion dengan locally linear latent factors',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', help='Buat dataset sintetis')
    synth.add_argument('--T', type=int, required=True)
    synth.add_argument('--m', type=int, required=True)
    synth.add_argument('--n', type=int, required=True)
    synth.add_argument('--rank', type=int, required=True)
    synth.add_argument('--curvature', type=float, default=0.0)
    synth.add_argument('--noise', type=float, default=0.0)
    synth.add_argument('--seed', type=int, default=config.DEFAULT_SEED)
    synth.add_argument('--out', required=True, help='Folder tujuan')

    impute = commands.add_parser('impute', help='Imputasi satu dataset')
    impute.add_argument('--data', required=True, help='Path manifest.json')
    impute.add_argument('--method', choices=METHOD_IDS, default='llmc')
    impute.add_argument('--lambda', dest='lam', type=float, default=config.DEFAULT_LAMBDA)
    impute.add_argument('--alpha', type=float, default=config.DEFAULT_ALPHA)
    impute.add_argument('--beta', type=float, default=config.DEFAULT_BETA)
    impute.add_argument('--rank', type=int, default=None)
    impute.add_argument('--tol', type=float, default=config.DEFAULT_TOL)
    impute.add_argument('--max-iter', type=int, default=config.DEFAULT_MAX_ITER)
    impute.add_argument('--seed', type=int, default=config.DEFAULT_SEED)
    impute.add_argument('--block-fill', choices=('estimate', 'exact'), default='estimate')
    impute.add_argument('--final-svd', choices=('slice', 'block'), default='slice')
    impute.add_argument('--raw', action='store_true', help='Solve di skala asli tanpa normalisasi')
    impute.add_argument('--out', required=True, help='Folder tujuan')

    benchmark = commands.add_parser('benchmark', help='Jalankan benchmark holdout')
    benchmark.add_argument('--data', required=True, help='Path manifest.json')
    benchmark.add_argument('--fractions', type=_fraction_list, default=list(config.DEFAULT_FRACTIONS))
    benchmark.add_argument('--trials', type=int, default=config.DEFAULT_TRIALS)
    benchmark.add_argument('--methods', default=None,
                           help='Spec file JSON, atau daftar id metode dipisah koma')
    benchmark.add_argument('--base-seed', type=int, default=config.DEFAULT_SEED)
    benchmark.add_argument('--raw-space', action='store_true', help='Hitung RMSE di skala asli')
    benchmark.add_argument('--best-of', action='store_true', help='Satu baris terbaik per grup')
    benchmark.add_argument('--workers', type=int, default=1)
    benchmark.add_argument('--db', default=None, help='Simpan hasil per sel ke SQLite')
    benchmark.add_argument('--trials-out', default=None, help='CSV long-format per trial')
    benchmark.add_argument('--progress', action='store_true')
    benchmark.add_argument('--out', default=None, help='CSV result table (default: stdout)')

    table = commands.add_parser('table', help='Render result table CSV')
    table.add_argument('--in', dest='input', required=True)
    table.add_argument('--format', choices=('csv', 'markdown'), default='markdown')

    commands.add_parser('config', help='Tampilkan konfigurasi')

    return parser


# =============================================================================
# COMMANDS
# =============================================================================
def _round(value: float, scientific: bool = False) -> Optional[float]:
    """Angka untuk JSON: 6 desimal (atau 6 digit signifikan), inf/NaN jadi null."""
    if not math.isfinite(value):
        return None
    return float(f'{value:.6e}') if scientific else round(value, 6)


def _write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + '\n', encoding='utf-8')


def cmd_synth(args: argparse.Namespace) -> int:
    dataset = synthesize(args.T, args.m, args.n, args.rank, curvature=args.curvature,
                         noise_sd=args.noise, seed=args.seed)
    manifest_path = save_dataset(dataset, args.out)
    print(manifest_path)
    return 0


def _resolve_methods(raw: Optional[str]) -> list[MethodSpec]:
    if raw is None:
        return default_method_specs()
    if Path(raw).is_file():
        return load_method_specs(raw)
    return [MethodSpec(name=part.strip(), method=part.strip())
            for part in raw.split(',') if part.strip()]


def cmd_impute(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    split = full_split(dataset)

    if args.raw:
        working, stats = dataset, None
    else:
        working, stats = normalize(dataset, split)

    diagnostics: dict = {'method': args.method, 'normalized': not args.raw}

    if args.method == 'llmc':
        solver_config = SolverConfig(
            lam=args.lam, alpha=args.alpha, beta=args.beta, rank=args.rank,
            max_iter=args.max_iter, tol=args.tol, init_seed=args.seed,
            block_fill=args.block_fill, final_svd=args.final_svd,
        )
        result = LocallyLinearSolver(solver_config).run(working, split)
        res_P, res_O = stationarity_residuals(result.state, working.slices, split.observed_mask,
                                              solver_config)
        imputed = result.imputed
        diagnostics.update({
            'iterations': result.iterations_used,
            'converged': result.converged,
            'effective_rank': result.effective_rank,
            'slice_ranks': result.slice_ranks,
            'final_rate': _round(result.rate_trace[-1], scientific=True),
            'rate_trace': [_round(v, scientific=True) for v in result.rate_trace],
            'objective_trace': [_round(v) for v in result.objective_trace],
            'stationarity_residual_P': _round(res_P, scientific=True),
            'stationarity_residual_O': _round(res_O, scientific=True),
        })
    else:
        params = {'lambda': args.lam, 'tol': args.tol, 'max_iter': args.max_iter}
        if args.method == 'softimpute-als':
            params['rank'] = args.rank
        if args.method == 'mean':
            params = {}
        spec = MethodSpec(name=args.method, method=args.method, params=params)
        imputed, extra = run_method(spec, working, split, args.seed)
        diagnostics.update(extra)

    if not np.isfinite(imputed).all():
        raise NonFiniteError("Output imputasi non-finite")
    if stats is not None:
        imputed = denormalize(imputed, stats)

    completed = dataset.with_values(imputed, masks=np.ones(imputed.shape, dtype=bool))
    manifest_path = save_dataset(completed, args.out, float_format=OUTPUT_FLOAT_FORMAT)
    _write_text(Path(args.out) / DIAGNOSTICS_NAME, json.dumps(diagnostics, indent=2))

    logger.info(f"Imputasi selesai: {manifest_path}")
    print(manifest_path)
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    plan = ExperimentPlan(
        methods=_resolve_methods(args.methods),
        fractions=args.fractions,
        trials_per_fraction=args.trials,
        base_seed=args.base_seed,
        raw_space=args.raw_space,
        best_of=args.best_of,
    )
    if args.workers < 1:
        raise ConfigError(f"workers harus >= 1, dapat {args.workers}")

    store = ResultStore(args.db) if args.db else None
    table = run_experiment(dataset, plan, store=store, dataset_id=Path(args.data).parent.name,
                           workers=args.workers, progress=args.progress)

    text = emit_table(table, 'csv')
    if args.out:
        _write_text(args.out, text)
        logger.info(f"Result table ditulis ke {args.out}")
    else:
        print(text)

    if args.trials_out:
        _write_text(args.trials_out, emit_trials_csv(table))
        logger.info(f"CSV per trial ditulis ke {args.trials_out}")
    return 0


def cmd_table(args: argparse.Namespace) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise ConfigError(f"File table tidak ditemukan: {path}")
    table = parse_table_csv(path.read_text(encoding='utf-8'))
    print(emit_table(table, args.format))
    return 0


def cmd_config(args: argparse.Namespace) -> int:
    config.print_config()
    errors = config.validate()
    for err in errors:
        print(f"ERROR: {err}")
    return 1 if errors else 0


COMMANDS = {
    'synth': cmd_synth,
    'impute': cmd_impute,
    'benchmark': cmd_benchmark,
    'table': cmd_table,
    'config': cmd_config,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()

    try:
        if args.command != 'config':
            errors = config.validate()
            if errors:
                raise ConfigError('; '.join(errors))
        return COMMANDS[args.command](args)
    except (LLMCError, OSError) as e:
        logger.error(f"{args.command} gagal: {e}")
        print(json.dumps({'error': type(e).__name__, 'message': str(e)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
