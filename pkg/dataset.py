"""
dataset.py - Temporal Dataset: Load, Save, Holdout, Normalisasi, Sintesis

Dataset berisi T slice matriks m x n (pasien x atribut) dengan mask observasi.
Format file:
- manifest.json: {"T", "m", "n", "slices", "attributes", "times"}
- slice CSV tanpa header, "NA" atau sel kosong = missing
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pandas.errors import EmptyDataError, ParserError

from config import config
from errors import DatasetError, ShapeMismatchError

logger = logging.getLogger(__name__)

# Atribut dengan sd di bawah ini hanya di-center (scale = 1)
SCALE_FLOOR = 1e-12

MANIFEST_NAME = 'manifest.json'


# =============================================================================
# DOMAIN TYPES
# =============================================================================
@dataclass
class TemporalDataset:
    """
    T slice matriks m x n beserta mask observasi.

    slices[t] berisi NaN di entry dengan mask 0; nilai itu tidak boleh dibaca.
    """

    slices: np.ndarray
    masks: np.ndarray
    attribute_names: list[str] = field(default_factory=list)
    time_labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.slices = np.asarray(self.slices, dtype=float)
        self.masks = np.asarray(self.masks, dtype=bool)

        if self.slices.ndim != 3:
            raise ShapeMismatchError(f"slices harus berdimensi (T, m, n), dapat {self.slices.shape}")
        if self.masks.shape != self.slices.shape:
            raise ShapeMismatchError(
                f"masks {self.masks.shape} tidak sejajar dengan slices {self.slices.shape}"
            )
        if self.T < 1:
            raise DatasetError("Dataset harus punya minimal 1 slice (T >= 1)")

        # Entry missing selalu disimpan sebagai NaN
        self.slices = np.where(self.masks, self.slices, np.nan)

        if not self.attribute_names:
            self.attribute_names = [f'attr_{j + 1}' for j in range(self.n)]
        if not self.time_labels:
            self.time_labels = [f't{t + 1}' for t in range(self.T)]
        if len(self.attribute_names) != self.n:
            raise DatasetError(f"Jumlah atribut {len(self.attribute_names)} != n={self.n}")
        if len(self.time_labels) != self.T:
            raise DatasetError(f"Jumlah label waktu {len(self.time_labels)} != T={self.T}")

    @property
    def T(self) -> int:
        return self.slices.shape[0]

    @property
    def m(self) -> int:
        return self.slices.shape[1]

    @property
    def n(self) -> int:
        return self.slices.shape[2]

    def observed_count(self) -> int:
        return int(self.masks.sum())

    def with_values(self, slices: np.ndarray, masks: Optional[np.ndarray] = None) -> 'TemporalDataset':
        """Copy dataset dengan nilai (dan mask) baru, label tetap."""
        return TemporalDataset(
            slices=slices,
            masks=self.masks if masks is None else masks,
            attribute_names=list(self.attribute_names),
            time_labels=list(self.time_labels),
        )


@dataclass
class HoldoutSplit:
    """Partisi entry yang terobservasi: observed (terlihat) vs eval (disembunyikan)."""

    observed_mask: np.ndarray
    eval_mask: np.ndarray
    fraction: float
    seed: int


@dataclass
class NormalizationStats:
    """Mean dan scale per atribut."""

    means: np.ndarray
    scales: np.ndarray


# =============================================================================
# LOAD & SAVE
# =============================================================================
def _read_slice_csv(path: Path, missing_token: str) -> tuple[np.ndarray, np.ndarray]:
    """
    Baca satu slice CSV.

    Args:
        path: Path file CSV
        missing_token: Token untuk nilai missing

    Returns:
        Tuple (values, mask)
    """
    if not path.is_file():
        raise DatasetError(f"File slice tidak ditemukan: {path}")

    # pandas mem-pad baris pendek dengan "", yang sama dengan sel missing,
    # jadi jumlah field dicek dari baris mentah
    lines = [line for line in path.read_text(encoding='utf-8').splitlines() if line.strip()]
    widths = {line.count(',') + 1 for line in lines}
    if len(widths) > 1:
        raise DatasetError(f"Baris tidak rata (ragged) di {path}: jumlah kolom {sorted(widths)}")

    try:
        # dtype=str + keep_default_na=False: sel kosong jadi "" sedangkan
        # baris yang kurang kolom di-pad NaN oleh pandas
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except EmptyDataError as e:
        raise DatasetError(f"File slice kosong: {path}") from e
    except ParserError as e:
        raise DatasetError(f"Baris tidak rata (ragged) di {path}: {e}") from e

    if frame.isna().to_numpy().any():
        raise DatasetError(f"Baris tidak rata (ragged) di {path}")

    cells = frame.to_numpy(dtype=object)
    stripped = np.vectorize(str.strip, otypes=[object])(cells)
    missing = (stripped == missing_token) | (stripped == '')

    values = np.full(cells.shape, np.nan)
    for (i, j), cell in np.ndenumerate(stripped):
        if missing[i, j]:
            continue
        try:
            values[i, j] = float(cell)
        except ValueError as e:
            raise DatasetError(
                f"Sel non-numerik '{cell}' di {path} baris {i + 1} kolom {j + 1}"
            ) from e

    if not np.isfinite(values[~missing]).all():
        raise DatasetError(f"Nilai non-finite di {path}")

    return values, ~missing


def load_dataset(manifest_path: str | Path) -> TemporalDataset:
    """
    Load dataset dari manifest JSON + slice CSV.

    Args:
        manifest_path: Path ke manifest.json

    Returns:
        TemporalDataset
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DatasetError(f"Manifest tidak ditemukan: {manifest_path}")

    try:
        manifest = json.loads(manifest_path.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DatasetError(f"Manifest bukan JSON valid: {e}") from e

    for key in ('T', 'm', 'n', 'slices'):
        if key not in manifest:
            raise DatasetError(f"Manifest tidak punya field '{key}'")

    T, m, n = int(manifest['T']), int(manifest['m']), int(manifest['n'])
    if T < 1:
        raise DatasetError(f"T harus >= 1, dapat {T}")
    if len(manifest['slices']) != T:
        raise DatasetError(f"Manifest menyebut T={T} tapi ada {len(manifest['slices'])} slice")

    base_dir = manifest_path.parent
    slices, masks = [], []
    for rel_path in manifest['slices']:
        values, mask = _read_slice_csv(base_dir / rel_path, config.MISSING_TOKEN)
        if values.shape != (m, n):
            raise DatasetError(f"Slice {rel_path} berukuran {values.shape}, seharusnya {(m, n)}")
        slices.append(values)
        masks.append(mask)

    dataset = TemporalDataset(
        slices=np.stack(slices),
        masks=np.stack(masks),
        attribute_names=[str(a) for a in manifest.get('attributes', [])],
        time_labels=[str(t) for t in manifest.get('times', [])],
    )
    logger.info(f"Dataset loaded dari {manifest_path}: T={T}, m={m}, n={n}, "
                f"observed={dataset.observed_count()}")
    return dataset


def save_dataset(
    dataset: TemporalDataset,
    directory: str | Path,
    float_format: Optional[str] = None,
) -> Path:
    """
    Simpan dataset sebagai manifest + T slice CSV.

    Args:
        dataset: Dataset yang disimpan
        directory: Folder tujuan (dibuat jika belum ada)
        float_format: Format angka (default: repr penuh, round-trip exact)

    Returns:
        Path manifest
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        slice_names = []
        for t in range(dataset.T):
            name = f'slice_{t + 1:03d}.csv'
            values = np.where(dataset.masks[t], dataset.slices[t], np.nan)
            pd.DataFrame(values).to_csv(
                directory / name,
                header=False,
                index=False,
                na_rep=config.MISSING_TOKEN,
                float_format=float_format,
                lineterminator='\n',
            )
            slice_names.append(name)

        manifest = {
            'T': dataset.T,
            'm': dataset.m,
            'n': dataset.n,
            'slices': slice_names,
            'attributes': dataset.attribute_names,
            'times': dataset.time_labels,
        }
        manifest_path = directory / MANIFEST_NAME
        manifest_path.write_text(json.dumps(manifest, indent=2) + '\n', encoding='utf-8')
    except OSError as e:
        raise DatasetError(f"Gagal menulis dataset ke {directory}: {e}") from e

    logger.info(f"Dataset disimpan ke {manifest_path}")
    return manifest_path


# =============================================================================
# HOLDOUT & NORMALISASI
# =============================================================================
def generate_holdout(dataset: TemporalDataset, fraction: float, seed: int) -> HoldoutSplit:
    """
    Pilih secara acak (tanpa pengembalian) entry yang tetap terlihat.

    Sampling global di semua T slice, hanya atas entry yang aslinya terobservasi.

    Args:
        dataset: Dataset sumber
        fraction: Porsi entry terobservasi yang tetap terlihat, di (0, 1]
        seed: Seed RNG

    Returns:
        HoldoutSplit
    """
    if not 0 < fraction <= 1:
        raise DatasetError(f"fraction harus di (0, 1], dapat {fraction}")

    observed_idx = np.flatnonzero(dataset.masks)
    total = observed_idx.size
    if total == 0:
        raise DatasetError("Dataset tidak punya entry terobservasi")

    n_keep = min(total, max(1, int(round(fraction * total))))
    rng = np.random.default_rng(seed)
    keep = observed_idx[rng.choice(total, size=n_keep, replace=False)]

    observed_mask = np.zeros(dataset.masks.shape, dtype=bool)
    observed_mask.flat[keep] = True
    eval_mask = dataset.masks & ~observed_mask

    return HoldoutSplit(observed_mask=observed_mask, eval_mask=eval_mask,
                        fraction=fraction, seed=seed)


def full_split(dataset: TemporalDataset) -> HoldoutSplit:
    """Split tanpa holdout: semua entry terobservasi terlihat."""
    return HoldoutSplit(
        observed_mask=dataset.masks.copy(),
        eval_mask=np.zeros(dataset.masks.shape, dtype=bool),
        fraction=1.0,
        seed=0,
    )


def normalize(
    dataset: TemporalDataset,
    split: HoldoutSplit,
) -> tuple[TemporalDataset, NormalizationStats]:
    """
    Normalisasi zero-mean / unit-scale per atribut.

    Statistik hanya dari entry yang terlihat (observed_mask), sd populasi.

    Args:
        dataset: Dataset mentah
        split: Holdout split

    Returns:
        Tuple (dataset ternormalisasi, stats)
    """
    visible = split.observed_mask
    counts = visible.sum(axis=(0, 1))
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        names = [dataset.attribute_names[j] for j in empty]
        raise DatasetError(f"Atribut tanpa entry terlihat: {names}")

    values = np.where(visible, dataset.slices, 0.0)
    means = values.sum(axis=(0, 1)) / counts
    centered = np.where(visible, dataset.slices - means, 0.0)
    sds = np.sqrt((centered ** 2).sum(axis=(0, 1)) / counts)
    scales = np.where(sds < SCALE_FLOOR, 1.0, sds)

    floored = int((sds < SCALE_FLOOR).sum())
    if floored:
        logger.debug(f"{floored} atribut konstan, hanya di-center")

    normalized = (dataset.slices - means) / scales
    stats = NormalizationStats(means=means, scales=scales)
    return dataset.with_values(normalized), stats


def denormalize(matrix: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """
    Kembalikan ke skala asli: x * scale + mean per atribut.

    Args:
        matrix: Array (..., n)
        stats: Statistik normalisasi

    Returns:
        Array dengan skala asli
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[-1] != stats.means.shape[0]:
        raise ShapeMismatchError(
            f"Jumlah kolom {matrix.shape[-1]} != jumlah atribut {stats.means.shape[0]}"
        )
    return matrix * stats.scales + stats.means


def hide_entries(dataset: TemporalDataset, split: HoldoutSplit) -> TemporalDataset:
    """Dataset yang diserahkan ke metode: entry eval jadi NaN (poison), mask = observed."""
    return dataset.with_values(dataset.slices, masks=split.observed_mask)


# =============================================================================
# SINTESIS
# =============================================================================
def _smooth_perturbation(rng: np.random.Generator, T: int, shape: tuple[int, int]) -> np.ndarray:
    """
    Perturbasi halus dengan dua sampel pertama nol.

    B(t+1) = 2 B(t) - B(t-1) + Z(t), jadi selisih kedua = Z(t).
    """
    shocks = rng.standard_normal((T, *shape))
    path = np.zeros((T, *shape))
    for t in range(2, T):
        path[t] = 2 * path[t - 1] - path[t - 2] + shocks[t - 1]
    return path


def synthesize(
    T: int,
    m: int,
    n: int,
    r: int,
    curvature: float = 0.0,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> TemporalDataset:
    """
    Buat dataset sintetis dengan faktor laten yang bergerak halus.

    O_t = O_base + t * dO + curvature * B_O(t), analog untuk P_t,
    F_t = O_t P_t' + noise.

    Args:
        T, m, n: Dimensi
        r: Rank faktor laten
        curvature: Besar selisih kedua lintasan faktor (0 = linear)
        noise_sd: Standar deviasi noise Gaussian
        seed: Seed RNG

    Returns:
        TemporalDataset fully observed
    """
    if min(T, m, n, r) < 1:
        raise DatasetError("T, m, n, r harus >= 1")
    if r > min(m, n):
        raise DatasetError(f"rank r={r} melebihi min(m, n)={min(m, n)}")
    if curvature < 0 or noise_sd < 0:
        raise DatasetError("curvature dan noise_sd harus >= 0")

    rng = np.random.default_rng(seed)
    horizon = max(T - 1, 1)

    O_base = rng.standard_normal((m, r))
    P_base = rng.standard_normal((n, r))
    dO = rng.standard_normal((m, r)) / horizon
    dP = rng.standard_normal((n, r)) / horizon
    B_O = _smooth_perturbation(rng, T, (m, r))
    B_P = _smooth_perturbation(rng, T, (n, r))
    noise = rng.standard_normal((T, m, n))

    steps = np.arange(T, dtype=float)[:, None, None]
    O = O_base + steps * dO + curvature * B_O
    P = P_base + steps * dP + curvature * B_P

    slices = np.einsum('tmr,tnr->tmn', O, P) + noise_sd * noise
    return TemporalDataset(slices=slices, masks=np.ones(slices.shape, dtype=bool))
