"""
test_dataset.py - Unit Tests untuk Dataset

Menguji:
- Konvensi NaN untuk entry missing
- Load / save manifest + slice CSV
- Holdout split
- Normalisasi & denormalisasi
- Generator sintetis
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path untuk import module
sys.path.insert(0, str(Path(__file__).parent.parent))

from dataset import (
    HoldoutSplit,
    TemporalDataset,
    denormalize,
    full_split,
    generate_holdout,
    hide_entries,
    load_dataset,
    normalize,
    save_dataset,
    synthesize,
)
from errors import DatasetError, ShapeMismatchError


# =============================================================================
# FIXTURES
# =============================================================================
@pytest.fixture
def small_dataset():
    """Dataset 2 x 3 x 2 dengan satu entry missing."""
    slices = np.array([
        [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
        [[1.5, 2.5], [3.5, 99.0], [5.5, 6.5]],
    ])
    masks = np.ones(slices.shape, dtype=bool)
    masks[1, 1, 1] = False
    return TemporalDataset(slices=slices, masks=masks)


@pytest.fixture
def synthetic_dataset():
    """Dataset sintetis fully observed."""
    return synthesize(T=3, m=40, n=5, r=2, seed=7)


def write_manifest(directory: Path, slice_texts: list[str], m: int, n: int) -> Path:
    """Tulis slice CSV mentah + manifest."""
    names = []
    for t, text in enumerate(slice_texts):
        name = f's{t}.csv'
        (directory / name).write_text(text, encoding='utf-8')
        names.append(name)
    manifest = directory / 'manifest.json'
    manifest.write_text(json.dumps({'T': len(names), 'm': m, 'n': n, 'slices': names}))
    return manifest


# =============================================================================
# TESTS - TEMPORAL DATASET
# =============================================================================
class TestTemporalDataset:
    """Tests untuk tipe TemporalDataset."""

    def test_missing_entry_becomes_nan(self, small_dataset):
        """Nilai di entry dengan mask 0 tidak boleh tersimpan."""
        assert np.isnan(small_dataset.slices[1, 1, 1])
        assert small_dataset.observed_count() == 11

    def test_default_labels(self, small_dataset):
        assert small_dataset.attribute_names == ['attr_1', 'attr_2']
        assert small_dataset.time_labels == ['t1', 't2']

    def test_mask_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            TemporalDataset(slices=np.zeros((2, 3, 2)), masks=np.ones((2, 3, 3), dtype=bool))

    def test_label_count_mismatch(self):
        with pytest.raises(DatasetError):
            TemporalDataset(slices=np.zeros((1, 2, 2)), masks=np.ones((1, 2, 2), dtype=bool),
                            attribute_names=['a'])


# =============================================================================
# TESTS - LOAD & SAVE
# =============================================================================
class TestLoadSave:
    """Tests untuk manifest + slice CSV."""

    def test_save_then_load(self, tmp_path, small_dataset):
        """Nilai dan mask kembali sama setelah disimpan."""
        manifest = save_dataset(small_dataset, tmp_path / 'data')
        loaded = load_dataset(manifest)

        np.testing.assert_array_equal(loaded.masks, small_dataset.masks)
        np.testing.assert_allclose(loaded.slices[loaded.masks],
                                   small_dataset.slices[small_dataset.masks], rtol=1e-15)
        assert loaded.attribute_names == small_dataset.attribute_names

    def test_missing_token_and_empty_cell(self, tmp_path):
        """'NA' dan sel kosong dibaca sebagai missing."""
        manifest = write_manifest(tmp_path, ['1,NA\n,4\n'], m=2, n=2)
        dataset = load_dataset(manifest)

        np.testing.assert_array_equal(dataset.masks[0], [[True, False], [False, True]])
        assert dataset.slices[0, 0, 0] == 1.0
        assert dataset.slices[0, 1, 1] == 4.0

    def test_ragged_row_short(self, tmp_path):
        manifest = write_manifest(tmp_path, ['1,2,3\n4,5\n'], m=2, n=3)
        with pytest.raises(DatasetError):
            load_dataset(manifest)

    def test_ragged_row_short_in_middle(self, tmp_path):
        """Baris pendek tidak boleh dibaca sebagai sel missing."""
        manifest = write_manifest(tmp_path, ['1,2,3\n4,5\n7,8,9\n'], m=3, n=3)
        with pytest.raises(DatasetError, match='ragged'):
            load_dataset(manifest)

    def test_ragged_row_long(self, tmp_path):
        manifest = write_manifest(tmp_path, ['1,2\n4,5,6\n'], m=2, n=2)
        with pytest.raises(DatasetError):
            load_dataset(manifest)

    def test_non_numeric_cell(self, tmp_path):
        manifest = write_manifest(tmp_path, ['1,abc\n3,4\n'], m=2, n=2)
        with pytest.raises(DatasetError, match='non-numerik'):
            load_dataset(manifest)

    def test_slice_count_mismatch(self, tmp_path):
        manifest = write_manifest(tmp_path, ['1,2\n3,4\n'], m=2, n=2)
        data = json.loads(manifest.read_text())
        data['T'] = 2
        manifest.write_text(json.dumps(data))
        with pytest.raises(DatasetError):
            load_dataset(manifest)

    def test_slice_shape_mismatch(self, tmp_path):
        manifest = write_manifest(tmp_path, ['1,2\n3,4\n'], m=3, n=2)
        with pytest.raises(DatasetError):
            load_dataset(manifest)

    def test_manifest_not_found(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / 'nope.json')


# =============================================================================
# TESTS - HOLDOUT
# =============================================================================
class TestHoldout:
    """Tests untuk generate_holdout."""

    def test_partition(self, small_dataset):
        """observed + eval = entry asli, tanpa overlap."""
        split = generate_holdout(small_dataset, 0.5, seed=3)

        assert not (split.observed_mask & split.eval_mask).any()
        np.testing.assert_array_equal(split.observed_mask | split.eval_mask, small_dataset.masks)

    def test_visible_count(self, synthetic_dataset):
        split = generate_holdout(synthetic_dataset, 0.7, seed=1)
        total = synthetic_dataset.observed_count()
        assert split.observed_mask.sum() == round(0.7 * total)

    def test_deterministic(self, synthetic_dataset):
        a = generate_holdout(synthetic_dataset, 0.6, seed=11)
        b = generate_holdout(synthetic_dataset, 0.6, seed=11)
        c = generate_holdout(synthetic_dataset, 0.6, seed=12)

        np.testing.assert_array_equal(a.observed_mask, b.observed_mask)
        assert not np.array_equal(a.observed_mask, c.observed_mask)

    def test_fraction_one_keeps_everything(self, small_dataset):
        split = generate_holdout(small_dataset, 1.0, seed=0)
        assert not split.eval_mask.any()

    @pytest.mark.parametrize('fraction', [0.0, -0.1, 1.5])
    def test_invalid_fraction(self, small_dataset, fraction):
        with pytest.raises(DatasetError):
            generate_holdout(small_dataset, fraction, seed=0)

    def test_hide_entries_poisons_eval(self, synthetic_dataset):
        """Entry eval menjadi NaN di dataset yang diserahkan ke metode."""
        split = generate_holdout(synthetic_dataset, 0.5, seed=2)
        visible = hide_entries(synthetic_dataset, split)

        assert np.isnan(visible.slices[split.eval_mask]).all()
        assert np.isfinite(visible.slices[split.observed_mask]).all()
        np.testing.assert_array_equal(visible.masks, split.observed_mask)


# =============================================================================
# TESTS - NORMALISASI
# =============================================================================
class TestNormalize:
    """Tests untuk normalize / denormalize."""

    def test_visible_entries_standardized(self, synthetic_dataset):
        """Mean 0 dan sd 1 per atribut di entry terlihat."""
        split = generate_holdout(synthetic_dataset, 0.6, seed=4)
        normalized, _ = normalize(synthetic_dataset, split)

        for j in range(synthetic_dataset.n):
            visible = normalized.slices[..., j][split.observed_mask[..., j]]
            assert abs(visible.mean()) < 1e-12
            assert abs(visible.std() - 1.0) < 1e-12

    def test_stats_ignore_hidden_entries(self, synthetic_dataset):
        """Mengubah entry eval tidak mengubah statistik."""
        split = generate_holdout(synthetic_dataset, 0.5, seed=5)
        _, stats_a = normalize(synthetic_dataset, split)

        tampered = synthetic_dataset.slices.copy()
        tampered[split.eval_mask] = 1e6
        _, stats_b = normalize(synthetic_dataset.with_values(tampered), split)

        np.testing.assert_array_equal(stats_a.means, stats_b.means)
        np.testing.assert_array_equal(stats_a.scales, stats_b.scales)

    def test_constant_attribute_only_centered(self):
        slices = np.stack([np.column_stack([np.full(4, 5.0), np.arange(4.0)])])
        dataset = TemporalDataset(slices=slices, masks=np.ones(slices.shape, dtype=bool))
        normalized, stats = normalize(dataset, full_split(dataset))

        assert stats.scales[0] == 1.0
        np.testing.assert_allclose(normalized.slices[0, :, 0], 0.0)

    def test_denormalize_inverse(self, synthetic_dataset):
        split = full_split(synthetic_dataset)
        normalized, stats = normalize(synthetic_dataset, split)
        np.testing.assert_allclose(denormalize(normalized.slices, stats),
                                   synthetic_dataset.slices, atol=1e-12)

    def test_denormalize_shape_mismatch(self, synthetic_dataset):
        _, stats = normalize(synthetic_dataset, full_split(synthetic_dataset))
        with pytest.raises(ShapeMismatchError):
            denormalize(np.zeros((2, 3)), stats)

    def test_attribute_without_visible_entry(self, small_dataset):
        observed = small_dataset.masks.copy()
        observed[..., 0] = False
        split = HoldoutSplit(observed_mask=observed, eval_mask=small_dataset.masks & ~observed,
                             fraction=0.5, seed=0)
        with pytest.raises(DatasetError):
            normalize(small_dataset, split)


# =============================================================================
# TESTS - SINTESIS
# =============================================================================
class TestSynthesize:
    """Tests untuk generator sintetis."""

    def test_shape_and_observed(self):
        dataset = synthesize(T=4, m=6, n=5, r=2, seed=0)
        assert dataset.slices.shape == (4, 6, 5)
        assert dataset.masks.all()

    def test_deterministic(self):
        a = synthesize(T=3, m=5, n=4, r=2, curvature=0.3, noise_sd=0.1, seed=9)
        b = synthesize(T=3, m=5, n=4, r=2, curvature=0.3, noise_sd=0.1, seed=9)
        np.testing.assert_array_equal(a.slices, b.slices)

    def test_noiseless_rank(self):
        dataset = synthesize(T=3, m=8, n=6, r=2, curvature=0.5, seed=1)
        for t in range(dataset.T):
            assert np.linalg.matrix_rank(dataset.slices[t], tol=1e-8) <= 2

    def test_linear_factors_give_quadratic_slices(self):
        """curvature = 0: O_t, P_t linear di t, jadi selisih ketiga slice nol."""
        dataset = synthesize(T=6, m=5, n=4, r=2, curvature=0.0, seed=2)
        third = np.diff(dataset.slices, n=3, axis=0)
        np.testing.assert_allclose(third, 0.0, atol=1e-12)

    def test_curvature_breaks_quadratic(self):
        dataset = synthesize(T=6, m=5, n=4, r=2, curvature=1.0, seed=2)
        third = np.diff(dataset.slices, n=3, axis=0)
        assert np.abs(third).max() > 1e-3

    def test_rank_too_large(self):
        with pytest.raises(DatasetError):
            synthesize(T=2, m=3, n=2, r=3)
