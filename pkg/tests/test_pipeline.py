import numpy as np
import pytest

from facetex.classify import DM, HEALTHY, ClassifierSpec
from facetex.config import BankSettings, SelectionSettings
from facetex.errors import ConfigError, DatasetError, ParameterError
from facetex.features import block_stat_features
from facetex.gabor import block_texture_value
from facetex.images import FacialBlocks
from facetex.pipeline import (
    BankAssignment,
    BankConfig,
    FeatureExtractor,
    Method,
    assemble_features,
    assemble_features_batch,
    select_block_bank,
    selection_grid,
    uniform_bank_config,
)


def make_blocks(rng):
    return FacialBlocks(
        forehead=rng.random((64, 64)),
        nose=rng.random((64, 64)),
        cheek=rng.random((64, 64)),
    )


SMALL = BankConfig(wavelengths=(4.0, 8.0), orientations_deg=(0.0, 90.0))
OTHER = BankConfig(wavelengths=(6.0,), orientations_deg=(45.0,))


class TestMethodProperties:
    def test_dims(self):
        assert Method.M1.dim == 3 and Method.M3.dim == 3
        assert Method.M2.dim == 18 and Method.M4.dim == 18

    def test_bank_scope(self):
        assert not Method.M1.per_block_banks and not Method.M2.per_block_banks
        assert Method.M3.per_block_banks and Method.M4.per_block_banks


class TestExtractorAgainstPlainRoute:
    def test_texture_values_match_block_texture_value(self):
        rng = np.random.default_rng(0)
        blocks = [rng.random((64, 64)) for _ in range(3)]
        ex = FeatureExtractor()
        got = ex.texture_values(blocks, SMALL)
        bank = ex.bank(SMALL)
        want = [block_texture_value(b, bank) for b in blocks]
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_stat_matrix_matches_block_stat_features(self):
        rng = np.random.default_rng(1)
        blocks = [rng.random((64, 64)) for _ in range(2)]
        ex = FeatureExtractor()
        got = ex.stat_matrix(blocks, SMALL)
        bank = ex.bank(SMALL)
        want = np.array([block_stat_features(b, bank).as_array() for b in blocks])
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_raw_mode_and_zero_padding(self):
        rng = np.random.default_rng(2)
        block = rng.random((64, 64))
        ex = FeatureExtractor(texture_mode="raw", padding="zero")
        got = ex.texture_values([block], SMALL)[0]
        want = block_texture_value(block, ex.bank(SMALL), mode="raw", padding="zero")
        assert got == pytest.approx(want, rel=1e-9)

    def test_cache_hits_are_consistent(self):
        rng = np.random.default_rng(3)
        block = rng.random((64, 64))
        ex = FeatureExtractor()
        first = ex.texture_values([block], SMALL)[0]
        again = ex.texture_values([block, block], SMALL)
        assert again[0] == first and again[1] == first


class TestAssembleFeatures:
    def test_m1_constant_blocks_give_equal_entries(self):
        block = np.full((64, 64), 0.4)
        fb = FacialBlocks(forehead=block.copy(), nose=block.copy(), cheek=block.copy())
        vec = assemble_features(fb, BankAssignment.uniform(SMALL), Method.M1)
        assert vec.values.shape == (3,)
        assert vec.values[0] == vec.values[1] == vec.values[2]

    def test_m2_vector_is_18_long_block_major(self):
        rng = np.random.default_rng(4)
        fb = make_blocks(rng)
        ex = FeatureExtractor()
        vec = assemble_features(fb, BankAssignment.uniform(SMALL), Method.M2, ex)
        assert vec.values.shape == (18,)
        bank = ex.bank(SMALL)
        forehead_stats = block_stat_features(fb.forehead, bank).as_array()
        cheek_stats = block_stat_features(fb.cheek, bank).as_array()
        nose_stats = block_stat_features(fb.nose, bank).as_array()
        assert np.allclose(vec.values[:6], forehead_stats, rtol=1e-9)
        assert np.allclose(vec.values[6:12], cheek_stats, rtol=1e-9)
        assert np.allclose(vec.values[12:], nose_stats, rtol=1e-9)

    def test_m3_per_block_single_kernel_banks(self):
        rng = np.random.default_rng(5)
        fb = make_blocks(rng)
        ex = FeatureExtractor()
        cfg_f = BankConfig(wavelengths=(4.0,), orientations_deg=(0.0,))
        cfg_c = BankConfig(wavelengths=(8.0,), orientations_deg=(45.0,))
        cfg_n = BankConfig(wavelengths=(16.0,), orientations_deg=(90.0,))
        assignment = BankAssignment(forehead=cfg_f, cheek=cfg_c, nose=cfg_n)
        vec = assemble_features(fb, assignment, Method.M3, ex)
        assert vec.values[0] == pytest.approx(
            block_texture_value(fb.forehead, ex.bank(cfg_f)), rel=1e-9
        )
        assert vec.values[1] == pytest.approx(
            block_texture_value(fb.cheek, ex.bank(cfg_c)), rel=1e-9
        )
        assert vec.values[2] == pytest.approx(
            block_texture_value(fb.nose, ex.bank(cfg_n)), rel=1e-9
        )

    def test_uniform_method_rejects_per_block_banks(self):
        rng = np.random.default_rng(6)
        fb = make_blocks(rng)
        mixed = BankAssignment(forehead=SMALL, cheek=OTHER, nose=SMALL)
        with pytest.raises(ConfigError):
            assemble_features(fb, mixed, Method.M1)
        with pytest.raises(ConfigError):
            assemble_features(fb, mixed, Method.M2)
        # fine for the per-block methods
        assemble_features(fb, mixed, Method.M3)

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(7)
        fb = make_blocks(rng)
        a = assemble_features(fb, BankAssignment.uniform(SMALL), Method.M2, FeatureExtractor())
        b = assemble_features(fb, BankAssignment.uniform(SMALL), Method.M2, FeatureExtractor())
        assert np.array_equal(a.values, b.values)

    def test_m1_invariant_under_kernel_permutation(self):
        rng = np.random.default_rng(8)
        fb = make_blocks(rng)
        forward = BankConfig(wavelengths=(4.0, 8.0), orientations_deg=(0.0, 90.0))
        reverse = BankConfig(wavelengths=(8.0, 4.0), orientations_deg=(90.0, 0.0))
        a = assemble_features(fb, BankAssignment.uniform(forward), Method.M1)
        b = assemble_features(fb, BankAssignment.uniform(reverse), Method.M1)
        assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-12)

    def test_batch_equals_singles(self):
        rng = np.random.default_rng(9)
        samples = [make_blocks(rng) for _ in range(4)]
        ex = FeatureExtractor()
        batch = assemble_features_batch(samples, BankAssignment.uniform(SMALL), Method.M2, ex)
        for row, fb in zip(batch, samples):
            single = assemble_features(fb, BankAssignment.uniform(SMALL), Method.M2, ex)
            assert np.array_equal(row, single.values)


class TestSelectionGrid:
    def test_default_grid_shape(self):
        grid = selection_grid(SelectionSettings(), BankSettings())
        assert len(grid) == 10  # 5 windows x 2 offsets
        assert all(len(c.wavelengths) == 5 and len(c.orientations_deg) == 8 for c in grid)

    def test_window_validation(self):
        with pytest.raises(ParameterError):
            selection_grid(SelectionSettings(window=10), BankSettings())


def grating(wavelength, rng, size=64):
    x = np.arange(size)[None, :]
    phase = rng.uniform(0, 2 * np.pi)
    return 0.5 + 0.35 * np.cos(2 * np.pi * x / wavelength + phase) + np.zeros((size, size))


class TestSelectBlockBank:
    def labeled_blocks(self, rng, n=8):
        blocks = [grating(6.0, rng) for _ in range(n)] + [grating(14.0, rng) for _ in range(n)]
        labels = np.array([DM] * n + [HEALTHY] * n)
        return blocks, labels

    def test_singleton_grid_returns_it(self):
        rng = np.random.default_rng(10)
        blocks, labels = self.labeled_blocks(rng, n=4)
        res = select_block_bank(
            blocks, labels, [SMALL], ClassifierSpec(kind="knn", k=1), split_seed=0
        )
        assert res.config == SMALL and res.index == 0

    def test_separating_config_beats_constant_one(self):
        rng = np.random.default_rng(11)
        blocks, labels = self.labeled_blocks(rng)
        # candidate A is tuned to the class gratings; candidate B has a
        # wavelength far outside the band, responding almost equally
        informative = BankConfig(wavelengths=(6.0, 14.0), orientations_deg=(0.0,))
        uninformative = BankConfig(wavelengths=(64.0,), orientations_deg=(90.0,))
        res = select_block_bank(
            blocks, labels, [uninformative, informative],
            ClassifierSpec(kind="knn", k=1), split_seed=3,
        )
        assert res.config == informative
        assert res.accuracy == 1.0

    def test_duplicate_config_picks_first(self):
        rng = np.random.default_rng(12)
        blocks, labels = self.labeled_blocks(rng, n=4)
        res = select_block_bank(
            blocks, labels, [SMALL, SMALL], ClassifierSpec(kind="knn", k=1), split_seed=0
        )
        assert res.index == 0
        assert res.candidate_accuracies[0] == res.candidate_accuracies[1]

    def test_reproducible_given_seed(self):
        rng = np.random.default_rng(13)
        blocks, labels = self.labeled_blocks(rng, n=5)
        grid = [SMALL, OTHER]
        spec = ClassifierSpec(kind="svm", C=1.0, kernel="rbf")
        a = select_block_bank(blocks, labels, grid, spec, split_seed=9)
        b = select_block_bank(blocks, labels, grid, spec, split_seed=9)
        assert a == b

    def test_missing_class_rejected(self):
        rng = np.random.default_rng(14)
        blocks = [rng.random((64, 64)) for _ in range(4)]
        with pytest.raises(DatasetError):
            select_block_bank(
                blocks, np.array([DM] * 4), [SMALL], ClassifierSpec(kind="knn", k=1), 0
            )

    def test_empty_grid_rejected(self):
        with pytest.raises(ParameterError):
            select_block_bank(
                [np.zeros((64, 64))] * 4, np.array([DM, DM, HEALTHY, HEALTHY]),
                [], ClassifierSpec(kind="knn", k=1), 0,
            )


def test_bank_config_roundtrip():
    cfg = uniform_bank_config(BankSettings())
    assert BankConfig.from_dict(cfg.to_dict()) == cfg
