import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetex.classify import DM, HEALTHY
from facetex.errors import DatasetError, MetricUndefinedError, ParameterError
from facetex.evaluate import (
    ConfusionCounts,
    compute_metrics,
    confusion_counts,
    roc_auc,
    stratified_split,
)
from oracles import mann_whitney_auc, reference_metrics


def balanced_labels(n):
    return np.array([DM] * (n // 2) + [HEALTHY] * (n // 2))


class TestStratifiedSplit:
    def test_hundred_balanced_gives_seventy_thirty(self):
        labels = balanced_labels(100)
        for seed in (0, 1, 17):
            train, test = stratified_split(labels, seed=seed)
            assert len(train) == 70 and len(test) == 30
            assert (labels[train] == DM).sum() == 35
            assert (labels[test] == DM).sum() == 15
            assert sorted(train.tolist() + test.tolist()) == list(range(100))

    def test_same_seed_same_split(self):
        labels = balanced_labels(40)
        a = stratified_split(labels, seed=5)
        b = stratified_split(labels, seed=5)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_every_sample_reaches_test_over_seeds(self):
        labels = balanced_labels(10)
        seen = set()
        for seed in range(100):
            _, test = stratified_split(labels, seed=seed)
            seen.update(test.tolist())
        assert seen == set(range(10))

    def test_unbalanced_classes(self):
        labels = np.array([DM] * 7 + [HEALTHY] * 13)
        train, test = stratified_split(labels, ratio=0.7, seed=0)
        assert (labels[train] == DM).sum() == math.ceil(0.7 * 7)
        assert (labels[train] == HEALTHY).sum() == math.ceil(0.7 * 13)

    def test_small_class_rejected(self):
        with pytest.raises(DatasetError):
            stratified_split(np.array([DM, HEALTHY, HEALTHY]))

    def test_bad_ratio(self):
        with pytest.raises(ParameterError):
            stratified_split(balanced_labels(10), ratio=1.0)


class TestMetrics:
    def test_table_row_consistency(self):
        m = compute_metrics(ConfusionCounts(tp=15, fn=0, tn=14, fp=1))
        assert m.accuracy == pytest.approx(0.9667, abs=5e-5)
        assert m.sensitivity == 1.0
        assert m.specificity == pytest.approx(0.9333, abs=5e-5)

    def test_degenerate_predictor(self):
        m = compute_metrics(ConfusionCounts(tp=0, fn=10, tn=10, fp=0))
        assert (m.accuracy, m.sensitivity, m.specificity) == (0.5, 0.0, 1.0)

    def test_random_counts_match_formula_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            tp, fn, tn, fp = (int(v) for v in rng.integers(0, 30, 4))
            if tp + fn == 0 or tn + fp == 0:
                continue
            m = compute_metrics(ConfusionCounts(tp=tp, fn=fn, tn=tn, fp=fp))
            ref = reference_metrics(tp, fn, tn, fp)
            assert (m.accuracy, m.sensitivity, m.specificity) == ref

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_accuracy_identity_in_rational_arithmetic(self, tp, fn, tn, fp):
        if tp + fn == 0 or tn + fp == 0:
            return
        from fractions import Fraction

        m = compute_metrics(ConfusionCounts(tp=tp, fn=fn, tn=tn, fp=fp))
        assert Fraction(m.accuracy).limit_denominator(10**9) * (tp + fn + tn + fp) == tp + tn

    def test_balanced_test_accuracy_is_mean_of_rates(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            tp = int(rng.integers(0, n + 1))
            tn = int(rng.integers(0, n + 1))
            m = compute_metrics(ConfusionCounts(tp=tp, fn=n - tp, tn=tn, fp=n - tn))
            assert m.accuracy == pytest.approx((m.sensitivity + m.specificity) / 2.0, abs=1e-15)

    def test_empty_class_rejected(self):
        with pytest.raises(MetricUndefinedError):
            compute_metrics(ConfusionCounts(tp=0, fn=0, tn=5, fp=5))

    def test_confusion_counts_always_dm_predictor(self):
        y_true = np.array([DM, DM, HEALTHY, HEALTHY, HEALTHY])
        y_pred = np.full(5, DM)
        c = confusion_counts(y_true, y_pred)
        assert (c.tp, c.fn, c.tn, c.fp) == (2, 0, 0, 3)
        m = compute_metrics(c)
        assert m.sensitivity == 1.0 and m.specificity == 0.0


class TestRocAuc:
    def test_perfect_separation(self):
        scores = np.array([3.0, 2.0, 1.0, -1.0, -2.0])
        labels = np.array([DM, DM, DM, HEALTHY, HEALTHY])
        assert roc_auc(scores, labels).auc == 1.0

    def test_reversed_scores_flip_auc(self):
        rng = np.random.default_rng(2)
        scores = rng.standard_normal(30)
        # ensure all scores distinct
        assert len(np.unique(scores)) == 30
        labels = np.where(rng.random(30) < 0.5, DM, HEALTHY)
        if len(set(labels.tolist())) < 2:
            labels[0], labels[1] = DM, HEALTHY
        auc = roc_auc(scores, labels).auc
        auc_rev = roc_auc(-scores, labels).auc
        assert auc_rev == pytest.approx(1.0 - auc, abs=1e-12)

    def test_matches_mann_whitney_oracle_with_ties(self):
        rng = np.random.default_rng(3)
        for trial in range(60):
            n = int(rng.integers(4, 40))
            # quantize to force ties in roughly half the trials
            if trial % 2 == 0:
                scores = rng.integers(0, 5, n).astype(np.float64)
            else:
                scores = rng.standard_normal(n)
            labels = np.where(rng.random(n) < 0.5, DM, HEALTHY)
            if (labels == DM).sum() == 0 or (labels == HEALTHY).sum() == 0:
                continue
            curve = roc_auc(scores, labels)
            ref = mann_whitney_auc(scores.tolist(), labels.tolist())
            assert curve.auc == pytest.approx(ref, abs=1e-12)

    def test_curve_shape_invariants(self):
        rng = np.random.default_rng(4)
        scores = rng.integers(0, 4, 25).astype(np.float64)
        labels = np.array(([DM] * 13) + [HEALTHY] * 12)
        curve = roc_auc(scores, labels)
        assert curve.fpr[0] == 0.0 and curve.tpr[0] == 0.0
        assert curve.fpr[-1] == 1.0 and curve.tpr[-1] == 1.0
        assert all(a <= b for a, b in zip(curve.fpr, curve.fpr[1:]))
        assert all(a <= b for a, b in zip(curve.tpr, curve.tpr[1:]))
        assert 0.0 <= curve.auc <= 1.0
        assert curve.thresholds[0] == math.inf

    def test_single_class_rejected(self):
        with pytest.raises(MetricUndefinedError):
            roc_auc(np.array([1.0, 2.0]), np.array([DM, DM]))

    def test_nonfinite_scores_rejected(self):
        with pytest.raises(ParameterError):
            roc_auc(np.array([1.0, math.nan]), np.array([DM, HEALTHY]))

    @given(st.integers(0, 10_000))
    @settings(max_examples=30)
    def test_auc_equals_oracle_property(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 20))
        scores = np.round(rng.standard_normal(n), 1)
        labels = np.where(rng.random(n) < 0.5, DM, HEALTHY)
        if (labels == DM).sum() == 0 or (labels == HEALTHY).sum() == 0:
            return
        assert roc_auc(scores, labels).auc == pytest.approx(
            mann_whitney_auc(scores.tolist(), labels.tolist()), abs=1e-12
        )
