import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from facetex.classify import (
    DM,
    HEALTHY,
    ClassifierSpec,
    Standardizer,
    knn_predict,
    knn_train,
    model_from_json,
    model_to_json,
    svm_decision,
    svm_predict,
    svm_train_smo,
    train_classifier,
)
from facetex.errors import DatasetError, ParameterError, ShapeError
from oracles import reference_knn


def kkt_violation_amounts(model, X, y, alphas, tol):
    """Independent KKT check from decision values and multipliers."""
    margins = y * np.asarray(svm_decision(model, X))
    worst = 0.0
    C = model.C
    for a, m in zip(alphas, margins):
        if a <= 1e-8:
            worst = max(worst, 1.0 - m)
        elif a >= C - 1e-8:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return worst


def recovered_alphas(model, X):
    """Map support-vector dual coefficients back onto the training rows."""
    Z = model.standardizer.apply(X)
    alphas = np.zeros(len(X))
    for sv, coef in zip(model.support_vectors, model.dual_coef):
        match = np.flatnonzero(np.all(np.isclose(Z, sv, atol=1e-12), axis=1))
        alphas[match[0]] += abs(coef)
    return alphas


class TestStandardizer:
    def test_two_point_zscore(self):
        std = Standardizer.fit(np.array([[0.0], [2.0]]))
        assert std.mean[0] == 1.0
        assert std.std[0] == 1.0
        assert std.apply(np.array([2.0]))[0] == 1.0

    def test_constant_dimension_passes_through(self):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        std = Standardizer.fit(X)
        assert std.std[1] == 1.0
        assert np.all(std.apply(X)[:, 1] == 0.0)

    def test_random_matrix_centers_and_scales(self):
        rng = np.random.default_rng(0)
        X = rng.normal(3.0, 2.5, (50, 18))
        Z = Standardizer.fit(X).apply(X)
        assert np.allclose(Z.mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(Z.std(axis=0), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        std = Standardizer.fit(np.ones((3, 4)))
        with pytest.raises(ShapeError):
            std.apply(np.ones((2, 3)))


class TestKnn:
    def test_exact_training_point_with_k1(self):
        X = np.array([[0.0, 0.0], [5.0, 5.0], [9.0, 0.0]])
        y = np.array([DM, HEALTHY, DM])
        model = knn_train(X, y, k=1)
        assert knn_predict(model, np.array([5.0, 5.0])) == HEALTHY

    def test_majority_of_three(self):
        X = np.array([[0.0], [1.0], [2.0], [50.0]])
        y = np.array([DM, DM, HEALTHY, HEALTHY])
        model = knn_train(X, y, k=3)
        assert knn_predict(model, np.array([0.5])) == DM

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((50, 4))
        y = np.where(rng.random(50) < 0.5, DM, HEALTHY)
        std = Standardizer.fit(X)
        queries = rng.standard_normal((50, 4))
        for k in (1, 3, 5):
            model = knn_train(X, y, k=k)
            preds = knn_predict(model, queries)
            Zt = std.apply(X)
            Zq = std.apply(queries)
            expected = [reference_knn(Zt.tolist(), y.tolist(), q.tolist(), k) for q in Zq]
            assert preds.tolist() == expected

    def test_k_validation(self):
        X = np.zeros((4, 2))
        y = np.array([DM, DM, HEALTHY, HEALTHY])
        with pytest.raises(ParameterError):
            knn_train(X, y, k=5)
        with pytest.raises(ParameterError):
            knn_train(X, y, k=2)
        with pytest.raises(ParameterError):
            knn_train(X, y, k=0)

    def test_distance_ties_broken_by_lower_index(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([HEALTHY, DM])
        model = knn_train(X, y, k=1)
        # query equidistant from both training points
        assert knn_predict(model, np.array([0.0, 0.0])) == HEALTHY

    @given(st.permutations(list(range(12))))
    @settings(max_examples=25)
    def test_permutation_invariance_with_distinct_distances(self, perm):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((12, 3))
        y = np.where(rng.random(12) < 0.5, DM, HEALTHY)
        q = rng.standard_normal(3)
        base = knn_predict(knn_train(X, y, k=3), q)
        p = np.array(perm)
        permuted = knn_predict(knn_train(X[p], y[p], k=3), q)
        assert base == permuted

    def test_scale_invariance_through_standardizer(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((20, 4))
        y = np.where(rng.random(20) < 0.5, DM, HEALTHY)
        queries = rng.standard_normal((10, 4))
        base = knn_predict(knn_train(X, y, k=3), queries)
        for scale in (0.5, 4.0):
            Xs = X.copy()
            Xs[:, 2] *= scale
            qs = queries.copy()
            qs[:, 2] *= scale
            assert np.array_equal(knn_predict(knn_train(Xs, y, k=3), qs), base)


class TestSvm:
    def separable_set(self):
        X = np.array([[2.0, 0.0], [3.0, 0.0], [-2.0, 0.0], [-3.0, 0.0]])
        y = np.array([DM, DM, HEALTHY, HEALTHY])
        return X, y

    def test_analytic_separable_solution(self):
        X, y = self.separable_set()
        model = svm_train_smo(X, y, C=100.0, kernel="linear", seed=0)
        # effective linear weights in the original coordinates
        w_std = model.dual_coef @ model.support_vectors
        w = w_std / model.standardizer.std
        b = model.bias - float(w_std @ (model.standardizer.mean / model.standardizer.std))
        assert w[0] == pytest.approx(0.5, abs=1e-2)
        assert w[1] == pytest.approx(0.0, abs=1e-2)
        assert b == pytest.approx(0.0, abs=1e-2)
        assert svm_decision(model, np.array([1.0, 0.0])) == pytest.approx(0.5, abs=1e-2)
        assert svm_predict(model, np.array([1.0, 0.0])) == DM

    def test_support_vectors_on_margin(self):
        X, y = self.separable_set()
        model = svm_train_smo(X, y, C=100.0, kernel="linear", seed=0)
        alphas = recovered_alphas(model, X)
        # the interior points (2,0) and (-2,0) carry the solution
        assert alphas[0] > 1e-6 and alphas[2] > 1e-6
        assert alphas[1] == pytest.approx(0.0, abs=1e-6)
        assert alphas[3] == pytest.approx(0.0, abs=1e-6)
        for i in (0, 2):
            margin = y[i] * svm_decision(model, X[i])
            assert margin == pytest.approx(1.0, abs=1e-2)

    def test_xor_linear_cannot_exceed_three_quarters(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([DM, DM, HEALTHY, HEALTHY])
        model = svm_train_smo(X, y, C=10.0, kernel="linear", seed=0)
        acc = np.mean(svm_predict(model, X) == y)
        assert acc <= 0.75

    def test_rbf_blobs_satisfy_kkt(self):
        rng = np.random.default_rng(4)
        for trial in range(20):
            n = int(rng.integers(10, 40)) * 2
            X = np.vstack(
                [
                    rng.normal(+2.0, 1.0, (n // 2, 3)),
                    rng.normal(-2.0, 1.0, (n // 2, 3)),
                ]
            )
            y = np.array([DM] * (n // 2) + [HEALTHY] * (n // 2))
            model = svm_train_smo(X, y, C=1.0, kernel="rbf", seed=trial)
            alphas = recovered_alphas(model, X)
            assert np.all(alphas >= -1e-12)
            assert np.all(alphas <= model.C + 1e-8)
            assert abs(model.dual_coef.sum()) <= 1e-6
            assert kkt_violation_amounts(model, X, y, alphas, tol=1e-3) <= 5e-3

    def test_dual_feasibility_on_separable(self):
        X, y = self.separable_set()
        model = svm_train_smo(X, y, C=100.0, kernel="linear", seed=0)
        assert abs(model.dual_coef.sum()) <= 1e-6

    def test_single_class_rejected(self):
        X = np.zeros((4, 2))
        y = np.array([DM, DM, DM, DM])
        with pytest.raises(DatasetError):
            svm_train_smo(X, y)

    def test_dimension_mismatch_on_predict(self):
        X, y = self.separable_set()
        model = svm_train_smo(X, y, kernel="linear")
        with pytest.raises(ShapeError):
            svm_decision(model, np.array([1.0, 2.0, 3.0]))

    def test_identical_points_degenerate_decision_is_dm(self):
        X = np.ones((6, 2))
        y = np.array([DM, HEALTHY] * 3)
        model = svm_train_smo(X, y, kernel="rbf", seed=0)
        assert svm_decision(model, np.ones(2)) == 0.0
        assert svm_predict(model, np.ones(2)) == DM

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((30, 2))
        y = np.where(X[:, 0] + 0.3 * rng.standard_normal(30) > 0, DM, HEALTHY)
        if len(set(y.tolist())) < 2:
            pytest.skip("degenerate draw")
        a = svm_train_smo(X, y, C=1.0, kernel="rbf", seed=7)
        b = svm_train_smo(X, y, C=1.0, kernel="rbf", seed=7)
        assert np.array_equal(a.dual_coef, b.dual_coef)
        assert a.bias == b.bias

    def test_rbf_gamma_default_is_one_over_dim(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((20, 5))
        y = np.array([DM, HEALTHY] * 10)
        model = svm_train_smo(X, y, kernel="rbf")
        assert model.gamma == pytest.approx(1.0 / 5.0)


class TestSerialization:
    def test_svm_roundtrip_preserves_decisions(self):
        rng = np.random.default_rng(7)
        X = np.vstack([rng.normal(1.5, 1.0, (10, 3)), rng.normal(-1.5, 1.0, (10, 3))])
        y = np.array([DM] * 10 + [HEALTHY] * 10)
        model = svm_train_smo(X, y, C=1.0, kernel="rbf", seed=0)
        back = model_from_json(model_to_json(model))
        q = rng.standard_normal((5, 3))
        assert np.allclose(svm_decision(back, q), svm_decision(model, q), rtol=0, atol=1e-15)

    def test_knn_roundtrip_preserves_predictions(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((12, 2))
        y = np.where(rng.random(12) < 0.5, DM, HEALTHY)
        model = knn_train(X, y, k=3)
        back = model_from_json(model_to_json(model))
        q = rng.standard_normal((6, 2))
        assert np.array_equal(knn_predict(back, q), knn_predict(model, q))

    def test_version_field_mandatory(self):
        import json

        model = knn_train(np.zeros((2, 1)), np.array([DM, HEALTHY]), k=1)
        payload = json.loads(model_to_json(model))
        assert payload["version"] == 1
        payload["version"] = 99
        with pytest.raises(ParameterError, match="version"):
            model_from_json(json.dumps(payload))


def test_train_classifier_dispatch():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([HEALTHY, HEALTHY, DM, DM])
    knn = train_classifier(ClassifierSpec(kind="knn", k=1), X, y)
    svm = train_classifier(ClassifierSpec(kind="svm", C=10.0, kernel="linear"), X, y)
    from facetex.classify import predict

    assert predict(knn, np.array([[3.0]]))[0] == DM
    assert predict(svm, np.array([[3.0]]))[0] == DM
    with pytest.raises(ParameterError):
        train_classifier(ClassifierSpec(kind="forest"), X, y)
