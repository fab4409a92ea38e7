"""Binary classifiers over feature vectors: brute-force k-NN and a soft-margin
SVM trained by sequential minimal optimization (SMO).

Labels are +1 (DM, the positive class) and -1 (Healthy). Both classifiers
z-score their inputs with a standardizer fitted on the training set; a
dimension with near-zero spread passes through unscaled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DatasetError,
    ParameterError,
    ShapeError,
)

DM = 1
HEALTHY = -1

MODEL_FORMAT_VERSION = 1

_STD_FLOOR = 1e-12
_ALPHA_EPS = 1e-10


@dataclass(frozen=True)
class ClassifierSpec:
    """Which classifier to train and with what hyperparameters."""

    kind: str  # "svm" or "knn"
    k: int = 5
    C: float = 1.0
    kernel: str = "rbf"  # or "linear"
    rbf_gamma: float | None = None  # None -> 1 / n_features


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ParameterError(f"training matrix must be non-empty 2-D, got shape {X.shape}")
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std < _STD_FLOOR, 1.0, std)
        return cls(mean=mean, std=std)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise ShapeError(
                f"expected {self.mean.shape[0]} features, got {X.shape[-1]}"
            )
        return (X - self.mean) / self.std


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ParameterError(f"feature matrix must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"labels shape {y.shape} does not match {X.shape[0]} samples")
    if not set(np.unique(y)) <= {DM, HEALTHY}:
        raise ParameterError(f"labels must be +1/-1, got {sorted(set(y.tolist()))}")
    return X, y.astype(np.int64)


# --------------------------------------------------------------------------
# k-NN
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    k: int
    train: np.ndarray  # standardized training vectors
    labels: np.ndarray
    standardizer: Standardizer


def knn_train(X, y, k: int = 5) -> KnnModel:
    X, y = _check_xy(X, y)
    n = X.shape[0]
    if k < 1 or k > n:
        raise ParameterError(f"k must satisfy 1 <= k <= {n}, got {k}")
    if k % 2 == 0:
        raise ParameterError(f"k must be odd, got {k}")
    std = Standardizer.fit(X)
    return KnnModel(k=k, train=std.apply(X), labels=y, standardizer=std)


def knn_predict(model: KnnModel, x) -> np.ndarray | int:
    """Majority label among the k nearest neighbors (Euclidean, standardized).

    Distance ties are broken by the lower training index. Accepts a single
    vector or a (n, d) batch.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Z = model.standardizer.apply(np.atleast_2d(x))
    preds = np.empty(Z.shape[0], dtype=np.int64)
    for i, z in enumerate(Z):
        d2 = ((model.train - z) ** 2).sum(axis=1)
        order = np.argsort(d2, kind="stable")[: model.k]
        vote = model.labels[order].sum()
        preds[i] = DM if vote >= 0 else HEALTHY
    return int(preds[0]) if single else preds


# --------------------------------------------------------------------------
# SVM / SMO
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SvmModel:
    kernel: str
    gamma: float | None  # resolved value for rbf, None for linear
    C: float
    support_vectors: np.ndarray  # standardized
    dual_coef: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    standardizer: Standardizer


def _kernel_matrix(kind: str, gamma, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kind == "linear":
        return A @ B.T
    if kind == "rbf":
        sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ParameterError(f"unknown SVM kernel {kind!r}")


def svm_train_smo(
    X,
    y,
    C: float = 1.0,
    kernel: str = "rbf",
    gamma: float | None = None,
    seed: int = 0,
    tol: float = 1e-3,
) -> SvmModel:
    """Solve the soft-margin dual by SMO.

    Convergence is declared after a full pass with no multiplier change whose
    KKT conditions all hold within `tol`; training aborts with an error after
    10 * n passes. The second multiplier uses the max |E_i - E_j| heuristic
    with a seeded random fallback, so training is deterministic given `seed`.
    """
    X, y = _check_xy(X, y)
    if C <= 0 or not np.isfinite(C):
        raise ParameterError(f"C must be positive and finite, got {C}")
    classes = set(np.unique(y).tolist())
    if classes != {DM, HEALTHY}:
        raise DatasetError(f"SVM training requires both classes, got labels {sorted(classes)}")

    std = Standardizer.fit(X)
    Z = std.apply(X)
    n, d = Z.shape
    if kernel == "rbf" and gamma is None:
        gamma = 1.0 / d
    K = _kernel_matrix(kernel, gamma, Z, Z)
    yf = y.astype(np.float64)

    rng = np.random.default_rng(seed)
    alpha = np.zeros(n)
    b = 0.0
    max_passes = 10 * n
    converged = False

    def errors() -> np.ndarray:
        return (alpha * yf) @ K + b - yf

    for _ in range(max_passes):
        E = errors()
        changed = 0
        for i in range(n):
            r = yf[i] * E[i]
            if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0)):
                continue
            gap = np.abs(E[i] - E)
            gap[i] = -1.0
            j = int(np.argmax(gap))
            if not _smo_step(i, j, alpha, yf, K, E, C):
                j = int(rng.integers(n - 1))
                if j >= i:
                    j += 1
                if not _smo_step(i, j, alpha, yf, K, E, C):
                    continue
            changed += 1
            b_new = _smo_bias(i, j, alpha, yf, K, E, C, b)
            E += b_new - b
            b = b_new
        if changed == 0:
            if _kkt_violation(alpha, yf, K, b, C) <= tol:
                converged = True
                break
    if not converged:
        violation = _kkt_violation(alpha, yf, K, b, C)
        raise ConvergenceError(
            f"SMO did not converge within {max_passes} passes "
            f"(final KKT violation {violation:.3e})"
        )

    # refine the bias from the free support vectors
    free = (alpha > _ALPHA_EPS) & (alpha < C - _ALPHA_EPS)
    if free.any():
        f_no_b = (alpha * yf) @ K[:, free]
        b = float((yf[free] - f_no_b).mean())

    sv = alpha > _ALPHA_EPS
    return SvmModel(
        kernel=kernel,
        gamma=gamma,
        C=float(C),
        support_vectors=Z[sv].copy(),
        dual_coef=(alpha * yf)[sv].copy(),
        bias=b,
        standardizer=std,
    )


def _smo_step(i, j, alpha, yf, K, E, C) -> bool:
    """Joint optimization of one multiplier pair; updates alpha and E in place."""
    if i == j:
        return False
    if yf[i] != yf[j]:
        L = max(0.0, alpha[j] - alpha[i])
        H = min(C, C + alpha[j] - alpha[i])
    else:
        L = max(0.0, alpha[i] + alpha[j] - C)
        H = min(C, alpha[i] + alpha[j])
    if L >= H:
        return False
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta < 0:
        aj = alpha[j] - yf[j] * (E[i] - E[j]) / eta
        aj = min(H, max(L, aj))
    else:
        # flat or concave direction (duplicate points): evaluate the dual
        # objective at both clip bounds; bias terms cancel in the comparison
        s = yf[i] * yf[j]
        f1 = yf[i] * E[i] - alpha[i] * K[i, i] - s * alpha[j] * K[i, j]
        f2 = yf[j] * E[j] - s * alpha[i] * K[i, j] - alpha[j] * K[j, j]
        l1 = alpha[i] + s * (alpha[j] - L)
        h1 = alpha[i] + s * (alpha[j] - H)
        lobj = (l1 * f1 + L * f2 + 0.5 * l1 * l1 * K[i, i]
                + 0.5 * L * L * K[j, j] + s * L * l1 * K[i, j])
        hobj = (h1 * f1 + H * f2 + 0.5 * h1 * h1 * K[i, i]
                + 0.5 * H * H * K[j, j] + s * H * h1 * K[i, j])
        eps = 1e-12 * (abs(lobj) + abs(hobj) + 1.0)
        if lobj < hobj - eps:
            aj = L
        elif lobj > hobj + eps:
            aj = H
        else:
            return False
    if abs(aj - alpha[j]) < _ALPHA_EPS:
        return False
    ai = alpha[i] + yf[i] * yf[j] * (alpha[j] - aj)
    dai = ai - alpha[i]
    daj = aj - alpha[j]
    alpha[i] = ai
    alpha[j] = aj
    E += dai * yf[i] * K[i] + daj * yf[j] * K[j]
    return True


def _smo_bias(i, j, alpha, yf, K, E, C, b) -> float:
    # E already reflects the alpha update relative to the old bias
    b1 = b - E[i]
    b2 = b - E[j]
    if 0.0 < alpha[i] < C:
        return b1
    if 0.0 < alpha[j] < C:
        return b2
    return (b1 + b2) / 2.0


def _kkt_violation(alpha, yf, K, b, C) -> float:
    margins = yf * ((alpha * yf) @ K + b)
    at_zero = alpha <= _ALPHA_EPS
    at_c = alpha >= C - _ALPHA_EPS
    free = ~(at_zero | at_c)
    worst = 0.0
    if at_zero.any():
        worst = max(worst, float((1.0 - margins[at_zero]).max()))
    if at_c.any():
        worst = max(worst, float((margins[at_c] - 1.0).max()))
    if free.any():
        worst = max(worst, float(np.abs(margins[free] - 1.0).max()))
    return worst


def svm_decision(model: SvmModel, x) -> np.ndarray | float:
    """Signed distance surrogate: sum_i alpha_i y_i K(sv_i, x) + b."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    Z = model.standardizer.apply(np.atleast_2d(x))
    if model.support_vectors.shape[0] == 0:
        scores = np.full(Z.shape[0], model.bias)
    else:
        Kx = _kernel_matrix(model.kernel, model.gamma, Z, model.support_vectors)
        scores = Kx @ model.dual_coef + model.bias
    return float(scores[0]) if single else scores


def svm_predict(model: SvmModel, x) -> np.ndarray | int:
    """Sign of the decision value; an exact zero maps to DM (+1)."""
    scores = svm_decision(model, x)
    if np.isscalar(scores):
        return DM if scores >= 0 else HEALTHY
    return np.where(np.asarray(scores) >= 0, DM, HEALTHY)


# --------------------------------------------------------------------------
# Dispatch and serialization
# --------------------------------------------------------------------------

def train_classifier(spec: ClassifierSpec, X, y, seed: int = 0):
    if spec.kind == "knn":
        return knn_train(X, y, k=spec.k)
    if spec.kind == "svm":
        return svm_train_smo(
            X, y, C=spec.C, kernel=spec.kernel, gamma=spec.rbf_gamma, seed=seed
        )
    raise ParameterError(f"unknown classifier kind {spec.kind!r}")


def predict(model, X):
    if isinstance(model, KnnModel):
        return knn_predict(model, X)
    return svm_predict(model, X)


def decision_scores(model, X):
    """Continuous scores for ROC; None for k-NN (majority vote has none)."""
    if isinstance(model, SvmModel):
        return svm_decision(model, X)
    return None


def model_to_json(model) -> str:
    if isinstance(model, KnnModel):
        payload = {
            "version": MODEL_FORMAT_VERSION,
            "type": "knn",
            "k": model.k,
            "metric": "euclidean",
            "train": model.train.tolist(),
            "labels": model.labels.tolist(),
            "standardizer": {
                "mean": model.standardizer.mean.tolist(),
                "std": model.standardizer.std.tolist(),
            },
        }
    elif isinstance(model, SvmModel):
        payload = {
            "version": MODEL_FORMAT_VERSION,
            "type": "svm",
            "kernel": model.kernel,
            "gamma": model.gamma,
            "C": model.C,
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "standardizer": {
                "mean": model.standardizer.mean.tolist(),
                "std": model.standardizer.std.tolist(),
            },
        }
    else:
        raise ParameterError(f"cannot serialize {type(model).__name__}")
    return json.dumps(payload, sort_keys=True)


def model_from_json(text: str):
    data = json.loads(text)
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ParameterError(f"unsupported model format version {data.get('version')!r}")
    std = Standardizer(
        mean=np.array(data["standardizer"]["mean"], dtype=np.float64),
        std=np.array(data["standardizer"]["std"], dtype=np.float64),
    )
    if data["type"] == "knn":
        return KnnModel(
            k=data["k"],
            train=np.array(data["train"], dtype=np.float64),
            labels=np.array(data["labels"], dtype=np.int64),
            standardizer=std,
        )
    if data["type"] == "svm":
        return SvmModel(
            kernel=data["kernel"],
            gamma=data["gamma"],
            C=data["C"],
            support_vectors=np.array(data["support_vectors"], dtype=np.float64),
            dual_coef=np.array(data["dual_coef"], dtype=np.float64),
            bias=data["bias"],
            standardizer=std,
        )
    raise ParameterError(f"unknown model type {data['type']!r}")
