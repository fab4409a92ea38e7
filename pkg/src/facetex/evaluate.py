"""Stratified splitting, confusion metrics, ROC/AUC, and the sweep harness.

The full sweep covers cameras x methods x classifiers x dataset sizes
(3 x 4 x 2 x 4 = 96 cases by default). Per-case and summary tables are
emitted as CSV with a leading comment line carrying the config hash and
master seed, so reruns with the same configuration are byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import classify, pipeline
from .classify import DM, HEALTHY, ClassifierSpec
from .config import CAMERAS, CLASSIFIERS, METHODS, Config, config_hash, derive_seed
from .errors import DatasetError, FacetexError, MetricUndefinedError, ParameterError
from .pipeline import BankAssignment, FeatureExtractor, Method

CASES_HEADER = "camera,method,classifier,size,seed,tp,fn,tn,fp,accuracy,sensitivity,specificity,auc"
SUMMARY_HEADER = "size,camera,method,classifier,accuracy,sensitivity,specificity"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    sensitivity: float
    specificity: float


@dataclass(frozen=True)
class RocCurve:
    thresholds: tuple
    fpr: tuple
    tpr: tuple
    auc: float


@dataclass(frozen=True)
class CaseSpec:
    camera: str
    method: Method
    classifier: str  # "svm" or "knn"
    size: int
    seed: int

    @property
    def case_id(self) -> str:
        return f"{self.camera}_{self.method.value}_{self.classifier}_{self.size}_s{self.seed}"


@dataclass(frozen=True)
class CaseResult:
    spec: CaseSpec
    counts: ConfusionCounts
    metrics: MetricSet
    roc: RocCurve | None
    banks: BankAssignment | None


@dataclass(frozen=True)
class FailedCase:
    spec: CaseSpec
    error: str


@dataclass(frozen=True)
class SweepReport:
    config_hash: str
    seed: int
    results: tuple  # CaseResult | FailedCase, grid order
    summary: tuple  # summary rows


# --------------------------------------------------------------------------
# Splitting and metrics
# --------------------------------------------------------------------------

def stratified_split(labels, ratio: float = 0.7, seed: int = 0):
    """Seeded per-class shuffle; the first ceil(ratio * n_class) of each class
    go to train, the rest to test. Returns sorted index arrays."""
    labels = np.asarray(labels)
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls_label in (DM, HEALTHY):
        idx = np.flatnonzero(labels == cls_label)
        if len(idx) < 2:
            raise DatasetError(
                f"stratified split needs >= 2 samples per class, class {cls_label} has {len(idx)}"
            )
        perm = rng.permutation(idx)
        cut = math.ceil(ratio * len(idx))
        train.extend(perm[:cut])
        test.extend(perm[cut:])
    return np.sort(np.array(train, dtype=np.intp)), np.sort(np.array(test, dtype=np.intp))


def confusion_counts(y_true, y_pred) -> ConfusionCounts:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return ConfusionCounts(
        tp=int(((y_true == DM) & (y_pred == DM)).sum()),
        fn=int(((y_true == DM) & (y_pred == HEALTHY)).sum()),
        tn=int(((y_true == HEALTHY) & (y_pred == HEALTHY)).sum()),
        fp=int(((y_true == HEALTHY) & (y_pred == DM)).sum()),
    )


def compute_metrics(c: ConfusionCounts) -> MetricSet:
    pos = c.tp + c.fn
    neg = c.tn + c.fp
    if pos < 1 or neg < 1:
        raise MetricUndefinedError(
            f"metrics undefined: {pos} positive and {neg} negative test samples"
        )
    return MetricSet(
        accuracy=(c.tp + c.tn) / (pos + neg),
        sensitivity=c.tp / pos,
        specificity=c.tn / neg,
    )


def roc_auc(scores, labels) -> RocCurve:
    """Threshold sweep over descending unique scores with trapezoidal AUC.

    Tied scores collapse into a single threshold step, which makes the AUC
    equal the Mann-Whitney statistic with half credit for ties.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if not np.all(np.isfinite(scores)):
        raise ParameterError("ROC scores must be finite")
    pos = int((labels == DM).sum())
    neg = int((labels == HEALTHY).sum())
    if pos == 0 or neg == 0:
        raise MetricUndefinedError("ROC undefined: both classes must be present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    is_pos = (labels[order] == DM).astype(np.int64)
    tps = np.cumsum(is_pos)
    fps = np.cumsum(1 - is_pos)
    last_of_group = np.flatnonzero(np.diff(s, append=np.nan) != 0)

    thresholds = [math.inf]
    fpr = [0.0]
    tpr = [0.0]
    for i in last_of_group:
        thresholds.append(float(s[i]))
        fpr.append(fps[i] / neg)
        tpr.append(tps[i] / pos)
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=tuple(thresholds), fpr=tuple(fpr), tpr=tuple(tpr), auc=auc)


# --------------------------------------------------------------------------
# Case execution
# --------------------------------------------------------------------------

def _case_subset(spec: CaseSpec, samples):
    """First size/2 samples per class after a seeded per-class shuffle.

    The shuffle seed does not involve the size, so smaller sizes are nested
    prefixes of larger ones under the same master seed.
    """
    if spec.size % 2 != 0:
        raise ParameterError(f"dataset size must be even, got {spec.size}")
    per_class = spec.size // 2
    chosen = []
    for cls_label, tag in ((DM, "dm"), (HEALTHY, "healthy")):
        pool = [s for s in samples if s.camera == spec.camera and s.label == cls_label]
        if len(pool) < per_class:
            raise DatasetError(
                f"camera {spec.camera} has {len(pool)} {tag} samples, need {per_class}"
            )
        rng = np.random.default_rng(derive_seed(spec.seed, spec.camera, "subset", tag))
        order = rng.permutation(len(pool))
        chosen.extend(pool[i] for i in order[:per_class])
    labels = np.array([s.label for s in chosen], dtype=np.int64)
    return chosen, labels


def _case_assignment(spec, subset, labels, train_idx, config, extractor):
    if not spec.method.per_block_banks:
        return BankAssignment.uniform(pipeline.uniform_bank_config(config.bank))
    grid = pipeline.selection_grid(config.selection, config.bank)
    clf_spec = _classifier_spec(spec.classifier, config)
    chosen = {}
    for name in pipeline.BLOCK_ORDER:
        blocks = [subset[i].blocks.as_dict()[name] for i in train_idx]
        sel = pipeline.select_block_bank(
            blocks,
            labels[train_idx],
            grid,
            clf_spec,
            split_seed=derive_seed(
                spec.seed, spec.camera, spec.size, spec.method.value, spec.classifier,
                "select", name,
            ),
            extractor=extractor,
        )
        chosen[name] = sel.config
    return BankAssignment(**chosen)


def _classifier_spec(classifier: str, config: Config) -> ClassifierSpec:
    if classifier not in ("svm", "knn"):
        raise ParameterError(f"unknown classifier {classifier!r}")
    c = config.classifier
    return ClassifierSpec(
        kind=classifier, k=c.k, C=c.C, kernel=c.kernel, rbf_gamma=c.rbf_gamma
    )


def run_case(
    spec: CaseSpec,
    samples,
    config: Config,
    extractor: FeatureExtractor | None = None,
) -> CaseResult:
    """One grid cell: subset, split 70:30, assemble features, train, evaluate.

    Methods 3/4 select their per-block banks on the training split only.
    """
    extractor = extractor or FeatureExtractor(
        texture_mode=config.bank.texture_mode, padding=config.bank.padding
    )
    subset, labels = _case_subset(spec, samples)
    split_seed = derive_seed(spec.seed, spec.camera, spec.size, "split")
    train_idx, test_idx = stratified_split(labels, ratio=0.7, seed=split_seed)

    assignment = _case_assignment(spec, subset, labels, train_idx, config, extractor)
    X = pipeline.assemble_features_batch(
        [s.blocks for s in subset], assignment, spec.method, extractor
    )

    model = classify.train_classifier(
        _classifier_spec(spec.classifier, config),
        X[train_idx],
        labels[train_idx],
        seed=derive_seed(
            spec.seed, spec.camera, spec.size, spec.method.value, spec.classifier, "train"
        ),
    )
    preds = classify.predict(model, X[test_idx])
    counts = confusion_counts(labels[test_idx], preds)
    metrics = compute_metrics(counts)
    scores = classify.decision_scores(model, X[test_idx])
    roc = roc_auc(scores, labels[test_idx]) if scores is not None else None
    banks = assignment if spec.method.per_block_banks else None
    return CaseResult(spec=spec, counts=counts, metrics=metrics, roc=roc, banks=banks)


def run_sweep(config: Config, samples) -> SweepReport:
    """Run the full case grid; per-case failures become failed cells."""
    extractor = FeatureExtractor(
        texture_mode=config.bank.texture_mode, padding=config.bank.padding
    )
    results = []
    for camera in config.sweep.cameras:
        for method in config.sweep.methods:
            for classifier in config.sweep.classifiers:
                for size in config.sweep.sizes:
                    for rep in range(config.repeats):
                        spec = CaseSpec(
                            camera=camera,
                            method=Method(method),
                            classifier=classifier,
                            size=int(size),
                            seed=config.seed + rep,
                        )
                        try:
                            results.append(run_case(spec, samples, config, extractor))
                        except FacetexError as exc:
                            results.append(FailedCase(spec=spec, error=str(exc)))
    summary = summarize(results)
    return SweepReport(
        config_hash=config_hash(config),
        seed=config.seed,
        results=tuple(results),
        summary=tuple(summary),
    )


def summarize(results: Sequence) -> list[tuple]:
    """Best row per (camera, size) by mean accuracy over repeats; ties broken
    by method index, then SVM before k-NN. Rows ordered size-descending with
    cameras in canonical order, so a summary re-rendered from the per-case CSV
    is identical to the one the sweep wrote."""
    method_order = {m: i for i, m in enumerate(METHODS)}
    clf_order = {c: i for i, c in enumerate(CLASSIFIERS)}
    camera_order = {c: i for i, c in enumerate(CAMERAS)}

    grouped: dict[tuple, list[CaseResult]] = {}
    for res in results:
        if isinstance(res, CaseResult):
            key = (res.spec.camera, res.spec.method.value, res.spec.classifier, res.spec.size)
            grouped.setdefault(key, []).append(res)

    sizes = sorted({key[3] for key in grouped}, reverse=True)
    cameras = sorted({key[0] for key in grouped}, key=lambda c: (camera_order.get(c, 99), c))
    rows = []
    for size in sizes:
        for camera in cameras:
            candidates = []
            for (cam, method, clf, sz), group in grouped.items():
                if cam != camera or sz != size:
                    continue
                acc = float(np.mean([g.metrics.accuracy for g in group]))
                sens = float(np.mean([g.metrics.sensitivity for g in group]))
                spec_ = float(np.mean([g.metrics.specificity for g in group]))
                candidates.append(
                    (-acc, method_order.get(method, 99), clf_order.get(clf, 99),
                     camera, method, clf, acc, sens, spec_)
                )
            if candidates:
                best = min(candidates)
                rows.append((size, best[3], best[4], best[5], best[6], best[7], best[8]))
    return rows


# --------------------------------------------------------------------------
# Report files
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _provenance_line(report: SweepReport) -> str:
    return f"# config_hash={report.config_hash} seed={report.seed}"


def write_cases_csv(path, report: SweepReport) -> None:
    lines = [_provenance_line(report), CASES_HEADER]
    for res in report.results:
        s = res.spec
        base = f"{s.camera},{s.method.value},{s.classifier},{s.size},{s.seed}"
        if isinstance(res, FailedCase):
            lines.append(f"{base},,,,,,,,")
        else:
            c, m = res.counts, res.metrics
            auc = _fmt(res.roc.auc) if res.roc is not None else ""
            lines.append(
                f"{base},{c.tp},{c.fn},{c.tn},{c.fp},"
                f"{_fmt(m.accuracy)},{_fmt(m.sensitivity)},{_fmt(m.specificity)},{auc}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary_csv(path, report: SweepReport) -> None:
    lines = [_provenance_line(report), SUMMARY_HEADER]
    for size, camera, method, clf, acc, sens, spec_ in report.summary:
        lines.append(
            f"{size},{camera},{method},{clf},{_fmt(acc)},{_fmt(sens)},{_fmt(spec_)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_roc_csvs(out_dir, report: SweepReport) -> list[str]:
    out_dir = Path(out_dir)
    written = []
    for res in report.results:
        if isinstance(res, FailedCase) or res.roc is None:
            continue
        lines = [_provenance_line(report), "threshold,fpr,tpr"]
        for t, f, tp in zip(res.roc.thresholds, res.roc.fpr, res.roc.tpr):
            tstr = "inf" if math.isinf(t) else f"{t:.6f}"
            lines.append(f"{tstr},{f:.6f},{tp:.6f}")
        name = f"roc_{res.spec.case_id}.csv"
        (out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(name)
    return written


def write_banks_json(path, report: SweepReport) -> None:
    payload = {
        "config_hash": report.config_hash,
        "seed": report.seed,
        "cases": {
            res.spec.case_id: res.banks.to_dict()
            for res in report.results
            if isinstance(res, CaseResult) and res.banks is not None
        },
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_report(out_dir, report: SweepReport) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_cases_csv(out_dir / "cases.csv", report)
    write_summary_csv(out_dir / "summary.csv", report)
    write_roc_csvs(out_dir, report)
    write_banks_json(out_dir / "banks.json", report)


def load_cases_csv(path):
    """Rows of cases.csv as dicts (failed cells have empty metric fields),
    plus the provenance comment fields."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for token in lines[0][1:].split():
            if "=" in token:
                key, value = token.split("=", 1)
                meta[key] = value
        lines = lines[1:]
    if not lines or lines[0] != CASES_HEADER:
        raise ParameterError(f"{path} does not look like a per-case CSV")
    columns = CASES_HEADER.split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        rows.append(dict(zip(columns, line.split(","))))
    return rows, meta
