"""Command-line entry point.

Subcommands: extract (feature store), eval (one case), sweep (full grid),
synth (synthetic dataset), report (re-render summary from a per-case CSV).
Exit codes: 0 success, 1 input error, 2 convergence / undefined-metric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset, evaluate, pipeline, synth
from .classify import DM, HEALTHY
from .config import Config, config_hash, load_config
from .errors import (
    ConfigError,
    DatasetError,
    FacetexError,
    ParameterError,
    RUNTIME_ERRORS,
)
from .pipeline import BankAssignment, FeatureExtractor, Method

STORE_FORMAT_VERSION = 1


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; bad input is exit code 1 here
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="facetex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, manifest=True):
        p.add_argument("--config", help="JSON config file")
        if manifest:
            p.add_argument("--manifest", help="dataset manifest CSV")
            p.add_argument("--rois", help="ROI manifest JSON (default: rois.json beside the manifest)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")

    p_extract = sub.add_parser("extract", help="cache m1/m2 feature vectors to a store file")
    common(p_extract)

    p_eval = sub.add_parser("eval", help="run a single case")
    common(p_eval)
    p_eval.add_argument("--store", help="feature store JSON from `extract` (m1/m2 only)")
    p_eval.add_argument("--camera", required=True)
    p_eval.add_argument("--method", required=True, choices=[m.value for m in Method])
    p_eval.add_argument("--classifier", required=True, choices=["svm", "knn"])
    p_eval.add_argument("--size", required=True, type=int)
    p_eval.add_argument("--repeats", type=int)

    p_sweep = sub.add_parser("sweep", help="run the full case grid")
    common(p_sweep)
    p_sweep.add_argument("--store", help="feature store JSON (restricts methods to m1/m2)")
    p_sweep.add_argument("--repeats", type=int)

    p_synth = sub.add_parser("synth", help="generate a synthetic pre-cropped dataset")
    common(p_synth, manifest=False)
    p_synth.add_argument("--n-per-class", type=int, default=50)

    p_report = sub.add_parser("report", help="re-render the summary from a per-case CSV")
    p_report.add_argument("--cases", required=True, help="cases.csv from a sweep")
    p_report.add_argument("--out", help="directory for the re-rendered summary.csv")

    return parser


def _load_cfg(args) -> Config:
    overrides = {}
    for key in ("seed", "manifest", "repeats"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "out", None) is not None:
        overrides["out_dir"] = args.out
    return load_config(getattr(args, "config", None), overrides)


def _load_samples(cfg: Config, args):
    if cfg.manifest is None:
        raise ParameterError("a dataset manifest is required (--manifest or config)")
    samples, errors = dataset.load_samples(
        cfg.manifest, roi_path=getattr(args, "rois", None), cheek_mode=cfg.cheek_mode
    )
    return samples, errors


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_extract(args) -> int:
    cfg = _load_cfg(args)
    samples, errors = _load_samples(cfg, args)
    extractor = FeatureExtractor(texture_mode=cfg.bank.texture_mode, padding=cfg.bank.padding)
    uniform = BankAssignment.uniform(pipeline.uniform_bank_config(cfg.bank))

    entries = []
    for s in samples:
        m1 = pipeline.assemble_features(s.blocks, uniform, Method.M1, extractor)
        m2 = pipeline.assemble_features(s.blocks, uniform, Method.M2, extractor)
        entries.append(
            {
                "subject_id": s.subject_id,
                "camera": s.camera,
                "label": "dm" if s.label == DM else "healthy",
                "m1": m1.values.tolist(),
                "m2": m2.values.tolist(),
            }
        )

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = {
        "version": STORE_FORMAT_VERSION,
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "samples": entries,
    }
    (out_dir / "features.json").write_text(
        json.dumps(store, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for err in errors:
        print(f"error: {err.image_path}: {err.error}", file=sys.stderr)
    print(f"wrote {out_dir / 'features.json'} ({len(entries)} samples)")
    return 1 if errors else 0


def _samples_from_store(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("version") != STORE_FORMAT_VERSION:
        raise ParameterError(f"unsupported feature store version {data.get('version')!r}")
    return data["samples"]


class _StoreSample:
    """Feature-store row shaped like a dataset Sample for subset selection."""

    __slots__ = ("subject_id", "camera", "label", "vectors")

    def __init__(self, row):
        self.subject_id = row["subject_id"]
        self.camera = row["camera"]
        self.label = DM if row["label"] == "dm" else HEALTHY
        self.vectors = {"m1": np.array(row["m1"]), "m2": np.array(row["m2"])}


def _run_case_from_store(spec, store_samples, cfg):
    if spec.method.per_block_banks:
        raise ConfigError(
            f"method {spec.method.value} needs raw blocks; a feature store only covers m1/m2"
        )
    from . import classify

    subset, labels = evaluate._case_subset(spec, store_samples)
    split_seed = evaluate.derive_seed(spec.seed, spec.camera, spec.size, "split")
    train_idx, test_idx = evaluate.stratified_split(labels, ratio=0.7, seed=split_seed)
    X = np.stack([s.vectors[spec.method.value] for s in subset])
    model = classify.train_classifier(
        evaluate._classifier_spec(spec.classifier, cfg),
        X[train_idx],
        labels[train_idx],
        seed=evaluate.derive_seed(
            spec.seed, spec.camera, spec.size, spec.method.value, spec.classifier, "train"
        ),
    )
    preds = classify.predict(model, X[test_idx])
    counts = evaluate.confusion_counts(labels[test_idx], preds)
    metrics = evaluate.compute_metrics(counts)
    scores = classify.decision_scores(model, X[test_idx])
    roc = evaluate.roc_auc(scores, labels[test_idx]) if scores is not None else None
    return evaluate.CaseResult(spec=spec, counts=counts, metrics=metrics, roc=roc, banks=None)


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    if args.store:
        store_samples = [_StoreSample(r) for r in _samples_from_store(args.store)]
        samples, extractor = None, None
    else:
        samples, errors = _load_samples(cfg, args)
        _require_clean(errors)
        extractor = FeatureExtractor(
            texture_mode=cfg.bank.texture_mode, padding=cfg.bank.padding
        )
    results = []
    for rep in range(cfg.repeats):
        spec = evaluate.CaseSpec(
            camera=args.camera,
            method=Method(args.method),
            classifier=args.classifier,
            size=args.size,
            seed=cfg.seed + rep,
        )
        if args.store:
            results.append(_run_case_from_store(spec, store_samples, cfg))
        else:
            results.append(evaluate.run_case(spec, samples, cfg, extractor))

    report = evaluate.SweepReport(
        config_hash=config_hash(cfg), seed=cfg.seed, results=tuple(results),
        summary=tuple(evaluate.summarize(results)),
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluate.write_cases_csv(out_dir / "cases.csv", report)
    evaluate.write_roc_csvs(out_dir, report)
    for res in results:
        m = res.metrics
        print(
            f"{res.spec.case_id}: accuracy={m.accuracy:.3f} "
            f"sensitivity={m.sensitivity:.3f} specificity={m.specificity:.3f}"
        )
    return 0


def _require_clean(errors):
    if errors:
        details = "; ".join(f"{e.image_path}: {e.error}" for e in errors)
        raise DatasetError(f"{len(errors)} manifest row(s) failed to load: {details}")


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    if getattr(args, "store", None):
        raise ConfigError("sweep requires raw blocks; run it from a manifest, not a store")
    samples, errors = _load_samples(cfg, args)
    _require_clean(errors)
    report = evaluate.run_sweep(cfg, samples)
    evaluate.write_report(cfg.out_dir, report)
    failed = [r for r in report.results if isinstance(r, evaluate.FailedCase)]
    for f in failed:
        print(f"failed: {f.spec.case_id}: {f.error}", file=sys.stderr)
    print(
        f"wrote {len(report.results)} case rows "
        f"({len(failed)} failed) to {Path(cfg.out_dir) / 'cases.csv'}"
    )
    return 0


def cmd_synth(args) -> int:
    cfg = _load_cfg(args)
    manifest = synth.write_synthetic_dataset(
        cfg.out_dir, n_per_class=args.n_per_class, seed=cfg.seed
    )
    print(f"wrote {manifest}")
    return 0


def cmd_report(args) -> int:
    rows, meta = evaluate.load_cases_csv(args.cases)
    results = []
    for row in rows:
        if row["accuracy"] == "":
            continue
        spec = evaluate.CaseSpec(
            camera=row["camera"],
            method=Method(row["method"]),
            classifier=row["classifier"],
            size=int(row["size"]),
            seed=int(row["seed"]),
        )
        counts = evaluate.ConfusionCounts(
            tp=int(row["tp"]), fn=int(row["fn"]), tn=int(row["tn"]), fp=int(row["fp"])
        )
        metrics = evaluate.MetricSet(
            accuracy=float(row["accuracy"]),
            sensitivity=float(row["sensitivity"]),
            specificity=float(row["specificity"]),
        )
        results.append(
            evaluate.CaseResult(spec=spec, counts=counts, metrics=metrics, roc=None, banks=None)
        )
    report = evaluate.SweepReport(
        config_hash=meta.get("config_hash", "unknown"),
        seed=int(meta.get("seed", 0)),
        results=tuple(results),
        summary=tuple(evaluate.summarize(results)),
    )
    lines = [evaluate.SUMMARY_HEADER]
    for size, camera, method, clf, acc, sens, spec_ in report.summary:
        lines.append(f"{size},{camera},{method},{clf},{acc:.3f},{sens:.3f},{spec_:.3f}")
    print("\n".join(lines))
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        evaluate.write_summary_csv(out_dir / "summary.csv", report)
    return 0


_COMMANDS = {
    "extract": cmd_extract,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except RUNTIME_ERRORS as exc:
        print(f"facetex: {exc}", file=sys.stderr)
        return 2
    except FacetexError as exc:
        print(f"facetex: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"facetex: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
