"""Metrics, the cross-validated experiment grid, and table-style reports.

The experiment runner walks a grid of (target, modality set) tables,
window plans, and model variants. Each cell runs k-fold cross-validation
on the training subjects, refits on train + validation, and reports
block-level test metrics next to the embedded reference constants for
that cell. Reports serialize to JSON and render as aligned text tables.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dataset import (
    MODALITY_ALL,
    MODALITY_EEG,
    MODALITY_PHYSIO,
    MODALITY_SETS,
    MODE_FEATURE,
    MODE_SEQUENCE,
    SEQUENCE_RATE_HZ,
    BlockContext,
    ExampleSet,
    RecordingBlock,
    SplitPlan,
    cv_folds,
    label_blocks,
    make_examples,
    policy_for_target,
    prepare_block,
    split_subjects,
)
from .errors import DataError, FatigueLabError, InvalidSpecError
from .models import (
    LSTMConfig,
    LogRegConfig,
    RFConfig,
    SVMConfig,
    TrainedModel,
    predict_blocks,
    predict_slices,
    train_lstm,
    train_logreg,
    train_rf,
    train_svm,
)
from .signals import WindowPlan

REPORT_FORMAT_VERSION = 1

MODEL_NAMES = ("logreg", "svm", "rf", "lstm")

#: VAS banding: none < 4, moderate 4..7 (upper bound read as inclusive;
#: recorded in report metadata), extreme > 7.
VAS_NONE_BELOW = 4
VAS_MODERATE_MAX = 7
VAS_BAND_NAMES = ("none", "moderate", "extreme")
VAS_BAND_NOTE = "moderate VAS band is 4 <= v <= 7 (inclusive upper bound)"

#: Metrics beyond block accuracy and average fold recall; included for
#: completeness and marked as supplementary in report metadata.
SUPPLEMENTARY_METRICS = ("precision", "f1")

#: Published target numbers for each (target, modality) table: block
#: accuracy (percent) per window column and the best average fatigue
#: recall across windows. Reports show these beside measured values;
#: matching them is not a pass/fail criterion.
REFERENCE_RESULTS: Dict[Tuple[str, str], Dict[str, dict]] = {
    ("CF", MODALITY_EEG): {
        "logreg": {"accuracy_pct": {"5s": 69.7, "10s": 72.6, "20s": 71.3, "full": 62.3}, "avg_recall": 0.76},
        "svm": {"accuracy_pct": {"5s": 73.1, "10s": 73.3, "20s": 71.7, "full": 69.4}, "avg_recall": 0.81},
        "rf": {"accuracy_pct": {"5s": 72.3, "10s": 81.9, "20s": 79.1, "full": 76.3}, "avg_recall": 0.89},
        "lstm": {"accuracy_pct": {"5s": 69.8, "10s": 71.8, "20s": 73.8, "full": 81.9}, "avg_recall": 0.82},
    },
    ("CF", MODALITY_PHYSIO): {
        "logreg": {"accuracy_pct": {"5s": 69.8, "10s": 70.1, "20s": 67.2, "full": 65.3}, "avg_recall": 0.69},
        "svm": {"accuracy_pct": {"5s": 71.2, "10s": 71.7, "20s": 70.8, "full": 70.1}, "avg_recall": 0.73},
        "rf": {"accuracy_pct": {"5s": 74.8, "10s": 76.3, "20s": 72.1, "full": 70.9}, "avg_recall": 0.71},
        "lstm": {"accuracy_pct": {"5s": 62.2, "10s": 63.7, "20s": 68.9, "full": 70.1}, "avg_recall": 0.69},
    },
    ("PF", MODALITY_PHYSIO): {
        "logreg": {"accuracy_pct": {"5s": 72.2, "10s": 72.2, "20s": 68.2, "full": 62.9}, "avg_recall": 0.74},
        "svm": {"accuracy_pct": {"5s": 76.1, "10s": 79.6, "20s": 75.2, "full": 73.1}, "avg_recall": 0.86},
        "rf": {"accuracy_pct": {"5s": 79.9, "10s": 80.5, "20s": 77.6, "full": 77.2}, "avg_recall": 0.88},
        "lstm": {"accuracy_pct": {"5s": 64.2, "10s": 64.8, "20s": 62.7, "full": 68.9}, "avg_recall": 0.79},
    },
    ("CF", MODALITY_ALL): {
        "logreg": {"accuracy_pct": {"5s": 64.0, "10s": 66.9, "20s": 66.1, "full": 60.4}, "avg_recall": 0.69},
        "svm": {"accuracy_pct": {"5s": 70.3, "10s": 74.6, "20s": 74.5, "full": 70.3}, "avg_recall": 0.79},
        "rf": {"accuracy_pct": {"5s": 67.9, "10s": 77.2, "20s": 76.8, "full": 74.5}, "avg_recall": 0.81},
        "lstm": {"accuracy_pct": {"5s": 71.3, "10s": 74.2, "20s": 74.8, "full": 84.1}, "avg_recall": 0.90},
    },
}


# ---------------------------------------------------------------- metrics ----


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    """Confusion counts plus derived rates.

    Rates whose denominator is empty are reported as 0.0 with the matching
    defined flag cleared, so degenerate label sets never divide by zero.
    """

    confusion: ConfusionMatrix
    accuracy: float
    recall: float
    precision: float
    f1: float
    recall_defined: bool
    precision_defined: bool
    f1_defined: bool

    def as_dict(self) -> dict:
        return {
            "tp": self.confusion.tp,
            "fp": self.confusion.fp,
            "tn": self.confusion.tn,
            "fn": self.confusion.fn,
            "accuracy": self.accuracy,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "recall_defined": self.recall_defined,
            "precision_defined": self.precision_defined,
            "f1_defined": self.f1_defined,
        }


def _metrics_from_dict(doc: Mapping) -> Metrics:
    return Metrics(
        confusion=ConfusionMatrix(
            tp=int(doc["tp"]), fp=int(doc["fp"]), tn=int(doc["tn"]), fn=int(doc["fn"])
        ),
        accuracy=float(doc["accuracy"]),
        recall=float(doc["recall"]),
        precision=float(doc["precision"]),
        f1=float(doc["f1"]),
        recall_defined=bool(doc["recall_defined"]),
        precision_defined=bool(doc["precision_defined"]),
        f1_defined=bool(doc["f1_defined"]),
    )


def score(predictions, labels) -> Metrics:
    """Confusion matrix and rates for 0/1 predictions against 0/1 labels.

    Raises:
        DataError: length mismatch, empty input, or non-binary values.
    """
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.ndim != 1 or labels.ndim != 1:
        raise DataError("predictions and labels must be 1-D")
    if predictions.size != labels.size:
        raise DataError(
            f"length mismatch: {predictions.size} predictions, {labels.size} labels"
        )
    if predictions.size == 0:
        raise DataError("cannot score an empty prediction set")
    for name, arr in (("predictions", predictions), ("labels", labels)):
        if not np.all(np.isin(arr, (0, 1))):
            raise DataError(f"{name} must contain only 0/1")
    p = predictions.astype(np.int64)
    y = labels.astype(np.int64)
    tp = int(np.sum((p == 1) & (y == 1)))
    fp = int(np.sum((p == 1) & (y == 0)))
    tn = int(np.sum((p == 0) & (y == 0)))
    fn = int(np.sum((p == 0) & (y == 1)))
    cm = ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)
    accuracy = (tp + tn) / cm.total
    recall_defined = (tp + fn) > 0
    precision_defined = (tp + fp) > 0
    recall = tp / (tp + fn) if recall_defined else 0.0
    precision = tp / (tp + fp) if precision_defined else 0.0
    f1_defined = recall_defined and precision_defined and (precision + recall) > 0
    f1 = 2 * precision * recall / (precision + recall) if f1_defined else 0.0
    return Metrics(
        confusion=cm,
        accuracy=accuracy,
        recall=recall,
        precision=precision,
        f1=f1,
        recall_defined=recall_defined,
        precision_defined=precision_defined,
        f1_defined=f1_defined,
    )


# ------------------------------------------------------------ VAS summary ----


def vas_band(value: float) -> str:
    if value < VAS_NONE_BELOW:
        return "none"
    if value <= VAS_MODERATE_MAX:
        return "moderate"
    return "extreme"


def summarize_vas(blocks: Sequence[RecordingBlock]) -> Dict[int, Dict[str, Dict[str, int]]]:
    """Per reading index and survey question, counts in the three VAS bands."""
    out: Dict[int, Dict[str, Dict[str, int]]] = {}
    for block in blocks:
        reading = out.setdefault(int(block.reading_index), {})
        for question, value in block.vas.items():
            counts = reading.setdefault(
                question, {name: 0 for name in VAS_BAND_NAMES}
            )
            counts[vas_band(value)] += 1
    return out


# ------------------------------------------------------- experiment types ----


@dataclass(frozen=True)
class TableSpec:
    """One result table: a label target plus a modality set.

    pca_k applies to the feature-mode models in this table only; sequence
    models never use PCA.
    """

    target: str
    modality_set: str
    pca_k: Optional[int] = None

    def __post_init__(self):
        policy_for_target(self.target)
        if self.modality_set not in MODALITY_SETS:
            raise InvalidSpecError(f"unknown modality set {self.modality_set!r}")


#: The four canonical tables; the combined-modality table reduces feature
#: dimension with PCA (clamped when the matrix is narrower than k).
DEFAULT_TABLES = (
    TableSpec("CF", MODALITY_EEG),
    TableSpec("CF", MODALITY_PHYSIO),
    TableSpec("PF", MODALITY_PHYSIO),
    TableSpec("CF", MODALITY_ALL, pca_k=189),
)

DEFAULT_WINDOWS = (
    WindowPlan(5.0),
    WindowPlan(10.0),
    WindowPlan(20.0),
    WindowPlan.full_block(),
)


@dataclass(frozen=True)
class ExperimentConfig:
    tables: Tuple[TableSpec, ...] = DEFAULT_TABLES
    windows: Tuple[WindowPlan, ...] = DEFAULT_WINDOWS
    models: Tuple[str, ...] = MODEL_NAMES
    n_folds: int = 5
    seed: int = 0
    sequence_rate_hz: float = SEQUENCE_RATE_HZ
    model_configs: Optional[Mapping[str, object]] = None

    def __post_init__(self):
        unknown = [m for m in self.models if m not in MODEL_NAMES]
        if unknown:
            raise InvalidSpecError(f"unknown models {unknown}")
        if not self.tables or not self.windows or not self.models:
            raise InvalidSpecError("experiment grid must be non-empty")
        if self.n_folds < 2:
            raise InvalidSpecError(f"n_folds must be >= 2, got {self.n_folds}")

    def to_doc(self) -> dict:
        return {
            "tables": [asdict(t) for t in self.tables],
            "windows": [w.label() for w in self.windows],
            "models": list(self.models),
            "n_folds": self.n_folds,
            "seed": self.seed,
            "sequence_rate_hz": self.sequence_rate_hz,
            "model_configs": None
            if self.model_configs is None
            else {k: asdict(v) for k, v in self.model_configs.items()},
        }


@dataclass(frozen=True)
class CellResult:
    """One grid cell: a model at one window size within one table."""

    target: str
    modality_set: str
    model: str
    window_label: str
    mode: str
    n_train_blocks: int
    n_test_blocks: int
    fold_accuracies: Tuple[float, ...]
    fold_recalls: Tuple[float, ...]
    mean_cv_recall: float
    block_metrics: Metrics
    slice_metrics: Metrics
    reference_accuracy_pct: Optional[float]
    reference_avg_recall: Optional[float]
    block_predictions: Tuple[Tuple[str, str, int, int], ...]

    def to_doc(self) -> dict:
        return {
            "target": self.target,
            "modality_set": self.modality_set,
            "model": self.model,
            "window": self.window_label,
            "mode": self.mode,
            "n_train_blocks": self.n_train_blocks,
            "n_test_blocks": self.n_test_blocks,
            "fold_accuracies": list(self.fold_accuracies),
            "fold_recalls": list(self.fold_recalls),
            "mean_cv_recall": self.mean_cv_recall,
            "block_metrics": self.block_metrics.as_dict(),
            "slice_metrics": self.slice_metrics.as_dict(),
            "reference_accuracy_pct": self.reference_accuracy_pct,
            "reference_avg_recall": self.reference_avg_recall,
            "block_predictions": [list(row) for row in self.block_predictions],
        }


@dataclass
class ExperimentReport:
    seed: int
    n_folds: int
    cells: Tuple[CellResult, ...]
    best: Tuple[dict, ...]
    metadata: Dict[str, object]


# -------------------------------------------------------------- training ----


def _default_model_config(model: str, seed: int, pca_k: Optional[int]):
    if model == "logreg":
        return LogRegConfig(seed=seed, pca_k=pca_k)
    if model == "svm":
        return SVMConfig(seed=seed, pca_k=pca_k)
    if model == "rf":
        return RFConfig(seed=seed, pca_k=pca_k)
    return LSTMConfig(seed=seed)


def _train(model: str, examples: ExampleSet, config) -> TrainedModel:
    if model == "lstm":
        return train_lstm(
            examples.sequences(), examples.labels(), examples.names, config
        )
    trainer = {"logreg": train_logreg, "svm": train_svm, "rf": train_rf}[model]
    return trainer(examples.feature_matrix(), examples.labels(), examples.names, config)


def _run_cell(
    table: TableSpec,
    window: WindowPlan,
    model: str,
    examples: ExampleSet,
    plan: SplitPlan,
    folds: Sequence[Tuple[str, ...]],
    model_config,
) -> CellResult:
    train_subjects = sorted(plan.train)
    fold_accs: List[float] = []
    fold_recalls: List[float] = []
    for fold in folds:
        held = frozenset(fold)
        fit_set = examples.subset([s for s in train_subjects if s not in held])
        val_set = examples.subset(fold)
        fitted = _train(model, fit_set, model_config)
        vp = predict_blocks(fitted, val_set)
        vm = score(vp.predicted, vp.actual)
        fold_accs.append(vm.accuracy)
        fold_recalls.append(vm.recall)
    final_set = examples.subset(sorted(plan.train | plan.validation))
    final = _train(model, final_set, model_config)
    test_set = examples.subset(sorted(plan.test))
    slice_metrics = score(predict_slices(final, test_set), test_set.labels())
    bp = predict_blocks(final, test_set)
    block_metrics = score(bp.predicted, bp.actual)
    ref = REFERENCE_RESULTS.get((table.target, table.modality_set), {}).get(model)
    ref_acc = ref["accuracy_pct"].get(window.label()) if ref else None
    return CellResult(
        target=table.target,
        modality_set=table.modality_set,
        model=model,
        window_label=window.label(),
        mode=MODE_SEQUENCE if model == "lstm" else MODE_FEATURE,
        n_train_blocks=len(set(final_set.block_ids())),
        n_test_blocks=len(bp.block_ids),
        fold_accuracies=tuple(fold_accs),
        fold_recalls=tuple(fold_recalls),
        mean_cv_recall=float(np.mean(fold_recalls)),
        block_metrics=block_metrics,
        slice_metrics=slice_metrics,
        reference_accuracy_pct=ref_acc,
        reference_avg_recall=ref["avg_recall"] if ref else None,
        block_predictions=tuple(
            (bid, sid, int(pred), int(act))
            for bid, sid, pred, act in zip(
                bp.block_ids, bp.subject_ids, bp.predicted, bp.actual
            )
        ),
    )


def thread_count() -> int:
    """Worker cap from FATIGUELAB_THREADS (default 1)."""
    raw = os.environ.get("FATIGUELAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidSpecError(f"FATIGUELAB_THREADS must be an integer, got {raw!r}")
    return max(1, n)


def run_experiment(
    blocks: Sequence[RecordingBlock], config: Optional[ExperimentConfig] = None
) -> ExperimentReport:
    """Run the full grid: tables x windows x models.

    Per cell: k-fold cross-validation over training subjects, a final fit
    on train + validation, and block-level test metrics. Deterministic for
    a fixed config and dataset; cells may run on several threads without
    changing the result.

    Raises:
        DataError / SplitError: propagated from labeling, splitting, or
            training with the failing cell named in the message.
    """
    cfg = config or ExperimentConfig()
    jobs = []
    context_cache: Dict[Tuple[str, str], BlockContext] = {}
    for table in cfg.tables:
        policy = policy_for_target(table.target)
        labeled = label_blocks(blocks, policy)
        if not labeled:
            raise DataError(f"no labeled blocks for target {table.target}")
        subject_labels: Dict[str, List[int]] = {}
        for lb in labeled:
            subject_labels.setdefault(lb.block.subject_id, []).append(lb.label)
        plan = split_subjects(subject_labels, seed=cfg.seed)
        folds = cv_folds(sorted(plan.train), k=cfg.n_folds, seed=cfg.seed)
        contexts: Dict[str, BlockContext] = {}
        for lb in labeled:
            key = (table.modality_set, lb.block.block_id)
            if key not in context_cache:
                context_cache[key] = prepare_block(lb, table.modality_set)
            contexts[lb.block.block_id] = context_cache[key]
        for window in cfg.windows:
            per_mode: Dict[str, ExampleSet] = {}
            if any(m != "lstm" for m in cfg.models):
                per_mode[MODE_FEATURE] = make_examples(
                    labeled, window, MODE_FEATURE, table.modality_set, contexts=contexts
                )
            if "lstm" in cfg.models:
                per_mode[MODE_SEQUENCE] = make_examples(
                    labeled,
                    window,
                    MODE_SEQUENCE,
                    table.modality_set,
                    cfg.sequence_rate_hz,
                    contexts=contexts,
                )
            for model in cfg.models:
                mode = MODE_SEQUENCE if model == "lstm" else MODE_FEATURE
                if cfg.model_configs and model in cfg.model_configs:
                    model_config = cfg.model_configs[model]
                else:
                    model_config = _default_model_config(model, cfg.seed, table.pca_k)
                jobs.append(
                    (table, window, model, per_mode[mode], plan, folds, model_config)
                )

    def run_job(job):
        table, window, model, examples, plan, folds, model_config = job
        try:
            return _run_cell(table, window, model, examples, plan, folds, model_config)
        except FatigueLabError as exc:
            cell = f"{table.target}/{table.modality_set}/{model}/{window.label()}"
            raise type(exc)(f"cell {cell}: {exc}") from exc

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = tuple(pool.map(run_job, jobs))
    else:
        cells = tuple(run_job(job) for job in jobs)

    best = _best_windows(cells)
    cfg_doc = cfg.to_doc()
    metadata = {
        "seed": cfg.seed,
        "config": cfg_doc,
        "config_digest": _digest_of(cfg_doc),
        "vas_banding": VAS_BAND_NOTE,
        "supplementary_metrics": list(SUPPLEMENTARY_METRICS),
        "reference_note": (
            "reference_* fields are embedded target constants; deltas are "
            "informational, never pass/fail"
        ),
    }
    return ExperimentReport(
        seed=cfg.seed,
        n_folds=cfg.n_folds,
        cells=cells,
        best=tuple(best),
        metadata=metadata,
    )


def _best_windows(cells: Sequence[CellResult]) -> List[dict]:
    """Per (table, model): best window by block accuracy and best CV recall."""
    grouped: Dict[Tuple[str, str, str], List[CellResult]] = {}
    for cell in cells:
        grouped.setdefault((cell.target, cell.modality_set, cell.model), []).append(cell)
    out = []
    for (target, modality_set, model), group in grouped.items():
        by_acc = max(group, key=lambda c: c.block_metrics.accuracy)
        out.append(
            {
                "target": target,
                "modality_set": modality_set,
                "model": model,
                "best_window": by_acc.window_label,
                "best_accuracy": by_acc.block_metrics.accuracy,
                "best_avg_recall": max(c.mean_cv_recall for c in group),
            }
        )
    return out


# ------------------------------------------------------------- report IO ----


def _digest_of(doc) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def report_to_doc(report: ExperimentReport) -> dict:
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "seed": report.seed,
        "n_folds": report.n_folds,
        "cells": [cell.to_doc() for cell in report.cells],
        "best": list(report.best),
        "metadata": dict(report.metadata),
    }
    doc["digest"] = report_digest(report)
    return doc


def report_digest(report: ExperimentReport) -> str:
    """Content digest over everything except volatile metadata."""
    doc = {
        "format_version": REPORT_FORMAT_VERSION,
        "seed": report.seed,
        "n_folds": report.n_folds,
        "cells": [cell.to_doc() for cell in report.cells],
        "best": list(report.best),
        "metadata": {
            k: v for k, v in report.metadata.items() if k != "generated_at"
        },
    }
    return _digest_of(doc)


def report_from_doc(doc: Mapping) -> ExperimentReport:
    if doc.get("format_version") != REPORT_FORMAT_VERSION:
        raise DataError(
            f"unsupported report version {doc.get('format_version')!r}"
        )
    cells = tuple(
        CellResult(
            target=c["target"],
            modality_set=c["modality_set"],
            model=c["model"],
            window_label=c["window"],
            mode=c["mode"],
            n_train_blocks=int(c["n_train_blocks"]),
            n_test_blocks=int(c["n_test_blocks"]),
            fold_accuracies=tuple(float(v) for v in c["fold_accuracies"]),
            fold_recalls=tuple(float(v) for v in c["fold_recalls"]),
            mean_cv_recall=float(c["mean_cv_recall"]),
            block_metrics=_metrics_from_dict(c["block_metrics"]),
            slice_metrics=_metrics_from_dict(c["slice_metrics"]),
            reference_accuracy_pct=c["reference_accuracy_pct"],
            reference_avg_recall=c["reference_avg_recall"],
            block_predictions=tuple(
                (str(b), str(s), int(p), int(a))
                for b, s, p, a in c["block_predictions"]
            ),
        )
        for c in doc["cells"]
    )
    return ExperimentReport(
        seed=int(doc["seed"]),
        n_folds=int(doc["n_folds"]),
        cells=cells,
        best=tuple(doc["best"]),
        metadata=dict(doc["metadata"]),
    )


def save_report(path, report: ExperimentReport) -> None:
    Path(path).write_text(json.dumps(report_to_doc(report), indent=1), encoding="utf-8")


def load_report(path) -> ExperimentReport:
    path = Path(path)
    if not path.exists():
        raise DataError(f"report not found: {path}")
    return report_from_doc(json.loads(path.read_text(encoding="utf-8")))


# --------------------------------------------------------------- rendering ----


def _fmt_pct(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.1f}"


def render_report(report: ExperimentReport) -> str:
    """Aligned text tables, one per (target, modality set).

    Cell values are block accuracy percent per window column; avg_recall
    is the best mean CV fatigue recall across windows; ref_* columns show
    the embedded reference constants where defined.
    """
    tables: Dict[Tuple[str, str], List[CellResult]] = {}
    for cell in report.cells:
        tables.setdefault((cell.target, cell.modality_set), []).append(cell)
    best_by_key = {
        (b["target"], b["modality_set"], b["model"]): b for b in report.best
    }
    lines: List[str] = []
    for (target, modality_set), cells in tables.items():
        windows = list(dict.fromkeys(c.window_label for c in cells))
        models = list(dict.fromkeys(c.model for c in cells))
        lines.append(f"target {target}, modality {modality_set} (block accuracy %)")
        header = ["model"] + windows + ["avg_recall", "ref_best_acc", "ref_recall"]
        rows = [header]
        for model in models:
            per_window = {c.window_label: c for c in cells if c.model == model}
            row = [model]
            for w in windows:
                cell = per_window.get(w)
                row.append(
                    _fmt_pct(100.0 * cell.block_metrics.accuracy) if cell else "-"
                )
            entry = best_by_key.get((target, modality_set, model))
            row.append(f"{entry['best_avg_recall']:.2f}" if entry else "-")
            any_cell = next(iter(per_window.values()), None)
            if any_cell and any_cell.reference_avg_recall is not None:
                ref = REFERENCE_RESULTS[(target, modality_set)][model]
                row.append(_fmt_pct(max(ref["accuracy_pct"].values())))
                row.append(f"{ref['avg_recall']:.2f}")
            else:
                row.append("-")
                row.append("-")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        for r in rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
        lines.append("")
    lines.append(f"seed {report.seed}, {report.n_folds}-fold CV")
    lines.append(f"digest {report_digest(report)}")
    return "\n".join(lines) + "\n"


def write_predictions_csv(path, report: ExperimentReport) -> None:
    """Per-block test predictions for external plotting."""
    rows = ["target,modality_set,model,window,block_id,subject_id,predicted,actual"]
    for cell in report.cells:
        for block_id, subject_id, pred, actual in cell.block_predictions:
            rows.append(
                f"{cell.target},{cell.modality_set},{cell.model},"
                f"{cell.window_label},{block_id},{subject_id},{pred},{actual}"
            )
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
