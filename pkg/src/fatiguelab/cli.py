"""Batch command-line entry point.

Subcommands cover the whole pipeline: ``synth`` writes a synthetic study,
``ingest-check`` validates a manifest and summarizes the survey scores,
``features`` caches windowed examples, ``train`` fits one model and saves
the artifact, ``evaluate`` runs a grid cell and writes the report, and
``report`` renders a saved report as text.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 internal invariant violation. Every failure prints a single JSON line
on stderr. Output files are written atomically (temp file + rename), and
identical inputs reproduce byte-identical outputs except for the one
``generated_at`` metadata field in evaluation reports.
"""
import argparse
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from . import dataset as ds
from . import eval as ev
from . import synth
from .errors import DataError, FatigueLabError, InvalidSpecError
from .models import (
    save_model,
    train_logreg,
    train_lstm,
    train_rf,
    train_svm,
)
from .signals import WindowPlan

TARGETS = ("CF", "PF")
MODELS = ("logreg", "svm", "rf", "lstm")

#: Fallbacks used when neither a CLI flag nor the config file sets a value.
DEFAULTS: Dict[str, object] = {
    "target": "CF",
    "modality": ds.MODALITY_ALL,
    "window": "full",
    "model": "rf",
    "mode": ds.MODE_FEATURE,
    "seed": 0,
    "subjects": 32,
    "effect_scale": 1.0,
    "folds": 5,
    "pca_k": None,
}


class UsageError(FatigueLabError):
    """Bad flags, bad config file, or mutually inconsistent options."""


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation: flag > config file > default."""

    command: str
    manifest: Optional[Path] = None
    target: str = "CF"
    modality: str = ds.MODALITY_ALL
    window_s: Optional[float] = None
    model: str = "rf"
    mode: str = ds.MODE_FEATURE
    seed: int = 0
    out: Optional[Path] = None
    config_file: Optional[Path] = None
    subjects: int = 32
    effect_scale: float = 1.0
    folds: int = 5
    pca_k: Optional[int] = None
    report_path: Optional[Path] = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise UsageError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.modality not in ds.MODALITY_SETS:
            raise UsageError(
                f"modality must be one of {ds.MODALITY_SETS}, got {self.modality!r}"
            )
        if self.model not in MODELS:
            raise UsageError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.mode not in (ds.MODE_FEATURE, ds.MODE_SEQUENCE):
            raise UsageError(f"mode must be feature or sequence, got {self.mode!r}")
        if self.model == "lstm" and self.pca_k is not None:
            raise UsageError("lstm works on raw sequences; --pca-k is not allowed")
        if self.window_s is not None and self.window_s <= 0:
            raise UsageError(f"window seconds must be positive, got {self.window_s}")
        if self.folds < 2:
            raise UsageError(f"folds must be at least 2, got {self.folds}")
        if self.seed < 0:
            raise UsageError(f"seed must be non-negative, got {self.seed}")


# ---------------------------------------------------------------- parsing ----


class _Parser(argparse.ArgumentParser):
    """Argparse variant that raises instead of exiting on bad flags."""

    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fatiguelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help_text: str, *flags: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if "manifest" in flags:
            p.add_argument("--manifest", help="study manifest JSON")
        if "target" in flags:
            p.add_argument("--target", help="label target: CF or PF")
        if "modality" in flags:
            p.add_argument("--modality", help="channel set: eeg, physio, or all")
        if "window" in flags:
            p.add_argument("--window", help="window length in seconds, or 'full'")
        if "model" in flags:
            p.add_argument("--model", help="logreg, svm, rf, or lstm")
        if "mode" in flags:
            p.add_argument("--mode", help="example mode: feature or sequence")
        if "seed" in flags:
            p.add_argument("--seed", type=int, help="RNG seed")
        if "out" in flags:
            p.add_argument("--out", help="output directory")
        if "subjects" in flags:
            p.add_argument("--subjects", type=int, help="number of subjects")
        if "effect-scale" in flags:
            p.add_argument(
                "--effect-scale",
                dest="effect_scale",
                type=float,
                help="fatigue effect multiplier; 0 gives a null study",
            )
        if "folds" in flags:
            p.add_argument("--folds", type=int, help="cross-validation folds")
        if "pca-k" in flags:
            p.add_argument(
                "--pca-k", dest="pca_k", type=int, help="PCA width for feature models"
            )
        if "report" in flags:
            p.add_argument("--report", dest="report_path", help="saved report JSON")
        p.add_argument("--config", dest="config_file", help="JSON config file")
        return p

    add("synth", "generate a synthetic study", "out", "subjects", "seed", "effect-scale")
    add("ingest-check", "validate a manifest and summarize surveys", "manifest")
    add(
        "features",
        "write the windowed-examples cache",
        "manifest", "target", "modality", "window", "mode", "out",
    )
    add(
        "train",
        "fit one model and save the artifact",
        "manifest", "target", "modality", "window", "model", "seed", "pca-k", "out",
    )
    add(
        "evaluate",
        "run one grid cell and write the report",
        "manifest", "target", "modality", "window", "model", "seed", "folds",
        "pca-k", "out",
    )
    add("report", "render a saved report as text", "report", "out")
    return parser


def _load_config_file(path: Path) -> Dict[str, object]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    known = set(DEFAULTS) | {"manifest", "out", "report_path"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise UsageError(f"config file {path}: unknown keys {unknown}")
    return doc


def _parse_window(value) -> Optional[float]:
    if value is None or value == "full":
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"window must be a number of seconds or 'full', got {value!r}")


def resolve(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Parse flags and merge them with the config file and defaults."""
    args = _build_parser().parse_args(argv)
    file_doc: Dict[str, object] = {}
    if args.config_file:
        file_doc = _load_config_file(Path(args.config_file))

    def pick(name: str):
        value = getattr(args, name, None)
        if value is not None:
            return value
        if name in file_doc:
            return file_doc[name]
        return DEFAULTS.get(name)

    def pick_path(name: str) -> Optional[Path]:
        value = pick(name)
        return None if value is None else Path(value)

    return RunConfig(
        command=args.command,
        manifest=pick_path("manifest"),
        target=str(pick("target")),
        modality=str(pick("modality")),
        window_s=_parse_window(pick("window")),
        model=str(pick("model")),
        mode=str(pick("mode")),
        seed=int(pick("seed")),
        out=pick_path("out"),
        config_file=None if args.config_file is None else Path(args.config_file),
        subjects=int(pick("subjects")),
        effect_scale=float(pick("effect_scale")),
        folds=int(pick("folds")),
        pca_k=None if pick("pca_k") is None else int(pick("pca_k")),
        report_path=pick_path("report_path"),
    )


# ------------------------------------------------------------------ helpers ----


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required {flag}")
    return value

def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _atomic_write_via(path: Path, writer: Callable[[Path], None]) -> None:
    """Run a file-writing function against a temp path, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _window_plan(run: RunConfig) -> WindowPlan:
    if run.window_s is None:
        return WindowPlan.full_block()
    return WindowPlan(run.window_s)


def _labeled(run: RunConfig):
    blocks = ds.ingest(_require(run.manifest, "--manifest"))
    labeled = ds.label_blocks(blocks, ds.policy_for_target(run.target))
    if not labeled:
        raise DataError(f"no labeled blocks for target {run.target}")
    return blocks, labeled


def _examples(run: RunConfig, labeled, mode: str) -> ds.ExampleSet:
    contexts = {
        lb.block.block_id: ds.prepare_block(lb, run.modality) for lb in labeled
    }
    return ds.make_examples(
        labeled, _window_plan(run), mode, run.modality, contexts=contexts
    )


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


# ----------------------------------------------------------------- commands ----


def _cmd_synth(run: RunConfig) -> None:
    out = _require(run.out, "--out")
    if run.subjects < 3:
        raise UsageError(f"subjects must be at least 3, got {run.subjects}")
    effect = synth.EffectConfig(scale=run.effect_scale)
    manifest, truth = synth.gen_study(
        out, n_subjects=run.subjects, effect=effect, seed=run.seed
    )
    _emit(
        {
            "manifest": str(manifest),
            "subjects": run.subjects,
            "blocks": len(truth["blocks"]),
        }
    )


def _cmd_ingest_check(run: RunConfig) -> None:
    blocks = ds.ingest(_require(run.manifest, "--manifest"))
    summary = ev.summarize_vas(blocks)
    lines = [
        f"blocks: {len(blocks)}",
        f"subjects: {len(set(b.subject_id for b in blocks))}",
        f"banding: {ev.VAS_BAND_NOTE}",
    ]
    for reading in sorted(summary):
        for question in ds.VAS_KEYS:
            counts = summary[reading][question]
            cells = " ".join(f"{band}={counts[band]}" for band in ev.VAS_BAND_NAMES)
            lines.append(f"reading {reading} {question}: {cells}")
    print("\n".join(lines))


def _cmd_features(run: RunConfig) -> None:
    out = _require(run.out, "--out")
    _, labeled = _labeled(run)
    es = _examples(run, labeled, run.mode)
    doc = {
        "format_version": 1,
        "kind": "examples-cache",
        "target": run.target,
        "modality_set": run.modality,
        "window": _window_plan(run).label(),
        "mode": es.mode,
        "names": list(es.names),
        "examples": [
            {
                "subject_id": e.subject_id,
                "block_id": e.block_id,
                "slice_index": e.slice_index,
                "label": e.label,
                "values": e.values.tolist(),
            }
            for e in es.examples
        ],
    }
    name = f"examples_{run.target}_{run.modality}_{doc['window']}_{es.mode}.json"
    path = Path(out) / name
    _atomic_write_text(path, json.dumps(doc, indent=1))
    _emit({"cache": str(path), "examples": len(es.examples)})


def _cmd_train(run: RunConfig) -> None:
    out = _require(run.out, "--out")
    _, labeled = _labeled(run)
    subject_labels: Dict[str, list] = {}
    for lb in labeled:
        subject_labels.setdefault(lb.block.subject_id, []).append(lb.label)
    plan = ds.split_subjects(subject_labels, seed=run.seed)
    mode = ds.MODE_SEQUENCE if run.model == "lstm" else ds.MODE_FEATURE
    es = _examples(run, labeled, mode)
    fit_set = es.subset(sorted(plan.train | plan.validation))
    config = ev._default_model_config(run.model, run.seed, run.pca_k)
    if run.model == "lstm":
        model = train_lstm(fit_set.sequences(), fit_set.labels(), fit_set.names, config)
    else:
        trainer = {"logreg": train_logreg, "svm": train_svm, "rf": train_rf}[run.model]
        model = trainer(fit_set.feature_matrix(), fit_set.labels(), fit_set.names, config)
    name = f"model_{run.model}_{run.target}_{run.modality}_{_window_plan(run).label()}.json"
    path = Path(out) / name
    _atomic_write_via(path, lambda tmp: save_model(tmp, model))
    _emit(
        {
            "artifact": str(path),
            "train_subjects": sorted(plan.train | plan.validation),
            "examples": len(fit_set.examples),
        }
    )


def _cmd_evaluate(run: RunConfig) -> None:
    out = _require(run.out, "--out")
    blocks = ds.ingest(_require(run.manifest, "--manifest"))
    cfg = ev.ExperimentConfig(
        tables=(ev.TableSpec(run.target, run.modality, run.pca_k),),
        windows=(_window_plan(run),),
        models=(run.model,),
        n_folds=run.folds,
        seed=run.seed,
    )
    report = ev.run_experiment(blocks, cfg)
    report.metadata["generated_at"] = datetime.now(timezone.utc).isoformat()
    report_path = Path(out) / "report.json"
    _atomic_write_via(report_path, lambda tmp: ev.save_report(tmp, report))
    csv_path = Path(out) / "predictions.csv"
    _atomic_write_via(csv_path, lambda tmp: ev.write_predictions_csv(tmp, report))
    _emit(
        {
            "report": str(report_path),
            "predictions": str(csv_path),
            "cells": len(report.cells),
            "digest": ev.report_digest(report),
        }
    )


def _cmd_report(run: RunConfig) -> None:
    report = ev.load_report(_require(run.report_path, "--report"))
    text = ev.render_report(report)
    if run.out is None:
        print(text)
    else:
        path = Path(run.out) / "report.txt"
        _atomic_write_text(path, text)
        _emit({"rendered": str(path)})


_COMMANDS: Dict[str, Callable[[RunConfig], None]] = {
    "synth": _cmd_synth,
    "ingest-check": _cmd_ingest_check,
    "features": _cmd_features,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def _fail(kind: str, exc: BaseException) -> None:
    line = json.dumps(
        {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    )
    print(line, file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        run = resolve(argv)
        _COMMANDS[run.command](run)
    except UsageError as exc:
        _fail("usage", exc)
        return 1
    except (DataError, InvalidSpecError) as exc:
        _fail("data", exc)
        return 2
    except FatigueLabError as exc:
        _fail("internal", exc)
        return 3
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit code 3
        _fail("internal", exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
