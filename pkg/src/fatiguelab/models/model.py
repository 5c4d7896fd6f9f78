"""Trained-model container, prediction, majority voting, and artifact IO.

A TrainedModel bundles the variant weights with everything needed to
reproduce its preprocessing: imputation means, standardization, optional
PCA, and the feature-name or channel-name contract. Feature-mode inputs
are reordered by name and rejected on any set mismatch, so column order
never silently matters.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..dataset import ExampleSet, MODE_FEATURE, MODE_SEQUENCE
from ..errors import ContractError, DataError
from .preprocess import (
    PCAModel,
    StandardizationParams,
    fit_imputer,
    fit_pca,
    fit_standardizer,
    impute,
    project,
    standardize,
)

ARTIFACT_VERSION = 1

FEATURE_VARIANTS = ("logreg", "svm", "rf")
SEQUENCE_VARIANTS = ("lstm",)


@dataclass
class TrainedModel:
    variant: str
    params: Dict[str, object]
    standardization: StandardizationParams
    config: Dict[str, object]
    imputation: Optional[np.ndarray] = None
    pca: Optional[PCAModel] = None
    feature_names: Optional[Tuple[str, ...]] = None
    channel_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if self.variant not in FEATURE_VARIANTS + SEQUENCE_VARIANTS:
            raise ContractError(f"unknown model variant {self.variant!r}")
        if self.variant in FEATURE_VARIANTS and self.feature_names is None:
            raise ContractError(f"{self.variant} model needs feature_names")
        if self.variant in SEQUENCE_VARIANTS and self.channel_names is None:
            raise ContractError(f"{self.variant} model needs channel_names")

    @property
    def channel_count(self) -> Optional[int]:
        return None if self.channel_names is None else len(self.channel_names)


def check_binary_labels(y: np.ndarray) -> np.ndarray:
    """Validate a two-class 0/1 label vector.

    Raises:
        DataError: labels outside {0, 1} or only one class present.
    """
    y = np.asarray(y)
    if y.ndim != 1 or not np.all(np.isin(y, (0, 1))):
        raise DataError("labels must be a 1-D vector of 0/1")
    if np.unique(y).size < 2:
        raise DataError("training labels contain a single class")
    return y.astype(np.int64)


def fit_feature_pipeline(X, y, feature_names, pca_k: Optional[int] = None):
    """Shared preprocessing for the feature-mode trainers.

    Fits imputation, standardization, and (optionally) PCA on the training
    matrix, returning the transformed matrix plus the fitted pieces.
    """
    X = np.asarray(X, dtype=np.float64)
    y = check_binary_labels(y)
    names = tuple(feature_names)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DataError(f"X must be (n, d) with n == len(y), got {X.shape}")
    if len(names) != X.shape[1]:
        raise ContractError(
            f"{len(names)} feature names for a {X.shape[1]}-column matrix"
        )
    imputation = fit_imputer(X)
    Xi = impute(imputation, X)
    std = fit_standardizer(Xi)
    Xs = standardize(std, Xi)
    pca = None
    if pca_k is not None:
        pca = fit_pca(Xs, pca_k)
        Xs = project(pca, Xs)
    return Xs, y, names, imputation, std, pca


def arrange_columns(model: TrainedModel, X: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Reorder columns to the model's training order, by name."""
    names = tuple(names)
    expected = model.feature_names
    if names == expected:
        return X
    if set(names) != set(expected):
        missing = sorted(set(expected) - set(names))
        extra = sorted(set(names) - set(expected))
        raise ContractError(
            f"feature name mismatch: missing {missing[:5]}, unexpected {extra[:5]}"
        )
    order = [names.index(n) for n in expected]
    return X[:, order]


def prepare_feature_matrix(model: TrainedModel, X: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Apply the model's stored preprocessing chain to a raw feature matrix."""
    X = arrange_columns(model, np.asarray(X, dtype=np.float64), names)
    if model.imputation is not None:
        X = impute(model.imputation, X)
    X = standardize(model.standardization, X)
    if model.pca is not None:
        X = project(model.pca, X)
    return X


def prepare_sequence(model: TrainedModel, seq: np.ndarray) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[1] != model.channel_count:
        raise ContractError(
            f"sequence must be t x {model.channel_count}, got shape {seq.shape}"
        )
    if seq.shape[0] == 0:
        raise ContractError("zero-length sequence")
    return (seq - model.standardization.mean) / model.standardization.std


def _feature_scores(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    if model.variant == "logreg":
        z = X @ np.asarray(model.params["w"]) + float(model.params["b"])
        return 1.0 / (1.0 + np.exp(-z))
    if model.variant == "svm":
        margin = X @ np.asarray(model.params["w"]) + float(model.params["b"])
        return (margin >= 0.0).astype(np.float64)
    if model.variant == "rf":
        from .forest import forest_votes

        return forest_votes(model.params["trees"], X)
    raise ContractError(f"not a feature-mode variant: {model.variant}")


def predict_slices(model: TrainedModel, example_set: ExampleSet) -> np.ndarray:
    """Per-example 0/1 labels.

    Raises:
        ContractError: example mode, feature names, or channel count do not
            match what the model was trained on.
    """
    if model.variant in FEATURE_VARIANTS:
        if example_set.mode != MODE_FEATURE:
            raise ContractError(
                f"{model.variant} expects feature examples, got {example_set.mode}"
            )
        X = prepare_feature_matrix(model, example_set.feature_matrix(), example_set.names)
        return (_feature_scores(model, X) >= 0.5).astype(np.int64)
    if example_set.mode != MODE_SEQUENCE:
        raise ContractError(f"lstm expects sequence examples, got {example_set.mode}")
    if tuple(example_set.names) != model.channel_names:
        raise ContractError(
            f"sequence channels {tuple(example_set.names)[:4]}... do not match "
            f"the model's {model.channel_names[:4]}..."
        )
    from .lstm import lstm_probabilities

    probs = lstm_probabilities(model, example_set.sequences())
    return (probs >= 0.5).astype(np.int64)


def classify_block(slice_labels: Sequence[int]) -> int:
    """Modal slice label; ties resolve to the positive class.

    Raises:
        DataError: empty slice set.
    """
    labels = list(slice_labels)
    if not labels:
        raise DataError("cannot classify a block with no slices")
    positive = sum(1 for v in labels if v == 1)
    return 1 if positive >= len(labels) - positive else 0


@dataclass(frozen=True)
class BlockPredictions:
    block_ids: Tuple[str, ...]
    subject_ids: Tuple[str, ...]
    predicted: np.ndarray
    actual: np.ndarray


def predict_blocks(model: TrainedModel, example_set: ExampleSet) -> BlockPredictions:
    """Slice predictions folded into per-block majority votes."""
    slice_preds = predict_slices(model, example_set)
    order: List[str] = []
    per_block: Dict[str, List[int]] = {}
    subject: Dict[str, str] = {}
    actual: Dict[str, int] = {}
    for ex, pred in zip(example_set.examples, slice_preds):
        if ex.block_id not in per_block:
            order.append(ex.block_id)
            per_block[ex.block_id] = []
            subject[ex.block_id] = ex.subject_id
            actual[ex.block_id] = ex.label
        per_block[ex.block_id].append(int(pred))
    return BlockPredictions(
        block_ids=tuple(order),
        subject_ids=tuple(subject[b] for b in order),
        predicted=np.array([classify_block(per_block[b]) for b in order], dtype=np.int64),
        actual=np.array([actual[b] for b in order], dtype=np.int64),
    )


# ------------------------------------------------------------- artifact IO ----


def _encode(obj):
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def save_model(path, model: TrainedModel) -> None:
    """Write a self-describing JSON artifact."""
    doc = {
        "format_version": ARTIFACT_VERSION,
        "variant": model.variant,
        "config": _encode(model.config),
        "feature_names": list(model.feature_names) if model.feature_names else None,
        "channel_names": list(model.channel_names) if model.channel_names else None,
        "imputation": _encode(model.imputation) if model.imputation is not None else None,
        "standardization": {
            "mean": model.standardization.mean.tolist(),
            "std": model.standardization.std.tolist(),
            "zero_variance": model.standardization.zero_variance.tolist(),
        },
        "pca": None
        if model.pca is None
        else {
            "components": model.pca.components.tolist(),
            "explained_variance": model.pca.explained_variance.tolist(),
            "mean": model.pca.mean.tolist(),
            "k": model.pca.k,
            "clamped": model.pca.clamped,
        },
        "params": _encode(model.params),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> TrainedModel:
    """Inverse of save_model.

    Raises:
        DataError: missing file or unsupported format version.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"model artifact not found: {path}")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format_version") != ARTIFACT_VERSION:
        raise DataError(f"unsupported artifact version {doc.get('format_version')!r}")
    std = StandardizationParams(
        mean=np.array(doc["standardization"]["mean"], dtype=np.float64),
        std=np.array(doc["standardization"]["std"], dtype=np.float64),
        zero_variance=np.array(doc["standardization"]["zero_variance"], dtype=bool),
    )
    pca = None
    if doc["pca"] is not None:
        pca = PCAModel(
            components=np.array(doc["pca"]["components"], dtype=np.float64),
            explained_variance=np.array(doc["pca"]["explained_variance"], dtype=np.float64),
            mean=np.array(doc["pca"]["mean"], dtype=np.float64),
            k=int(doc["pca"]["k"]),
            clamped=bool(doc["pca"]["clamped"]),
        )
    return TrainedModel(
        variant=doc["variant"],
        params=_decode(doc["params"]),
        standardization=std,
        config=_decode(doc["config"]),
        imputation=None if doc["imputation"] is None else np.asarray(_decode(doc["imputation"])),
        pca=pca,
        feature_names=tuple(doc["feature_names"]) if doc["feature_names"] else None,
        channel_names=tuple(doc["channel_names"]) if doc["channel_names"] else None,
    )
