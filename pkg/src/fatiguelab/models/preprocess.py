"""Imputation, standardization, and PCA, all fit on training data only."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError, InvalidSpecError


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column mean/std from the training matrix.

    Constant columns keep std = 1 so transformed values are exactly zero;
    the zero_variance flags record which columns those were.
    """

    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray

    @property
    def n_features(self) -> int:
        return int(self.mean.size)


@dataclass(frozen=True)
class PCAModel:
    """Top-k principal directions of the centered training matrix."""

    components: np.ndarray
    explained_variance: np.ndarray
    mean: np.ndarray
    k: int
    clamped: bool

    def __post_init__(self):
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(self.k), atol=1e-8):
            raise DataError("PCA components are not orthonormal")
        if np.any(np.diff(self.explained_variance) > 1e-12):
            raise DataError("explained variances must be non-increasing")


def _check_matrix(X: np.ndarray, min_rows: int, what: str) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < min_rows:
        raise DataError(f"{what} needs a 2-D matrix with >= {min_rows} rows")
    return X


def fit_imputer(X: np.ndarray) -> np.ndarray:
    """Column means ignoring NaN; all-NaN columns impute to 0."""
    X = _check_matrix(X, 1, "imputer fitting")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        means = np.nanmean(X, axis=0)
    return np.where(np.isfinite(means), means, 0.0)


def impute(values: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Replace NaN entries column-wise with the stored training means."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != values.size:
        raise DataError(
            f"imputer has {values.size} columns, matrix has {X.shape[1]}"
        )
    out = X.copy()
    nan_r, nan_c = np.nonzero(np.isnan(out))
    out[nan_r, nan_c] = values[nan_c]
    return out


def fit_standardizer(X: np.ndarray) -> StandardizationParams:
    """Population mean/std per column; requires a finite matrix of >= 2 rows."""
    X = _check_matrix(X, 2, "standardizer fitting")
    if not np.all(np.isfinite(X)):
        raise DataError("standardizer input must be finite; impute first")
    mean = np.mean(X, axis=0)
    std = np.std(X, axis=0)
    zero_variance = std <= 0.0
    std = np.where(zero_variance, 1.0, std)
    return StandardizationParams(mean=mean, std=std, zero_variance=zero_variance)


def standardize(params: StandardizationParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise DataError(
            f"standardizer has {params.n_features} columns, matrix has shape {X.shape}"
        )
    return (X - params.mean) / params.std


def fit_pca(X: np.ndarray, k: int) -> PCAModel:
    """PCA via singular decomposition of the centered matrix.

    A requested k beyond min(rows - 1, cols) is clamped, with the clamped
    flag set. Component signs are fixed so each row's largest-magnitude
    entry is positive, making the fit deterministic.
    """
    X = _check_matrix(X, 2, "PCA fitting")
    if not np.all(np.isfinite(X)):
        raise DataError("PCA input must be finite; impute first")
    if k < 1:
        raise InvalidSpecError(f"PCA k must be >= 1, got {k}")
    n, d = X.shape
    max_k = min(n - 1, d)
    clamped = k > max_k
    k = min(k, max_k)
    mean = np.mean(X, axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    components = vt[:k].copy()
    flip = np.sign(components[np.arange(k), np.argmax(np.abs(components), axis=1)])
    components *= flip[:, None]
    return PCAModel(
        components=components,
        explained_variance=(s[:k] ** 2) / (n - 1),
        mean=mean,
        k=k,
        clamped=clamped,
    )


def project(model: PCAModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.size:
        raise DataError(
            f"PCA expects {model.mean.size} columns, matrix has shape {X.shape}"
        )
    return (X - model.mean) @ model.components.T


def reconstruct(model: PCAModel, Z: np.ndarray) -> np.ndarray:
    """Map projected rows back into the original feature space."""
    Z = np.asarray(Z, dtype=np.float64)
    return Z @ model.components + model.mean
