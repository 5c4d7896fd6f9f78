"""Imputation, standardization, and PCA behavior."""
import numpy as np
import pytest

from fatiguelab.errors import DataError, InvalidSpecError
from fatiguelab.models import (
    fit_imputer,
    fit_pca,
    fit_standardizer,
    impute,
    project,
    reconstruct,
    standardize,
)


# ------------------------------------------------------------ imputation ----


def test_impute_fills_nan_with_column_means():
    X = np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 8.0]])
    means = fit_imputer(X)
    assert means == pytest.approx([2.0, 6.0])
    out = impute(means, X)
    assert np.all(np.isfinite(out))
    assert out[0, 1] == pytest.approx(6.0)
    assert out[2, 0] == pytest.approx(2.0)


def test_impute_all_nan_column_goes_to_zero():
    X = np.array([[np.nan, 1.0], [np.nan, 2.0]])
    means = fit_imputer(X)
    assert means[0] == 0.0
    out = impute(means, X)
    assert np.all(out[:, 0] == 0.0)


def test_impute_leaves_finite_values_untouched():
    X = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = impute(fit_imputer(X), X)
    assert np.array_equal(out, X)


def test_impute_column_count_mismatch():
    with pytest.raises(DataError):
        impute(np.zeros(3), np.zeros((2, 2)))


# -------------------------------------------------------- standardization ----


def test_standardize_hand_computed_column():
    # population std of [1,2,3] is sqrt(2/3), so z = +-sqrt(1.5)
    X = np.array([[1.0], [2.0], [3.0]])
    params = fit_standardizer(X)
    out = standardize(params, X)
    root = np.sqrt(1.5)
    assert out[:, 0] == pytest.approx([-root, 0.0, root], abs=1e-4)
    assert out[:, 0] == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-4)


def test_standardize_constant_column_flagged_and_zeroed():
    X = np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    params = fit_standardizer(X)
    assert params.zero_variance[0]
    assert not params.zero_variance[1]
    assert params.std[0] == 1.0
    out = standardize(params, X)
    assert np.all(out[:, 0] == 0.0)


def test_standardized_train_columns_have_zero_mean_unit_std():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 4)) * [1.0, 10.0, 0.1, 3.0] + [5.0, -2.0, 0.0, 100.0]
    out = standardize(fit_standardizer(X), X)
    assert np.abs(out.mean(axis=0)).max() < 1e-9
    assert np.abs(out.std(axis=0) - 1.0).max() < 1e-9


def test_standardize_idempotent_on_transformed_data():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 3)) * 7.0 + 2.0
    once = standardize(fit_standardizer(X), X)
    again = fit_standardizer(once)
    assert np.abs(again.mean).max() < 1e-9
    assert np.abs(again.std - 1.0).max() < 1e-9


def test_standardizer_rejects_empty_and_single_row():
    with pytest.raises(DataError):
        fit_standardizer(np.empty((0, 2)))
    with pytest.raises(DataError):
        fit_standardizer(np.ones((1, 2)))


def test_standardizer_rejects_nan():
    with pytest.raises(DataError):
        fit_standardizer(np.array([[1.0, np.nan], [2.0, 3.0]]))


# -------------------------------------------------------------------- PCA ----


def rank2_data(n=200, d=10, seed=4):
    rng = np.random.default_rng(seed)
    basis = rng.normal(size=(2, d))
    coords = rng.normal(size=(n, 2)) * [3.0, 1.0]
    return coords @ basis + rng.normal(size=d)


def test_pca_components_orthonormal():
    model = fit_pca(rank2_data(), 2)
    gram = model.components @ model.components.T
    assert np.abs(gram - np.eye(2)).max() <= 1e-8


def test_pca_rank2_reconstruction():
    X = rank2_data()
    model = fit_pca(X, 2)
    back = reconstruct(model, project(model, X))
    rms = np.sqrt(np.mean((back - X) ** 2))
    assert rms <= 1e-6


def test_pca_explained_variance_non_increasing():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 8)) * np.linspace(5.0, 0.5, 8)
    model = fit_pca(X, 6)
    assert np.all(np.diff(model.explained_variance) <= 1e-12)


def test_pca_isotropic_variances_near_equal():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(10000, 5))
    model = fit_pca(X, 5)
    ev = model.explained_variance
    assert ev.max() / ev.min() <= 1.5


def test_pca_k_clamped_with_flag():
    X = np.random.default_rng(7).normal(size=(5, 10))
    model = fit_pca(X, 50)
    assert model.clamped
    assert model.k == 4  # min(rows - 1, cols)
    ok = fit_pca(X, 3)
    assert not ok.clamped
    assert ok.k == 3


def test_pca_width_189_when_dimension_allows():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(400, 210))
    model = fit_pca(X, 189)
    assert not model.clamped
    out = project(model, X)
    assert out.shape == (400, 189)


def test_pca_sign_deterministic_across_fits():
    X = rank2_data(seed=9)
    a = fit_pca(X, 2)
    b = fit_pca(X, 2)
    assert np.array_equal(a.components, b.components)
    # each row's largest-magnitude entry is positive
    idx = np.argmax(np.abs(a.components), axis=1)
    assert np.all(a.components[np.arange(2), idx] > 0)


def test_pca_projection_never_gains_norm():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(60, 12))
    model = fit_pca(X, 5)
    centered = X - model.mean
    proj = project(model, X)
    assert np.all(
        np.linalg.norm(proj, axis=1) <= np.linalg.norm(centered, axis=1) + 1e-9
    )


def test_pca_invalid_k():
    with pytest.raises(InvalidSpecError):
        fit_pca(np.random.default_rng(11).normal(size=(10, 3)), 0)


def test_pca_rejects_nan():
    X = np.ones((4, 3))
    X[0, 0] = np.nan
    with pytest.raises(DataError):
        fit_pca(X, 2)
