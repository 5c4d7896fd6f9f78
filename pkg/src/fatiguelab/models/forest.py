"""Random forest built from axis-aligned Gini trees with a fixed threshold grid."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .model import TrainedModel, fit_feature_pipeline


@dataclass(frozen=True)
class RFConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    n_thresholds: int = 16
    bootstrap: bool = True
    pca_k: Optional[int] = None
    seed: int = 0


def _leaf(n_pos: int, n: int) -> dict:
    # ties go to the positive class
    return {"leaf": 1 if 2 * n_pos >= n else 0}


def _build_tree(X, y, depth, cfg: RFConfig, rng, mtry: int) -> dict:
    n = y.size
    n_pos = int(y.sum())
    if depth >= cfg.max_depth or n < 2 * cfg.min_leaf or n_pos == 0 or n_pos == n:
        return _leaf(n_pos, n)
    d = X.shape[1]
    feats = rng.choice(d, size=mtry, replace=False)
    best_score = np.inf
    best_feat = -1
    best_th = 0.0
    for f in feats:
        col = X[:, f]
        lo = col.min()
        hi = col.max()
        if hi <= lo:
            continue
        grid = np.arange(1, cfg.n_thresholds + 1) / (cfg.n_thresholds + 1)
        ths = lo + (hi - lo) * grid
        left = col[:, None] <= ths[None, :]
        n_left = left.sum(axis=0)
        valid = (n_left >= cfg.min_leaf) & (n - n_left >= cfg.min_leaf)
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        n_l = n_left[idx]
        n_l_pos = left[:, idx].T @ y
        n_r = n - n_l
        n_r_pos = n_pos - n_l_pos
        p_l = n_l_pos / n_l
        p_r = n_r_pos / n_r
        weighted = (n_l * 2.0 * p_l * (1.0 - p_l) + n_r * 2.0 * p_r * (1.0 - p_r)) / n
        j = int(np.argmin(weighted))
        if weighted[j] < best_score:
            best_score = weighted[j]
            best_feat = int(f)
            best_th = float(ths[idx[j]])
    if best_feat < 0:
        return _leaf(n_pos, n)
    mask = X[:, best_feat] <= best_th
    return {
        "feature": best_feat,
        "threshold": best_th,
        "left": _build_tree(X[mask], y[mask], depth + 1, cfg, rng, mtry),
        "right": _build_tree(X[~mask], y[~mask], depth + 1, cfg, rng, mtry),
    }


def _tree_predict(tree: dict, X, out=None, idx=None):
    if out is None:
        out = np.zeros(X.shape[0], dtype=np.int64)
        idx = np.arange(X.shape[0])
    if idx.size == 0:
        return out
    if "leaf" in tree:
        out[idx] = tree["leaf"]
        return out
    below = X[idx, tree["feature"]] <= tree["threshold"]
    _tree_predict(tree["left"], X, out, idx[below])
    _tree_predict(tree["right"], X, out, idx[~below])
    return out


def forest_votes(trees, X):
    """Fraction of trees voting positive for each row of X."""
    X = np.asarray(X, dtype=np.float64)
    votes = np.zeros(X.shape[0], dtype=np.float64)
    for tree in trees:
        votes += _tree_predict(tree, X)
    return votes / len(trees)


def train_rf(X, y, feature_names, config: Optional[RFConfig] = None) -> TrainedModel:
    """Bagged Gini trees over seeded per-tree random streams.

    Each tree gets its own generator spawned from the config seed, draws a
    bootstrap sample (unless disabled), and greedily splits on the best of
    round(sqrt(d)) candidate features using an evenly spaced threshold grid
    between the node's min and max. Out-of-bag accuracy is computed from the
    rows each tree did not sample and stored in the params (NaN when
    bootstrapping is off).

    Raises:
        DataError: non-binary or single-class labels.
    """
    cfg = config or RFConfig()
    Xp, y, names, imputation, std, pca = fit_feature_pipeline(
        X, y, feature_names, cfg.pca_k
    )
    n, d = Xp.shape
    mtry = max(1, int(round(np.sqrt(d))))
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)
    trees = []
    oob_votes = np.zeros(n)
    oob_counts = np.zeros(n)
    for ss in streams:
        rng = np.random.default_rng(ss)
        if cfg.bootstrap:
            sample = rng.integers(0, n, size=n)
        else:
            sample = np.arange(n)
        tree = _build_tree(Xp[sample], y[sample], 0, cfg, rng, mtry)
        trees.append(tree)
        if cfg.bootstrap:
            oob = np.setdiff1d(np.arange(n), sample, assume_unique=False)
            if oob.size:
                pred = _tree_predict(tree, Xp[oob])
                oob_votes[oob] += pred
                oob_counts[oob] += 1
    if cfg.bootstrap and (oob_counts > 0).any():
        seen = oob_counts > 0
        oob_pred = (2.0 * oob_votes[seen] >= oob_counts[seen]).astype(np.int64)
        oob_accuracy = float(np.mean(oob_pred == y[seen]))
    else:
        oob_accuracy = float("nan")
    return TrainedModel(
        variant="rf",
        params={"trees": trees, "oob_accuracy": oob_accuracy},
        standardization=std,
        config=asdict(cfg),
        imputation=imputation,
        pca=pca,
        feature_names=names,
    )
