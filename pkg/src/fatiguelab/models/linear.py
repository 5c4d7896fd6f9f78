"""Linear classifiers: L2 logistic regression and a Pegasos-style SVM."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .model import TrainedModel, fit_feature_pipeline


@dataclass(frozen=True)
class LogRegConfig:
    lam: float = 1e-3
    epochs: int = 500
    learning_rate: float = 0.1
    pca_k: Optional[int] = None
    seed: int = 0


@dataclass(frozen=True)
class SVMConfig:
    lam: float = 1e-3
    epochs: int = 50
    pca_k: Optional[int] = None
    seed: int = 0


def train_logreg(X, y, feature_names, config: Optional[LogRegConfig] = None) -> TrainedModel:
    """Full-batch gradient descent on the L2-regularized logistic loss.

    Weights start at zero, so the fit is deterministic; the per-epoch loss
    history (including the final loss) is stored in the params.

    Raises:
        DataError: non-binary or single-class labels.
    """
    cfg = config or LogRegConfig()
    Xp, y, names, imputation, std, pca = fit_feature_pipeline(
        X, y, feature_names, cfg.pca_k
    )
    n, d = Xp.shape
    yf = y.astype(np.float64)
    w = np.zeros(d)
    b = 0.0
    losses = []
    for _ in range(cfg.epochs):
        z = Xp @ w + b
        losses.append(
            float(np.mean(np.logaddexp(0.0, z) - yf * z) + 0.5 * cfg.lam * (w @ w))
        )
        residual = 1.0 / (1.0 + np.exp(-z)) - yf
        w -= cfg.learning_rate * (Xp.T @ residual / n + cfg.lam * w)
        b -= cfg.learning_rate * float(np.mean(residual))
    z = Xp @ w + b
    losses.append(
        float(np.mean(np.logaddexp(0.0, z) - yf * z) + 0.5 * cfg.lam * (w @ w))
    )
    return TrainedModel(
        variant="logreg",
        params={"w": w, "b": b, "loss_history": np.array(losses)},
        standardization=std,
        config=asdict(cfg),
        imputation=imputation,
        pca=pca,
        feature_names=names,
    )


def train_svm(X, y, feature_names, config: Optional[SVMConfig] = None) -> TrainedModel:
    """Linear hinge loss with L2, trained by the Pegasos subgradient schedule.

    Samples are visited in seeded shuffled order with step 1 / (lam * t).
    The bias rides along as a constant column under the same regularizer.

    Raises:
        DataError: non-binary or single-class labels.
    """
    cfg = config or SVMConfig()
    Xp, y, names, imputation, std, pca = fit_feature_pipeline(
        X, y, feature_names, cfg.pca_k
    )
    n, d = Xp.shape
    y_pm = 2.0 * y - 1.0
    Xa = np.hstack([Xp, np.ones((n, 1))])
    w = np.zeros(d + 1)
    rng = np.random.default_rng(cfg.seed)
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (cfg.lam * t)
            x = Xa[i]
            if y_pm[i] * (x @ w) < 1.0:
                w = (1.0 - eta * cfg.lam) * w + eta * y_pm[i] * x
            else:
                w = (1.0 - eta * cfg.lam) * w
    return TrainedModel(
        variant="svm",
        params={"w": w[:-1], "b": float(w[-1])},
        standardization=std,
        config=asdict(cfg),
        imputation=imputation,
        pca=pca,
        feature_names=names,
    )
