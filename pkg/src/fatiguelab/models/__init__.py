"""Classifier trainers, preprocessing, and the trained-model contract."""
from .forest import RFConfig, forest_votes, train_rf
from .linear import LogRegConfig, SVMConfig, train_logreg, train_svm
from .lstm import LSTMConfig, lstm_loss_and_grads, lstm_probabilities, train_lstm
from .model import (
    BlockPredictions,
    TrainedModel,
    classify_block,
    load_model,
    predict_blocks,
    predict_slices,
    save_model,
)
from .preprocess import (
    PCAModel,
    StandardizationParams,
    fit_imputer,
    fit_pca,
    fit_standardizer,
    impute,
    project,
    reconstruct,
    standardize,
)

__all__ = [
    "BlockPredictions",
    "LSTMConfig",
    "LogRegConfig",
    "PCAModel",
    "RFConfig",
    "SVMConfig",
    "StandardizationParams",
    "TrainedModel",
    "classify_block",
    "fit_imputer",
    "fit_pca",
    "fit_standardizer",
    "forest_votes",
    "impute",
    "load_model",
    "lstm_loss_and_grads",
    "lstm_probabilities",
    "predict_blocks",
    "predict_slices",
    "project",
    "reconstruct",
    "save_model",
    "standardize",
    "train_lstm",
    "train_logreg",
    "train_rf",
    "train_svm",
]
