"""Lagged-feature regression models and importance ranking."""

from .dataset import DEFAULT_LAGS, PLACEBO, LaggedDataset, build_lagged
from .importance import ImportanceReport, importance_report
from .rnn import MIN_RNN_TRAIN_ROWS, RecurrentNet, RnnModel, train_rnn
from .trees import (
    MIN_TRAIN_ROWS,
    BoostModel,
    ForestModel,
    TreeModel,
    train_boost,
    train_forest,
    train_tree,
)

__all__ = [
    "DEFAULT_LAGS",
    "PLACEBO",
    "LaggedDataset",
    "build_lagged",
    "ImportanceReport",
    "importance_report",
    "MIN_RNN_TRAIN_ROWS",
    "RecurrentNet",
    "RnnModel",
    "train_rnn",
    "MIN_TRAIN_ROWS",
    "BoostModel",
    "ForestModel",
    "TreeModel",
    "train_boost",
    "train_forest",
    "train_tree",
]
