"""SVM and random forest classifiers, splitting, standardization and
evaluation."""

from seamsentinel.classify.dataset import (
    Dataset,
    SchemaError,
    Standardizer,
    fit_standardizer,
    stratified_split,
)
from seamsentinel.classify.evaluation import TrainReport, evaluate
from seamsentinel.classify.forest import ForestModel, feature_importance, train_random_forest
from seamsentinel.classify.modelio import ModelFormatError, load_model, save_model
from seamsentinel.classify.svm import SvmConvergenceError, SvmModel, train_svm


def predict(model, fv) -> int:
    return model.predict(fv)


__all__ = [
    "Dataset", "SchemaError", "Standardizer", "fit_standardizer", "stratified_split",
    "TrainReport", "evaluate", "ForestModel", "feature_importance", "train_random_forest",
    "ModelFormatError", "load_model", "save_model", "SvmConvergenceError", "SvmModel",
    "train_svm", "predict",
]
