from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from seamsentinel.classify.dataset import Dataset, check_schema


@dataclass(frozen=True, eq=False)
class TrainReport:
    model_id: str
    classes: tuple[int, ...]
    train_accuracy: float | None
    validation_accuracy: float
    confusion_matrix: np.ndarray
    split_seed: int | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {
            "model_id": self.model_id,
            "classes": list(self.classes),
            "train_accuracy": self.train_accuracy,
            "validation_accuracy": self.validation_accuracy,
            "confusion_matrix": self.confusion_matrix.tolist(),
            "split_seed": self.split_seed,
        }
        out.update(self.extra)
        return out

    def to_text(self) -> str:
        lines = [f"model: {self.model_id}"]
        if self.train_accuracy is not None:
            lines.append(f"train accuracy:      {self.train_accuracy:.4f}")
        lines.append(f"validation accuracy: {self.validation_accuracy:.4f}")
        lines.append("confusion matrix (rows = true, columns = predicted):")
        header = "      " + " ".join(f"{c:>6d}" for c in self.classes)
        lines.append(header)
        for c, row in zip(self.classes, self.confusion_matrix):
            lines.append(f"{c:>6d}" + " ".join(f"{v:>6d}" for v in row))
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def accuracy(model, ds: Dataset) -> float:
    check_schema(model.names, ds.names)
    return float(np.mean(model.predict_matrix(ds.X) == ds.y))


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, classes) -> np.ndarray:
    index = {c: k for k, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true.tolist(), y_pred.tolist()):
        cm[index[t], index[p]] += 1
    return cm


def evaluate(model, validation: Dataset, train: Dataset | None = None,
             model_id: str | None = None, split_seed: int | None = None) -> TrainReport:
    """Accuracy and confusion matrix of ``model`` on ``validation``."""
    if len(validation) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    check_schema(model.names, validation.names)
    pred = model.predict_matrix(validation.X)
    classes = tuple(sorted(set(model.classes) | set(int(c) for c in validation.classes)))
    cm = confusion_matrix(validation.y, pred, classes)
    acc = float(np.trace(cm)) / float(cm.sum())
    train_acc = accuracy(model, train) if train is not None else None
    return TrainReport(model_id or model.kind, classes, train_acc, acc, cm, split_seed)
