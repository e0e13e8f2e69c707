from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from seamsentinel.classify.rng import derive_rng
from seamsentinel.features import FeatureVector, Scheme
from seamsentinel.signal import Scenario


class SchemaError(ValueError):
    pass


def check_schema(expected: Sequence[str], got: Sequence[str]) -> None:
    expected, got = tuple(expected), tuple(got)
    if expected == got:
        return
    missing = [n for n in expected if n not in got]
    extra = [n for n in got if n not in expected]
    if missing or extra:
        raise SchemaError(f"feature schema mismatch: missing {missing}, extra {extra}")
    raise SchemaError("feature schema mismatch: same names in a different order")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (rows = samples) with integer labels ``y``."""

    names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    scheme: Scheme
    scenario: Scenario | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        y = np.array(self.y, dtype=np.int64).reshape(-1)
        if X.size == 0:
            X = X.reshape(0, len(self.names))
        if X.shape != (len(y), len(self.names)):
            raise SchemaError(f"X shape {X.shape} does not match {len(y)} labels x "
                              f"{len(self.names)} features")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.scenario is not None:
            object.__setattr__(self, "scenario", Scenario.parse(self.scenario))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[FeatureVector, int]],
                  scenario: Scenario | None = None) -> "Dataset":
        rows = list(rows)
        if not rows:
            raise ValueError("no rows")
        first = rows[0][0]
        for fv, _ in rows[1:]:
            check_schema(first.names, fv.names)
        X = np.stack([fv.values for fv, _ in rows])
        y = [label for _, label in rows]
        return cls(first.names, X, y, first.scheme, scenario)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.y)

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.scheme, self.names, self.X[i])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.names, self.X[idx], self.y[idx], self.scheme, self.scenario)


def stratified_split(ds: Dataset, validation_ratio: float = 0.25,
                     seed: int = 0) -> tuple[Dataset, Dataset]:
    """Per class, ``max(1, floor(n_c * ratio))`` rows go to validation, picked
    by a seeded shuffle.  Both halves keep the original row order."""
    if not 0 < validation_ratio < 1:
        raise ValueError("validation_ratio must lie strictly between 0 and 1")
    val_idx = []
    for c in ds.classes:
        members = np.nonzero(ds.y == c)[0]
        if len(members) < 2:
            raise ValueError(f"class {c} has fewer than 2 rows")
        n_val = max(1, math.floor(len(members) * validation_ratio))
        rng = derive_rng(seed, "split", int(c))
        val_idx.extend(rng.permutation(members)[:n_val].tolist())
    mask = np.zeros(len(ds), dtype=bool)
    mask[val_idx] = True
    return ds.subset(np.nonzero(~mask)[0]), ds.subset(np.nonzero(mask)[0])


@dataclass(frozen=True, eq=False)
class Standardizer:
    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def apply(self, fv: FeatureVector) -> FeatureVector:
        check_schema(self.names, fv.names)
        return FeatureVector(fv.scheme, fv.names, self.transform(fv.values))


def fit_standardizer(train: Dataset) -> Standardizer:
    """Per-feature mean and population standard deviation of ``train``.

    Raises:
        ValueError: naming the first constant feature.
    """
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    for name, s in zip(train.names, std):
        if not s > 0:
            raise ValueError(f"constant feature {name!r} cannot be standardized")
    mean.setflags(write=False)
    std.setflags(write=False)
    return Standardizer(train.names, mean, std)
