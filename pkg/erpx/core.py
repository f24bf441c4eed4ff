"""
Core data model and metrics.

Unlike the fitted models in `erpx.regress`, the types here are plain value
objects shared by every module: the Dataset, the prediction vectors produced
by an assessment, and the handful of pure numerical helpers (MSE, ensemble
averaging, response permutation, empirical quantiles) the formation algorithm
is built from.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from collections.abc import Sequence
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import ContractViolation, DataError
from .utils import content_hash

# c >= 0, response units squared.
AssessmentValue = float


class FeatureKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Provenance(str, Enum):
    """Where a prediction vector came from."""
    CV = "cv"
    OOB = "oob"
    DIRECT = "direct"


def infer_kinds(X: np.ndarray) -> tuple[FeatureKind, ...]:
    """A column is binary iff every value is 0 or 1."""
    binary = np.all((X == 0) | (X == 1), axis=0)
    return tuple(FeatureKind.BINARY if b else FeatureKind.CONTINUOUS for b in binary)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


# ==========================================
# DATASET
# ==========================================

class Dataset(BaseModel):
    """
    Response vector plus feature matrix.

    The arrays are copied and made read-only on construction, so a Dataset can
    be shared freely between threads. Feature kinds are inferred from the
    values when not given. A Dataset may hold a single row (preprocessing can
    legitimately produce one); the n >= 2 requirement is enforced by the
    operations that fit models, via `require_trainable`.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    y: np.ndarray
    X: np.ndarray
    feature_names: tuple[str, ...]
    feature_kinds: tuple[FeatureKind, ...]
    name: str = "dataset"

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, values: Any) -> Any:
        if not isinstance(values, dict):
            return values
        values = dict(values)
        X = np.asarray(values.get("X"), dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(values.get("y"), dtype=float).reshape(-1)
        values["X"] = _frozen(X)
        values["y"] = _frozen(y)
        if values.get("feature_names") is None:
            values["feature_names"] = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if values.get("feature_kinds") is None:
            values["feature_kinds"] = infer_kinds(X) if X.size else ()
        return values

    @model_validator(mode="after")
    def _check(self) -> "Dataset":
        if self.X.ndim != 2:
            raise ContractViolation("X must be a 2-d matrix")
        n, D = self.X.shape
        if n < 1 or D < 1:
            raise DataError(f"dataset needs at least one row and one feature, got {n}x{D}")
        if self.y.shape[0] != n:
            raise ContractViolation(f"y has {self.y.shape[0]} values but X has {n} rows")
        if len(self.feature_names) != D or len(self.feature_kinds) != D:
            raise ContractViolation("feature_names and feature_kinds must have one entry per column")
        if len(set(self.feature_names)) != D:
            raise DataError("feature names must be unique")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise DataError("dataset contains missing or non-finite values")
        for j, kind in enumerate(self.feature_kinds):
            if kind == FeatureKind.BINARY:
                col = self.X[:, j]
                if not np.all((col == 0) | (col == 1)):
                    raise DataError(f"feature '{self.feature_names[j]}' is marked binary but holds values other than 0/1")
        return self

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def D(self) -> int:
        return self.X.shape[1]

    @cached_property
    def fingerprint(self) -> str:
        """Content hash of (X, y); two datasets with equal values share it."""
        return content_hash(self.X, self.y)

    def with_response(self, y: np.ndarray, name: Optional[str] = None) -> "Dataset":
        return Dataset(
            y=y, X=self.X, feature_names=self.feature_names,
            feature_kinds=self.feature_kinds, name=name or self.name,
        )

    def take_rows(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            y=self.y[rows], X=self.X[rows], feature_names=self.feature_names,
            feature_kinds=self.feature_kinds, name=self.name,
        )

    def take_columns(self, cols: Sequence[int]) -> "Dataset":
        cols = [int(c) for c in cols]
        return Dataset(
            y=self.y, X=self.X[:, cols],
            feature_names=tuple(self.feature_names[c] for c in cols),
            feature_kinds=tuple(self.feature_kinds[c] for c in cols),
            name=self.name,
        )


def require_trainable(data: Dataset) -> None:
    """Fits need at least two rows."""
    if data.n < 2:
        raise DataError(f"dataset '{data.name}' has {data.n} row(s); at least 2 are required to fit a model")


# ==========================================
# PREDICTIONS & METRICS
# ==========================================

@dataclass(frozen=True)
class PredictionVector:
    """Predictions aligned index-for-index with the rows of the assessed dataset."""
    values: np.ndarray
    provenance: Provenance = Provenance.DIRECT
    # rows that had to fall back to the response mean (OOB rows never left out)
    fallback_rows: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float).reshape(-1)))

    def __len__(self) -> int:
        return self.values.shape[0]


def mse(y: np.ndarray, yhat: np.ndarray) -> AssessmentValue:
    """Mean squared error of prediction, (1/N) * sum((y - yhat)^2)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape[0] != yhat.shape[0]:
        raise ContractViolation(f"length mismatch: {y.shape[0]} observations vs {yhat.shape[0]} predictions")
    if y.shape[0] == 0:
        raise ContractViolation("mse needs at least one observation")
    resid = y - yhat
    return float(np.mean(resid * resid))


def ensemble_predictions(preds: Sequence[PredictionVector]) -> PredictionVector:
    """
    Elementwise mean of prediction vectors.

    Values are sorted per row before summation, which makes the result
    bit-identical for every ordering of `preds`.
    """
    if len(preds) == 0:
        raise ContractViolation("cannot ensemble an empty sequence of predictions")
    lengths = {len(p) for p in preds}
    if len(lengths) != 1:
        raise ContractViolation(f"prediction vectors differ in length: {sorted(lengths)}")
    if len(preds) == 1:
        return preds[0]
    stacked = np.sort(np.vstack([p.values for p in preds]), axis=0)
    provenances = {p.provenance for p in preds}
    provenance = provenances.pop() if len(provenances) == 1 else Provenance.DIRECT
    return PredictionVector(
        values=stacked.sum(axis=0) / len(preds),
        provenance=provenance,
        fallback_rows=max(p.fallback_rows for p in preds),
    )


def permute_response(y: np.ndarray, seed: int) -> np.ndarray:
    """Uniformly random permutation of `y`, deterministic given `seed`."""
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] < 2:
        raise ContractViolation("permute_response needs at least two values")
    return np.random.default_rng(seed).permutation(y)


def empirical_quantile(values: np.ndarray, q: float, method: str = "linear") -> float:
    """
    Order-statistic quantile of a sample.

    The default `linear` method interpolates at index q*(m-1) of the sorted
    sample, so q=0 gives the minimum and q=1 the maximum.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] == 0:
        raise ContractViolation("empirical_quantile needs at least one value")
    if not 0.0 <= q <= 1.0:
        raise ContractViolation(f"quantile level must lie in [0, 1], got {q}")
    return float(np.quantile(values, q, method=method))
