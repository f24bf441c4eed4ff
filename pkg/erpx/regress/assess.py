"""
Assessment of feature subsets.

`assess` turns (data, subset, spec, seed) into the pair (c, y_hat): the
CV-MSE of a Lasso or the OOB-MSE of a forest, together with the prediction
vector that produced it. Results are memoized in an AssessmentCache keyed by
the content of the data, the subset, the spec and the seed, so a feature
group that is reassembled later in the pipeline is never refit.
"""
import threading
from collections.abc import Sequence
from typing import NamedTuple, Optional, Union

import numpy as np

from ..core import AssessmentValue, Dataset, PredictionVector, mse
from ..exceptions import ContractViolation
from ..schemas import BaseKind, BaseRegressorSpec
from ..utils import derive_seed, subset_key
from .forest import ForestModel, fit_forest, oob_predictions
from .lasso import LassoModel, cv_predictions, fit_lasso

FittedModel = Union[LassoModel, ForestModel]


class Assessment(NamedTuple):
    c: AssessmentValue
    predictions: PredictionVector


class AssessmentCache:
    """
    Thread-safe memo of assessments.

    Concurrent writers of one key always carry identical values, so the last
    write simply wins.
    """

    def __init__(self):
        self._store: dict[tuple, Assessment] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: tuple) -> Optional[Assessment]:
        with self._lock:
            found = self._store.get(key)
            if found is None:
                self.misses += 1
            else:
                self.hits += 1
            return found

    def put(self, key: tuple, value: Assessment) -> None:
        with self._lock:
            self._store[key] = value

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)


def assessment_key(data: Dataset, subset: tuple[int, ...], spec: BaseRegressorSpec, seed: int, final: bool) -> tuple:
    # final-quality only changes forests (more trees)
    quality = final and spec.kind == BaseKind.FOREST
    return (data.fingerprint, subset, spec.fingerprint(), int(seed), quality)


def assess(
    data: Dataset,
    subset: Sequence[int],
    spec: BaseRegressorSpec,
    seed: int,
    *,
    cache: Optional[AssessmentCache] = None,
    final: bool = False,
) -> Assessment:
    """
    CV-MSE (Lasso) or OOB-MSE (forest) of the base model on `subset`, with its predictions.

    Without a `cache` the result is not kept past this call.
    """
    subset = subset_key(subset)
    if not subset:
        raise ContractViolation("feature subset is empty")
    cache = AssessmentCache() if cache is None else cache
    key = assessment_key(data, subset, spec, seed, final)
    found = cache.get(key)
    if found is not None:
        return found

    if spec.kind == BaseKind.LASSO:
        preds = cv_predictions(data, subset, spec, seed)
    else:
        model = fit_forest(data, subset, spec, seed, final=final)
        preds = oob_predictions(model, data)
    result = Assessment(mse(data.y, preds.values), preds)
    cache.put(key, result)
    return result


def repeated_cv_mse(
    data: Dataset,
    subset: Sequence[int],
    spec: BaseRegressorSpec,
    seed: int,
    repetitions: int,
    *,
    cache: Optional[AssessmentCache] = None,
) -> float:
    """Mean CV-MSE over `repetitions` independent fold assignments (Lasso)."""
    if repetitions < 1:
        raise ContractViolation("repetitions must be >= 1")
    values = [
        assess(data, subset, spec, derive_seed(seed, "repetition", r), cache=cache).c
        for r in range(repetitions)
    ]
    return float(np.mean(values))


def fit_model(
    data: Dataset,
    subset: Sequence[int],
    spec: BaseRegressorSpec,
    seed: int,
    *,
    threads: int = 1,
) -> FittedModel:
    """Final-quality fit on all rows: CV-chosen lambda for Lasso, `n_trees_final` trees for forests."""
    if spec.kind == BaseKind.LASSO:
        return fit_lasso(data, subset, spec, seed)
    return fit_forest(data, subset, spec, seed, final=True, threads=threads)


def predict(model: FittedModel, Xnew: np.ndarray) -> np.ndarray:
    """
    Predictions of a fitted model for the rows of a full feature matrix.

    Xnew is indexed like the training matrix; only the model's feature
    subset is read.
    """
    Xnew = np.asarray(Xnew, dtype=float)
    if Xnew.ndim != 2:
        raise ContractViolation("Xnew must be a 2-d matrix")
    needed = max(model.feature_subset) + 1
    if Xnew.shape[1] < needed:
        raise ContractViolation(f"Xnew has {Xnew.shape[1]} columns but the model reads column {needed - 1}")
    if Xnew.shape[0] == 0:
        return np.zeros(0)
    return model.predict(Xnew[:, list(model.feature_subset)])
