"""
Lasso regression along a lambda path.

The fit works on internally standardized features (zero mean, unit
population variance) and a centered response, and minimizes

    (1/2n) * ||y - X b - b0||^2 + lambda * ||b||_1

along a descending lambda path with warm starts, using scikit-learn's
coordinate descent. Coefficients are reported on the original feature scale.
Columns that are constant in the fitting rows get a zero coefficient.

Lambda is chosen by K-fold cross validation over a log-spaced grid, with the
`min` or `one_se` rule. `cv_predictions` wraps all of this into the K-fold
cross-validated prediction vector used to assess a feature subset.
"""
import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import lasso_path

from ..core import Dataset, PredictionVector, Provenance, require_trainable
from ..exceptions import ContractViolation, DataError
from ..log import kv
from ..schemas import BaseKind, BaseRegressorSpec, LambdaRule, LassoParams
from ..utils import derive_seed, subset_key

logger = logging.getLogger(__name__)

# non-convergence is logged per lambda by solve_lasso_path instead
warnings.filterwarnings("ignore", category=ConvergenceWarning, module=r"sklearn\.linear_model\._coordinate_descent")


# ==========================================
# RESULT TYPES
# ==========================================

@dataclass(frozen=True)
class LassoCoefficients:
    """Solution at one lambda, on the original feature scale."""
    lam: float
    intercept: float
    coef: np.ndarray
    n_iter: int
    converged: bool

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coef


@dataclass(frozen=True)
class LassoModel:
    """A Lasso fit on `feature_subset` (column indices of the full feature matrix)."""
    feature_subset: tuple[int, ...]
    intercept: float
    coef: np.ndarray
    lam: float

    def predict(self, X_subset: np.ndarray) -> np.ndarray:
        return self.intercept + X_subset @ self.coef


@dataclass(frozen=True)
class LambdaSelection:
    lambdas: np.ndarray
    cv_mean: np.ndarray
    cv_se: np.ndarray
    index_min: int
    index: int

    @property
    def lam(self) -> float:
        return float(self.lambdas[self.index])


@dataclass(frozen=True)
class _Standardization:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    usable: np.ndarray


# ==========================================
# SOLVER
# ==========================================

def _check_finite(X: np.ndarray, y: np.ndarray) -> None:
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("Lasso input contains non-finite values")


def _standardize(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, _Standardization]:
    x_mean = X.mean(axis=0)
    centered = X - x_mean
    x_scale = np.sqrt(np.mean(centered * centered, axis=0))
    usable = x_scale > 1e-12 * np.maximum(1.0, np.abs(x_mean))
    safe = np.where(usable, x_scale, 1.0)
    Xs = np.asfortranarray(np.where(usable, centered / safe, 0.0))
    y_mean = float(y.mean())
    return Xs, y - y_mean, _Standardization(x_mean, safe, y_mean, usable)


def _lambda_max(Xs: np.ndarray, yc: np.ndarray) -> float:
    if Xs.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(Xs.T @ yc)) / Xs.shape[0])


def lambda_grid(X: np.ndarray, y: np.ndarray, path_length: int = 100, ratio: float = 1e-4) -> np.ndarray:
    """
    Log-spaced lambda path from lambda_max down to `ratio * lambda_max`.

    lambda_max = max_j |<x_j, y - mean(y)>| / n on standardized columns, the
    smallest penalty at which every slope is zero. A zero lambda_max (constant
    response, or no usable column) yields the single-point grid [0].
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    Xs, yc, _ = _standardize(X, y)
    lmax = _lambda_max(Xs, yc)
    if lmax <= 0.0:
        return np.zeros(1)
    return np.geomspace(lmax, ratio * lmax, path_length)


def solve_lasso_path(
    X: np.ndarray,
    y: np.ndarray,
    lambdas: Sequence[float],
    tol: float = 1e-7,
    max_iters: int = 10_000,
) -> list[LassoCoefficients]:
    """
    Lasso solutions along a strictly descending lambda path.

    Positive lambdas go to scikit-learn's coordinate descent, warm-started
    along the path; `tol` is its duality-gap tolerance relative to ||y||^2. A
    trailing zero lambda is the minimum-norm least-squares fit.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ContractViolation("X must be an n x p matrix matching y")
    _check_finite(X, y)
    lambdas = np.asarray(lambdas, dtype=float).reshape(-1)
    if lambdas.size == 0:
        raise ContractViolation("lambda path is empty")
    if np.any(lambdas < 0) or np.any(np.diff(lambdas) >= 0):
        raise ContractViolation("lambdas must be nonnegative and strictly descending")

    Xs, yc, st = _standardize(X, y)
    cols = np.flatnonzero(st.usable)
    positive = lambdas[lambdas > 0]
    betas = np.zeros((X.shape[1], lambdas.size))
    n_iters = np.zeros(lambdas.size, dtype=int)

    if cols.size and positive.size:
        _, coefs, _, iters = lasso_path(
            Xs[:, cols], yc, alphas=positive, tol=tol, max_iter=max_iters, return_n_iter=True,
        )
        betas[cols, : positive.size] = coefs
        n_iters[: positive.size] = iters
    if cols.size and positive.size < lambdas.size:
        betas[cols, -1] = np.linalg.lstsq(Xs[:, cols], yc, rcond=None)[0]
        n_iters[-1] = 0

    path = []
    for i, lam in enumerate(lambdas):
        converged = bool(n_iters[i] < max_iters)
        if not converged:
            logger.warning(kv("lasso_not_converged", **{"lambda": f"{lam:.4g}", "iters": int(n_iters[i])}))
        coef = betas[:, i] / st.x_scale
        intercept = st.y_mean - float(st.x_mean @ coef)
        path.append(LassoCoefficients(float(lam), intercept, coef, int(n_iters[i]), converged))
    return path


# ==========================================
# CROSS VALIDATION
# ==========================================

def fold_assignment(n: int, n_folds: int, seed: int) -> np.ndarray:
    """Random fold label per row; fold sizes differ by at most one."""
    if not 2 <= n_folds <= n:
        raise ContractViolation(f"need 2 <= K <= n, got K={n_folds}, n={n}")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.empty(n, dtype=int)
    folds[order] = np.arange(n) % n_folds
    return folds


def select_lambda(X: np.ndarray, y: np.ndarray, params: LassoParams, seed: int) -> LambdaSelection:
    """
    Inner K-fold CV over the lambda grid of (X, y).

    `min` picks the lambda with the smallest mean CV error; `one_se` picks the
    largest lambda whose mean CV error is within one standard error of that
    minimum.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = X.shape[0]
    lambdas = lambda_grid(X, y, params.path_length, params.lambda_ratio)
    if lambdas.size == 1:
        zeros = np.zeros(1)
        return LambdaSelection(lambdas, zeros, zeros, 0, 0)
    if n < params.n_folds:
        raise DataError(f"{n} rows cannot be split into {params.n_folds} folds for choosing lambda")

    folds = fold_assignment(n, params.n_folds, seed)
    errors = np.empty((params.n_folds, lambdas.size))
    for k in range(params.n_folds):
        held = folds == k
        path = solve_lasso_path(X[~held], y[~held], lambdas, params.convergence_tol, params.max_iters)
        for i, sol in enumerate(path):
            resid = y[held] - sol.predict(X[held])
            errors[k, i] = np.mean(resid * resid)

    cv_mean = errors.mean(axis=0)
    cv_se = errors.std(axis=0, ddof=1) / np.sqrt(params.n_folds)
    index_min = int(np.argmin(cv_mean))
    index = index_min
    if params.lambda_rule == LambdaRule.ONE_SE:
        # lambdas descend, so the first qualifying index is the largest lambda
        bound = cv_mean[index_min] + cv_se[index_min]
        index = int(np.flatnonzero(cv_mean <= bound)[0])
    return LambdaSelection(lambdas, cv_mean, cv_se, index_min, index)


def fit_lasso_matrix(X: np.ndarray, y: np.ndarray, subset: Sequence[int], params: LassoParams, seed: int) -> LassoModel:
    """Chooses lambda by inner CV and refits on all of (X, y) along the path up to it."""
    selection = select_lambda(X, y, params, seed)
    path = solve_lasso_path(X, y, selection.lambdas[: selection.index + 1], params.convergence_tol, params.max_iters)
    final = path[-1]
    return LassoModel(tuple(subset), final.intercept, final.coef, final.lam)


def _check_lasso_call(data: Dataset, subset: Sequence[int], spec: BaseRegressorSpec) -> tuple[int, ...]:
    if spec.kind != BaseKind.LASSO:
        raise ContractViolation(f"Lasso operation called with a '{spec.kind.value}' spec")
    subset = subset_key(subset)
    if not subset:
        raise ContractViolation("feature subset is empty")
    if subset[-1] >= data.D:
        raise ContractViolation(f"feature index {subset[-1]} out of range for {data.D} features")
    require_trainable(data)
    return subset


def fit_lasso(data: Dataset, subset: Sequence[int], spec: BaseRegressorSpec, seed: int) -> LassoModel:
    """Final-quality Lasso on all rows of `data`, lambda chosen by inner CV."""
    subset = _check_lasso_call(data, subset, spec)
    if data.n < spec.lasso.n_folds:
        raise DataError(f"{data.n} rows are too few for {spec.lasso.n_folds}-fold CV; use a smaller K")
    return fit_lasso_matrix(data.X[:, subset], data.y, subset, spec.lasso, derive_seed(seed, "lambda"))


def cv_predictions(data: Dataset, subset: Sequence[int], spec: BaseRegressorSpec, seed: int) -> PredictionVector:
    """
    K-fold cross-validated predictions for a Lasso on `subset`.

    Rows are split into K random folds; each fold is predicted by a model fit
    on the other K-1 folds, whose lambda is picked by an inner CV on those
    folds alone.
    """
    subset = _check_lasso_call(data, subset, spec)
    K = spec.lasso.n_folds
    if data.n < 2 * K:
        raise DataError(f"{data.n} rows are too few for {K}-fold CV (need at least {2 * K}); use a smaller K")

    Xsub = data.X[:, subset]
    folds = fold_assignment(data.n, K, derive_seed(seed, "outer-folds"))
    preds = np.empty(data.n)
    for k in range(K):
        held = folds == k
        model = fit_lasso_matrix(Xsub[~held], data.y[~held], subset, spec.lasso, derive_seed(seed, "inner", k))
        preds[held] = model.predict(Xsub[held])
    return PredictionVector(preds, Provenance.CV)
