"""
Tests for the Lasso: the lambda grid, the path solver against
KKT and least-squares oracles, fold assignment, lambda selection and
cross-validated predictions.
"""
import numpy as np
import pytest

from erpx.core import Dataset, Provenance
from erpx.exceptions import ContractViolation, DataError
from erpx.regress import (
    cv_predictions, fit_lasso, fold_assignment, lambda_grid, predict, select_lambda, solve_lasso_path,
)
from erpx.schemas import LambdaRule, LassoParams


def kkt_residual(X, y, sol) -> float:
    """Largest subgradient violation, computed on population-standardized columns."""
    n = X.shape[0]
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    Xs = (X - mean) / scale
    beta_s = sol.coef * scale
    resid = y - sol.predict(X)
    grad = Xs.T @ resid / n
    violation = np.where(
        beta_s != 0,
        np.abs(grad - sol.lam * np.sign(beta_s)),
        np.maximum(np.abs(grad) - sol.lam, 0.0),
    )
    return float(violation.max())


# ==========================================
# LAMBDA GRID & SOLVER
# ==========================================

def test_lambda_grid_shape_and_threshold():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 5))
    y = X[:, 0] + rng.normal(size=30)
    grid = lambda_grid(X, y, path_length=10, ratio=1e-3)
    assert grid.shape == (10,)
    assert np.all(np.diff(grid) < 0)
    assert grid[-1] == pytest.approx(1e-3 * grid[0])

    sol = solve_lasso_path(X, y, grid[:1])[0]
    np.testing.assert_allclose(sol.coef, 0.0, atol=1e-12)
    assert sol.intercept == pytest.approx(y.mean())


def test_lambda_grid_constant_response():
    X = np.random.default_rng(1).normal(size=(10, 3))
    np.testing.assert_array_equal(lambda_grid(X, np.full(10, 4.0)), [0.0])


def test_single_feature_ols_slope():
    rng = np.random.default_rng(2)
    x = rng.normal(size=25)
    y = 3.0 * x - 1.0 + 0.2 * rng.normal(size=25)
    sol = solve_lasso_path(x.reshape(-1, 1), y, [0.0])[0]
    slope, intercept = np.polyfit(x, y, 1)
    assert sol.coef[0] == pytest.approx(slope, rel=1e-6)
    assert sol.intercept == pytest.approx(intercept, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("seed", range(50))
def test_kkt_holds_along_the_path(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(15, 41))
    p = int(rng.integers(1, 13))
    X = rng.normal(size=(n, p))
    y = 2.0 * X[:, 0] + rng.normal(size=n)
    lambdas = lambda_grid(X, y, path_length=15, ratio=1e-2)
    for sol in solve_lasso_path(X, y, lambdas, tol=1e-10, max_iters=200_000):
        assert kkt_residual(X, y, sol) <= 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_zero_lambda_matches_least_squares(seed):
    rng = np.random.default_rng(100 + seed)
    n, p = 40, int(rng.integers(2, 9))
    X = rng.normal(size=(n, p))
    y = X @ rng.normal(size=p) + 0.5 + rng.normal(size=n)
    sol = solve_lasso_path(X, y, [0.0], tol=1e-13, max_iters=500_000)[0]
    design = np.column_stack([np.ones(n), X])
    oracle, *_ = np.linalg.lstsq(design, y, rcond=None)
    np.testing.assert_allclose(sol.coef, oracle[1:], rtol=1e-6, atol=1e-9)
    np.testing.assert_allclose(sol.predict(X), design @ oracle, rtol=1e-6, atol=1e-9)


def test_constant_column_gets_zero_coefficient():
    rng = np.random.default_rng(3)
    X = np.column_stack([rng.normal(size=20), np.full(20, 7.0)])
    y = X[:, 0] + 0.1 * rng.normal(size=20)
    sol = solve_lasso_path(X, y, [0.01])[0]
    assert sol.coef[1] == 0.0


@pytest.mark.parametrize("lambdas", [[0.1, 0.2], [0.1, 0.1], [-0.1], []])
def test_bad_lambda_path(lambdas):
    X = np.eye(3)
    with pytest.raises(ContractViolation):
        solve_lasso_path(X, np.arange(3.0), lambdas)


def test_non_finite_input():
    X = np.array([[1.0], [np.nan], [2.0]])
    with pytest.raises(DataError):
        solve_lasso_path(X, np.arange(3.0), [0.1])


@pytest.mark.parametrize("seed", range(10))
def test_path_moves_continuously_with_lambda(seed):
    rng = np.random.default_rng(300 + seed)
    n, p = 40, 6
    X = rng.normal(size=(n, p))
    y = X @ np.array([2.0, -1.0, 0.5, 0.0, 0.0, 0.0]) + rng.normal(size=n)
    lambdas = lambda_grid(X, y, path_length=50, ratio=1e-2)
    path = solve_lasso_path(X, y, lambdas, tol=1e-10, max_iters=200_000)

    scale = X.std(axis=0)
    Xs = (X - X.mean(axis=0)) / scale
    # the active-set slope of the path is bounded by sqrt(p) / smallest eigenvalue of the Gram matrix
    slope = np.sqrt(p) / np.linalg.eigvalsh(Xs.T @ Xs / n)[0]
    betas = np.array([sol.coef * scale for sol in path])
    steps = np.abs(np.diff(betas, axis=0)).max(axis=1)
    assert np.all(steps <= slope * -np.diff(lambdas) + 1e-6)


def test_unconverged_fits_are_flagged():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(30, 8))
    y = X[:, :4].sum(axis=1) + rng.normal(size=30)
    lambdas = lambda_grid(X, y, path_length=5, ratio=1e-3)
    path = solve_lasso_path(X, y, lambdas, tol=1e-12, max_iters=1)
    assert not path[-1].converged
    assert path[-1].n_iter == 1
    assert all(sol.converged for sol in solve_lasso_path(X, y, lambdas))


def test_zero_lambda_after_a_positive_path():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 0.3 * rng.normal(size=30)
    lambdas = np.append(lambda_grid(X, y, path_length=5, ratio=1e-2), 0.0)
    path = solve_lasso_path(X, y, lambdas)
    design = np.column_stack([np.ones(30), X])
    oracle, *_ = np.linalg.lstsq(design, y, rcond=None)
    np.testing.assert_allclose(path[-1].coef, oracle[1:], rtol=1e-6, atol=1e-9)
    assert np.abs(path[-2].coef).sum() < np.abs(path[-1].coef).sum()


# ==========================================
# CROSS VALIDATION
# ==========================================

@pytest.mark.parametrize("n, K", [(10, 5), (11, 5), (33, 5), (7, 2)])
def test_fold_assignment_is_balanced(n, K):
    folds = fold_assignment(n, K, seed=9)
    sizes = np.bincount(folds, minlength=K)
    assert sizes.sum() == n
    assert sizes.max() - sizes.min() <= 1
    np.testing.assert_array_equal(folds, fold_assignment(n, K, seed=9))


def test_one_se_picks_a_larger_lambda(linear_data):
    params = LassoParams(n_folds=3, path_length=30, lambda_rule=LambdaRule.ONE_SE)
    sel = select_lambda(linear_data.X, linear_data.y, params, seed=1)
    assert sel.index <= sel.index_min
    assert sel.lam >= sel.lambdas[sel.index_min]
    best = sel.cv_mean[sel.index_min] + sel.cv_se[sel.index_min]
    assert sel.cv_mean[sel.index] <= best

    params_min = params.model_copy(update={"lambda_rule": LambdaRule.MIN})
    assert select_lambda(linear_data.X, linear_data.y, params_min, seed=1).index == sel.index_min


def test_cv_predictions_cover_every_row(linear_data, lasso_spec):
    preds = cv_predictions(linear_data, (0, 1, 2), lasso_spec, seed=5)
    assert preds.provenance == Provenance.CV
    assert len(preds) == linear_data.n
    assert np.all(np.isfinite(preds.values))
    np.testing.assert_array_equal(preds.values, cv_predictions(linear_data, (2, 1, 0), lasso_spec, seed=5).values)


def test_cv_predictions_constant_response(lasso_spec):
    X = np.random.default_rng(0).normal(size=(12, 3))
    data = Dataset(y=np.full(12, 2.5), X=X)
    np.testing.assert_allclose(cv_predictions(data, (0, 1, 2), lasso_spec, seed=0).values, 2.5)


def test_cv_predictions_needs_enough_rows(lasso_spec):
    rng = np.random.default_rng(0)
    data = Dataset(y=rng.normal(size=5), X=rng.normal(size=(5, 2)))
    with pytest.raises(DataError, match="smaller K"):
        cv_predictions(data, (0,), lasso_spec, seed=0)


def test_cv_predictions_empty_subset(linear_data, lasso_spec):
    with pytest.raises(ContractViolation):
        cv_predictions(linear_data, (), lasso_spec, seed=0)


def test_fit_lasso_finds_the_signals(linear_data, lasso_spec):
    model = fit_lasso(linear_data, range(linear_data.D), lasso_spec, seed=0)
    assert model.feature_subset == tuple(range(8))
    assert model.coef[0] > 0.5 and model.coef[1] > 0.5
    assert np.all(np.abs(model.coef[2:]) < 0.2)
    fitted = predict(model, linear_data.X)
    assert np.mean((fitted - linear_data.y) ** 2) < 0.25


def test_fit_lasso_rejects_forest_spec(linear_data, forest_spec):
    with pytest.raises(ContractViolation):
        fit_lasso(linear_data, (0,), forest_spec, seed=0)
