from .assess import Assessment, AssessmentCache, FittedModel, assess, fit_model, predict, repeated_cv_mse
from .forest import ForestModel, RegressionTree, fit_forest, grow_tree, oob_predictions
from .lasso import (
    LassoCoefficients, LassoModel, cv_predictions, fit_lasso, fold_assignment,
    lambda_grid, select_lambda, solve_lasso_path,
)
