"""
Pydantic schemas for regressor specifications and run records.

These models are the validated shapes that travel between the config layer,
the regressors and the artifact writers. Invalid values are rejected at
construction time, before any model is fit.
"""
from enum import Enum
from typing import Annotated, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

# ==========================================
# REGRESSOR SPECIFICATION
# ==========================================

class BaseKind(str, Enum):
    LASSO = "lasso"
    FOREST = "forest"


class LambdaRule(str, Enum):
    MIN = "min"
    ONE_SE = "one_se"


class LassoParams(BaseModel):
    """
    Lasso settings: K-fold CV for assessment and for choosing lambda.

    The lambda path has `path_length` log-spaced points from lambda_max down
    to `lambda_ratio * lambda_max`.
    """
    model_config = ConfigDict(frozen=True)

    n_folds: Annotated[int, Field(ge=2)] = 5
    path_length: Annotated[int, Field(ge=2)] = 100
    lambda_ratio: Annotated[float, Field(gt=0, lt=1)] = 1e-4
    lambda_rule: LambdaRule = LambdaRule.ONE_SE
    convergence_tol: Annotated[float, Field(gt=0)] = 1e-7
    max_iters: Annotated[int, Field(ge=1)] = 10_000


class ForestParams(BaseModel):
    """Regression forest settings. Trees are grown on with-replacement bootstraps of size n."""
    model_config = ConfigDict(frozen=True)

    n_trees_formation: Annotated[int, Field(ge=1)] = 250
    n_trees_final: Annotated[int, Field(ge=1)] = 1000
    mtry_fraction: Annotated[float, Field(gt=0, le=1)] = 1.0 / 3.0
    min_node_size: Annotated[int, Field(ge=1)] = 5


class BaseRegressorSpec(BaseModel):
    """Which base learner to use, with its hyperparameters and assessment protocol."""
    model_config = ConfigDict(frozen=True)

    kind: BaseKind
    lasso: LassoParams = LassoParams()
    forest: ForestParams = ForestParams()

    @property
    def protocol(self) -> str:
        """Assessment protocol paired with the learner: K-fold CV for Lasso, OOB for forests."""
        return "cv" if self.kind == BaseKind.LASSO else "oob"

    def fingerprint(self) -> str:
        return self.model_dump_json()


# ==========================================
# TRACE RECORDS
# ==========================================

class FormationTrace(BaseModel):
    """
    Counts per formation stage plus the assessment values recorded along the way.

    D variables -> d initial groups -> s screened groups -> e candidate
    phalanxes -> h final phalanxes, with D >= d >= s >= e >= h >= 1.
    """
    D: int
    d: int
    s: int
    e: int
    h: int
    p_alpha: Optional[float] = None
    q_upper: Optional[float] = None
    screened_mse: dict[str, float] = {}
    candidate_mse: dict[str, float] = {}
    selection_path: list[str] = []
    path_mse: list[float] = []
    ensemble_mse: Optional[float] = None

    @model_validator(mode="after")
    def _ordered(self) -> "FormationTrace":
        if not (self.D >= self.d >= self.s >= self.e >= self.h >= 1):
            raise ValueError(
                f"stage counts must satisfy D >= d >= s >= e >= h >= 1, got "
                f"{self.D}, {self.d}, {self.s}, {self.e}, {self.h}"
            )
        return self


class TraceRow(BaseModel):
    """One row of the run table: per-run stage counts and errors, as written to trace.csv."""
    dataset: str
    base: BaseKind
    run: int
    D: int
    d: int
    s: int
    e: int
    h: int
    erpx_mse: float
    base_mse: Optional[float] = None
    erpx_test_mse: Optional[float] = None
    base_test_mse: Optional[float] = None
