"""
The ERPX formation pipeline.

    D features
      -> d initial groups       (singletons | names | clustering)
      -> s screened groups      (strength and improvement permutation tests)
      -> e candidate phalanxes  (hierarchical merging on m_ij)
      -> h final phalanxes      (forward selection)

then one final-quality base model per final phalanx; predictions of the
ensemble are the average of the h models' predictions.
"""
import logging
from dataclasses import dataclass
from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import GroupingMode, ImprovementRule, RunConfig
from ..core import Dataset, PredictionVector, Provenance, ensemble_predictions, mse, require_trainable
from ..exceptions import ContractViolation
from ..log import kv
from ..regress import AssessmentCache, FittedModel, assess, fit_model, oob_predictions, predict, repeated_cv_mse
from ..schemas import BaseKind, BaseRegressorSpec, FormationTrace
from ..utils import derive_seed
from .assessor import SubsetAssessor, formation_assessor
from .grouping import (
    Grouping, NameSchema, Stage, initial_groups_by_clustering, initial_groups_by_name, singleton_groups,
)
from .merging import hierarchical_merge
from .screening import screen_groups
from .selection import select_phalanxes

logger = logging.getLogger(__name__)


class FormationConfig(BaseModel):
    """Everything `form_erpx` needs besides the data."""
    model_config = ConfigDict(frozen=True)

    spec: BaseRegressorSpec
    alpha: Annotated[float, Field(gt=0, lt=1)] = 0.05
    grouping: GroupingMode = GroupingMode.NONE
    d_target: Optional[Annotated[int, Field(ge=1)]] = None
    name_schema: NameSchema = NameSchema()
    null_permutations: Annotated[int, Field(ge=1)] = 1
    improvement_rule: ImprovementRule = ImprovementRule.EXISTS
    quantile_method: str = "linear"
    seed: Annotated[int, Field(ge=0, lt=2**64)] = 0
    threads: Annotated[int, Field(ge=1)] = 1

    @model_validator(mode="after")
    def _cluster_target(self) -> "FormationConfig":
        if self.grouping == GroupingMode.CLUSTER and self.d_target is None:
            raise ValueError("cluster grouping needs d_target")
        return self

    @classmethod
    def from_settings(cls, config: RunConfig, seed: Optional[int] = None) -> "FormationConfig":
        return cls(
            spec=config.regressor_spec(config.base),
            alpha=config.alpha,
            grouping=config.grouping_mode,
            d_target=config.grouping_target,
            name_schema=NameSchema(pattern=config.name_pattern),
            null_permutations=config.null_permutations,
            improvement_rule=config.improvement_rule,
            quantile_method=config.quantile_method,
            seed=config.seed if seed is None else seed,
            threads=config.threads,
        )


@dataclass(frozen=True)
class ErpxModel:
    final_phalanxes: Grouping
    fitted: tuple[FittedModel, ...]
    spec: BaseRegressorSpec
    trace: FormationTrace
    feature_names: tuple[str, ...]
    seed: int

    @property
    def h(self) -> int:
        return len(self.fitted)


def initial_grouping(data: Dataset, config: FormationConfig) -> Grouping:
    if config.grouping == GroupingMode.NAME:
        return initial_groups_by_name(data.feature_names, config.name_schema)
    if config.grouping == GroupingMode.CLUSTER:
        return initial_groups_by_clustering(data, config.d_target)
    return singleton_groups(data)


def form_erpx(
    data: Dataset,
    config: FormationConfig,
    *,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
) -> ErpxModel:
    """Runs all four formation steps and refits every final phalanx on all rows."""
    require_trainable(data)
    spec, seed, threads = config.spec, config.seed, config.threads
    assessor = formation_assessor(spec, seed, assessor, cache)

    # Step 1: initial groups
    initial = initial_grouping(data, config)
    d = len(initial)
    logger.info(kv("initial_groups", D=data.D, d=d, mode=config.grouping.value))

    # Step 2: screening (nothing to test against with a single group)
    p_alpha = q_upper = None
    if d == 1:
        screened = initial.relabeled("G", Stage.SCREENED)
    else:
        screened, thresholds = screen_groups(
            initial, data, spec, config.alpha, seed,
            assessor=assessor, null_permutations=config.null_permutations,
            improvement_rule=config.improvement_rule, quantile_method=config.quantile_method,
            threads=threads,
        )
        p_alpha, q_upper = thresholds.p_alpha, thresholds.q_upper
    screened_mse = {g.label: assessor(data, g.members).c for g in screened.groups}

    # Step 3: merging
    merged = hierarchical_merge(screened, data, spec, seed, assessor=assessor, threads=threads)

    # Step 4: forward selection
    selection = select_phalanxes(merged.grouping, data, spec, seed, assessments=merged.assessments)
    final = selection.grouping

    fitted = tuple(
        fit_model(data, g.members, spec, derive_seed(seed, "final", g.members), threads=threads)
        for g in final.groups
    )
    if spec.kind == BaseKind.FOREST:
        ensemble_mse = mse(data.y, ensemble_predictions([oob_predictions(m, data) for m in fitted]).values)
    else:
        ensemble_mse = selection.ensemble_mse

    trace = FormationTrace(
        D=data.D, d=d, s=len(screened), e=len(merged.grouping), h=len(final),
        p_alpha=p_alpha, q_upper=q_upper,
        screened_mse=screened_mse,
        candidate_mse={label: a.c for label, a in merged.assessments.items()},
        selection_path=list(selection.order), path_mse=list(selection.path_mse),
        ensemble_mse=ensemble_mse,
    )
    logger.info(kv("formed", D=trace.D, d=trace.d, s=trace.s, e=trace.e, h=trace.h, mse=f"{ensemble_mse:.6g}"))
    return ErpxModel(final, fitted, spec, trace, data.feature_names, seed)


def predict_erpx(model: ErpxModel, Xnew: np.ndarray) -> np.ndarray:
    """Average of the final phalanx models' predictions for the rows of Xnew."""
    Xnew = np.asarray(Xnew, dtype=float)
    if Xnew.ndim != 2:
        raise ContractViolation("Xnew must be a 2-d matrix")
    if Xnew.shape[1] < len(model.feature_names):
        raise ContractViolation(f"Xnew has {Xnew.shape[1]} columns, the model was formed on {len(model.feature_names)}")
    if Xnew.shape[0] == 0:
        return np.zeros(0)
    per_model = [PredictionVector(predict(m, Xnew), Provenance.DIRECT) for m in model.fitted]
    return np.array(ensemble_predictions(per_model).values)


# ==========================================
# REPORTED METRICS
# ==========================================

def ensemble_assessment(
    model: ErpxModel,
    data: Dataset,
    seed: int,
    repetitions: int = 20,
    *,
    cache: Optional[AssessmentCache] = None,
) -> float:
    """
    Training assessment of the ensemble.

    Lasso: the MSE of the average of the phalanxes' K-fold CV predictions,
    averaged over `repetitions` fold assignments. Forest: the MSE of the
    averaged OOB predictions of the final forests.
    """
    if repetitions < 1:
        raise ContractViolation("repetitions must be >= 1")
    members = [g.members for g in model.final_phalanxes.groups]
    if model.spec.kind == BaseKind.FOREST:
        preds = [oob_predictions(m, data) for m in model.fitted]
        return mse(data.y, ensemble_predictions(preds).values)
    values = []
    for r in range(repetitions):
        rep_seed = derive_seed(seed, "repetition", r)
        preds = [assess(data, subset, model.spec, rep_seed, cache=cache).predictions for subset in members]
        values.append(mse(data.y, ensemble_predictions(preds).values))
    return float(np.mean(values))


def base_assessment(
    data: Dataset,
    spec: BaseRegressorSpec,
    seed: int,
    repetitions: int = 20,
    *,
    cache: Optional[AssessmentCache] = None,
    threads: int = 1,
) -> tuple[float, FittedModel]:
    """The bare base model on all features: its reported training metric and its final-quality fit."""
    everything = tuple(range(data.D))
    model = fit_model(data, everything, spec, derive_seed(seed, "final", everything), threads=threads)
    if spec.kind == BaseKind.FOREST:
        return mse(data.y, oob_predictions(model, data).values), model
    return repeated_cv_mse(data, everything, spec, seed, repetitions, cache=cache), model
