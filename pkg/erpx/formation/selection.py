"""
Screening of candidate phalanxes by forward selection.

The candidates are ordered greedily: first the strongest one, then at every
step the candidate whose addition gives the lowest MSE of the averaged
prediction vectors. The final phalanxes are the shortest prefix of that path
with the minimum ensembled MSE.
"""
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import Dataset, PredictionVector, ensemble_predictions, mse
from ..exceptions import ContractViolation
from ..regress import Assessment, AssessmentCache
from ..schemas import BaseRegressorSpec
from .assessor import SubsetAssessor, formation_assessor
from .grouping import Group, Grouping, Stage


def forward_selection_path(predictions: Mapping[str, PredictionVector], y: np.ndarray) -> tuple[list[str], list[float]]:
    """Greedy order over all candidates and the ensembled MSE of each prefix; ties go to the smaller label."""
    if not predictions:
        raise ContractViolation("forward selection needs at least one candidate")
    remaining = sorted(predictions)
    order: list[str] = []
    path_mse: list[float] = []
    while remaining:
        def prefix_mse(label: str) -> float:
            chosen = [predictions[k] for k in order + [label]]
            return mse(y, ensemble_predictions(chosen).values)

        scored = [(prefix_mse(label), label) for label in remaining]
        best_mse, best = min(scored)
        order.append(best)
        path_mse.append(best_mse)
        remaining.remove(best)
    return order, path_mse


@dataclass(frozen=True)
class SelectionResult:
    grouping: Grouping
    order: tuple[str, ...]
    path_mse: tuple[float, ...]

    @property
    def ensemble_mse(self) -> float:
        return self.path_mse[len(self.grouping) - 1]


def select_phalanxes(
    candidates: Grouping,
    data: Dataset,
    spec: BaseRegressorSpec,
    seed: int,
    *,
    assessments: Optional[Mapping[str, Assessment]] = None,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
) -> SelectionResult:
    """
    Forward selection over the candidates' formation-quality prediction vectors.

    `assessments` (from merging) supplies the vectors directly; candidates
    missing from it are assessed, which is a cache hit for any subset seen
    earlier in the run.
    """
    if candidates.stage != Stage.CANDIDATE:
        raise ContractViolation(f"phalanx screening expects candidates, got stage '{candidates.stage.value}'")
    if len(candidates) < 1:
        raise ContractViolation("phalanx screening needs at least one candidate")
    candidates.check_within(data.D)
    members = candidates.by_label()
    known = dict(assessments or {})
    missing = [label for label in members if label not in known]
    if missing:
        assessor = formation_assessor(spec, seed, assessor, cache)
        known.update({label: assessor(data, members[label]) for label in missing})

    order, path_mse = forward_selection_path({label: known[label].predictions for label in members}, data.y)
    h = int(np.argmin(path_mse)) + 1
    final = Grouping(
        groups=tuple(Group(label=label, members=members[label]) for label in order[:h]),
        stage=Stage.FINAL,
    )
    return SelectionResult(final, tuple(order), tuple(path_mse))


def screen_phalanxes(candidates: Grouping, data: Dataset, spec: BaseRegressorSpec, seed: int, **kwargs) -> Grouping:
    return select_phalanxes(candidates, data, spec, seed, **kwargs).grouping
