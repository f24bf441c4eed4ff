"""
The subset-assessment hook used by every formation step.

Formation only needs one capability from a base regressor: given a dataset
and a feature subset, return (c, y_hat). Production runs use
RegressorAssessor, which dispatches to the cached Lasso/forest assessment;
tests plug in scripted assessors with known prediction vectors.
"""
from dataclasses import dataclass, field
from typing import Optional, Protocol

from ..core import Dataset
from ..regress import Assessment, AssessmentCache, assess
from ..schemas import BaseRegressorSpec
from ..utils import derive_seed


class SubsetAssessor(Protocol):
    def __call__(self, data: Dataset, subset: tuple[int, ...]) -> Assessment: ...


@dataclass(frozen=True)
class RegressorAssessor:
    spec: BaseRegressorSpec
    seed: int
    cache: AssessmentCache = field(default_factory=AssessmentCache)

    def __call__(self, data: Dataset, subset: tuple[int, ...]) -> Assessment:
        return assess(data, subset, self.spec, self.seed, cache=self.cache)


def formation_assessor(
    spec: BaseRegressorSpec,
    seed: int,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
) -> SubsetAssessor:
    """
    The assessor a formation step should use.

    All steps of one run derive the same fitting seed from the root seed, so
    a subset assessed in screening is a cache hit when merging asks again.
    Without a `cache` each call starts an empty one, which lives as long as
    the returned assessor.
    """
    if assessor is not None:
        return assessor
    return RegressorAssessor(spec, derive_seed(seed, "fits"), AssessmentCache() if cache is None else cache)
