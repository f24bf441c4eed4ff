"""
Hierarchical merging of screened groups into candidate phalanxes.

For groups g_i and g_j the merge score is

    m_ij = c_ij / c̄_ij

where c_ij assesses one model fit on the union of their features and c̄_ij
is the MSE of the average of the two groups' existing prediction vectors.
m_ij < 1 means the features do better modeled together than as an ensemble,
so the pair with the smallest score is merged; merging stops once every
remaining pair scores >= 1.
"""
import logging
from dataclasses import dataclass
from typing import Optional

from ..core import Dataset, ensemble_predictions, mse
from ..exceptions import ContractViolation
from ..log import kv
from ..parallel import map_ordered
from ..regress import Assessment, AssessmentCache
from ..schemas import BaseRegressorSpec
from .assessor import SubsetAssessor, formation_assessor
from .grouping import Group, Grouping, Stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairScore:
    i: str
    j: str
    c_ij: float
    c_bar_ij: float
    m_ij: float


@dataclass(frozen=True)
class MergeStep:
    """One executed merge: `left` and `right` became `merged` (which keeps the smaller label)."""
    left: str
    right: str
    merged: str
    m_ij: float
    c_ij: float


@dataclass(frozen=True)
class MergeResult:
    grouping: Grouping
    steps: tuple[MergeStep, ...]
    # assessment of every candidate, keyed by its PX_ label
    assessments: dict[str, Assessment]


def merge_score(c_ij: float, c_bar_ij: float) -> float:
    """c_ij / c̄_ij, with 0/0 taken as 1 and x/0 as infinity."""
    if c_bar_ij == 0.0:
        return 1.0 if c_ij == 0.0 else float("inf")
    return c_ij / c_bar_ij


def _union(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(set(a) | set(b)))


def _score_pairs(pairs, members, assessed, data, assessor, threads) -> dict[tuple[str, str], tuple[PairScore, Assessment]]:
    def score(pair: tuple[str, str]) -> tuple[PairScore, Assessment]:
        a, b = pair
        union = assessor(data, _union(members[a], members[b]))
        averaged = ensemble_predictions([assessed[a].predictions, assessed[b].predictions])
        c_bar = mse(data.y, averaged.values)
        return PairScore(a, b, union.c, c_bar, merge_score(union.c, c_bar)), union

    return dict(zip(pairs, map_ordered(score, pairs, threads)))


def pair_scores(
    grouping: Grouping,
    data: Dataset,
    spec: BaseRegressorSpec,
    seed: int,
    *,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
    threads: int = 1,
) -> list[PairScore]:
    """Scores of every unordered pair of groups, ordered by label pair."""
    grouping.check_within(data.D)
    assessor = formation_assessor(spec, seed, assessor, cache)
    members = grouping.by_label()
    labels = sorted(members)
    assessed = dict(zip(labels, map_ordered(lambda label: assessor(data, members[label]), labels, threads)))
    pairs = [(a, b) for k, a in enumerate(labels) for b in labels[k + 1:]]
    scored = _score_pairs(pairs, members, assessed, data, assessor, threads)
    return [scored[pair][0] for pair in pairs]


def _candidates(members: dict[str, tuple[int, ...]], assessed: dict[str, Assessment]) -> tuple[Grouping, dict[str, Assessment]]:
    ordered = sorted(members, key=lambda label: members[label][0])
    grouping = Grouping(
        groups=tuple(Group(label=f"PX_{k + 1}", members=members[label]) for k, label in enumerate(ordered)),
        stage=Stage.CANDIDATE,
    )
    return grouping, {f"PX_{k + 1}": assessed[label] for k, label in enumerate(ordered)}


def hierarchical_merge(
    grouping: Grouping,
    data: Dataset,
    spec: BaseRegressorSpec,
    seed: int,
    *,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
    threads: int = 1,
) -> MergeResult:
    """
    Greedily merges the pair with the smallest m_ij while that score is below 1.

    Ties go to the lexicographically smallest (label, label) pair. A merged
    group keeps the smaller parent label and carries the union fit that was
    computed while scoring it; only pairs involving the new group are
    rescored. Candidates are relabeled PX_1..PX_e by smallest member feature.
    """
    if grouping.stage != Stage.SCREENED:
        raise ContractViolation(f"merging expects screened groups, got stage '{grouping.stage.value}'")
    if len(grouping) < 1:
        raise ContractViolation("merging needs at least one group")
    grouping.check_within(data.D)
    assessor = formation_assessor(spec, seed, assessor, cache)

    members = grouping.by_label()
    labels = sorted(members)
    assessed = dict(zip(labels, map_ordered(lambda label: assessor(data, members[label]), labels, threads)))
    pairs = [(a, b) for k, a in enumerate(labels) for b in labels[k + 1:]]
    scores = _score_pairs(pairs, members, assessed, data, assessor, threads)

    steps: list[MergeStep] = []
    while scores:
        (a, b), (best, union) = min(scores.items(), key=lambda item: (item[1][0].m_ij, item[0]))
        if not best.m_ij < 1.0:
            break
        # Step 1: replace the two parents by their union, reusing the union fit
        members[a] = _union(members[a], members.pop(b))
        assessed[a] = union
        del assessed[b]
        steps.append(MergeStep(left=a, right=b, merged=a, m_ij=best.m_ij, c_ij=best.c_ij))
        logger.debug(kv("merge", left=a, right=b, m=f"{best.m_ij:.6g}", size=len(members[a])))

        # Step 2: drop stale pairs and score the new group against the rest
        scores = {pair: value for pair, value in scores.items() if a not in pair and b not in pair}
        fresh = [tuple(sorted((a, other))) for other in sorted(members) if other != a]
        scores.update(_score_pairs(fresh, members, assessed, data, assessor, threads))

    candidates, candidate_assessments = _candidates(members, assessed)
    logger.info(kv("merged_groups", s=len(grouping), e=len(candidates), merges=len(steps)))
    return MergeResult(candidates, tuple(steps), candidate_assessments)


def merge_phalanxes(
    grouping: Grouping,
    data: Dataset,
    spec: BaseRegressorSpec,
    seed: int,
    **kwargs,
) -> Grouping:
    return hierarchical_merge(grouping, data, spec, seed, **kwargs).grouping
