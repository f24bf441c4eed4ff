"""
Screening of initial groups.

A group g_i survives when it passes two permutation tests:

  strength:     c_i <= p~_alpha, the alpha quantile of the groups' c~_i
                on a permuted response;
  improvement:  for some (or, under the `forall` rule, every) other
                group g_j, c_j - c_ij >= q~, the 1 - alpha/(d-1)
                quantile of the permuted-response differences
                c~_i - c~_ij over all ordered pairs.

All c_i and c_ij are computed on the true response and again on each
permuted response; every fit goes through the assessor, so merging later
reuses the true-response prediction vectors without refitting.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import ImprovementRule
from ..core import Dataset, empirical_quantile, permute_response
from ..exceptions import ContractViolation
from ..log import kv
from ..parallel import map_ordered
from ..regress import AssessmentCache
from ..schemas import BaseRegressorSpec
from ..utils import derive_seed
from .assessor import SubsetAssessor, formation_assessor
from .grouping import Group, Grouping, Stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScreeningThresholds:
    """Null-distribution thresholds of one screening run, with the values they were computed from."""
    p_alpha: float
    q_upper: float
    alpha: float
    null_c: np.ndarray
    null_diffs: np.ndarray
    c: dict[str, float]
    survivors: tuple[str, ...]
    fallback: bool = False


def _group_statistics(data, members, assessor, threads) -> tuple[np.ndarray, np.ndarray]:
    """c_i for every group and the symmetric matrix of c_ij (NaN on the diagonal)."""
    d = len(members)
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    subsets = list(members) + [tuple(sorted(set(members[i]) | set(members[j]))) for i, j in pairs]
    values = map_ordered(lambda subset: assessor(data, subset).c, subsets, threads)
    c = np.asarray(values[:d], dtype=float)
    c_pair = np.full((d, d), np.nan)
    for k, (i, j) in enumerate(pairs):
        c_pair[i, j] = c_pair[j, i] = values[d + k]
    return c, c_pair


def screen_groups(
    grouping: Grouping,
    data: Dataset,
    spec: BaseRegressorSpec,
    alpha: float,
    seed: int,
    *,
    assessor: Optional[SubsetAssessor] = None,
    cache: Optional[AssessmentCache] = None,
    null_permutations: int = 1,
    improvement_rule: ImprovementRule = ImprovementRule.EXISTS,
    quantile_method: str = "linear",
    threads: int = 1,
) -> tuple[Grouping, ScreeningThresholds]:
    """
    Screens initial groups with the strength and combining-improvement tests.

    Survivors keep their original order and are relabeled G_1..G_s. If no
    group survives, the group with the smallest c_i is kept and a warning is
    logged.
    """
    if grouping.stage != Stage.INITIAL:
        raise ContractViolation(f"screen_groups expects initial groups, got stage '{grouping.stage.value}'")
    d = len(grouping)
    if d < 2:
        raise ContractViolation("screening needs at least two initial groups")
    if not 0.0 < alpha < 1.0:
        raise ContractViolation(f"alpha must lie in (0, 1), got {alpha}")
    if null_permutations < 1:
        raise ContractViolation("null_permutations must be >= 1")
    grouping.check_within(data.D)
    assessor = formation_assessor(spec, seed, assessor, cache)
    members = [g.members for g in grouping.groups]
    labels = grouping.labels

    # Step 1: strengths and pairwise strengths on the observed response
    c, c_pair = _group_statistics(data, members, assessor, threads)

    # Step 2: the same statistics on permuted responses, pooled
    off_diagonal = ~np.eye(d, dtype=bool)
    null_c, null_diffs = [], []
    for r in range(null_permutations):
        y_perm = permute_response(data.y, derive_seed(seed, "permutation", r))
        permuted = data.with_response(y_perm, name=f"{data.name}~perm{r}")
        c_null, c_pair_null = _group_statistics(permuted, members, assessor, threads)
        null_c.append(c_null)
        null_diffs.append((c_null[:, None] - c_pair_null)[off_diagonal])
    null_c = np.concatenate(null_c)
    null_diffs = np.concatenate(null_diffs)

    # Step 3: thresholds and the two tests
    p_alpha = empirical_quantile(null_c, alpha, quantile_method)
    q_upper = empirical_quantile(null_diffs, 1.0 - alpha / (d - 1), quantile_method)
    strong = c <= p_alpha
    # improvement[i, j] = c_j - c_ij: what adding g_i does for g_j
    improves = (c[None, :] - c_pair) >= q_upper
    if improvement_rule == ImprovementRule.EXISTS:
        np.fill_diagonal(improves, False)
        helpful = improves.any(axis=1)
    else:
        np.fill_diagonal(improves, True)
        helpful = improves.all(axis=1)
    keep = np.flatnonzero(strong & helpful)

    fallback = keep.size == 0
    if fallback:
        best = min(range(d), key=lambda i: (c[i], labels[i]))
        keep = np.array([best])
        logger.warning(kv("screening_fallback", stage="initial", kept=labels[best], c=f"{c[best]:.6g}"))

    survivors = tuple(labels[i] for i in keep)
    screened = Grouping(
        groups=tuple(Group(label=f"G_{k + 1}", members=members[i]) for k, i in enumerate(keep)),
        stage=Stage.SCREENED,
    )
    logger.info(kv("screened_groups", d=d, s=len(screened), p_alpha=f"{p_alpha:.6g}", q_upper=f"{q_upper:.6g}"))
    thresholds = ScreeningThresholds(
        p_alpha=p_alpha, q_upper=q_upper, alpha=alpha,
        null_c=null_c, null_diffs=null_diffs,
        c={labels[i]: float(c[i]) for i in range(d)},
        survivors=survivors, fallback=fallback,
    )
    return screened, thresholds
