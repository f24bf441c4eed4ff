"""
Feature groupings and the initial-grouping step.

A Grouping is a partition of (some of) the feature indices into labeled,
disjoint groups, tagged with the formation stage that produced it. Initial
groups come from one of three sources: one feature per group, an equivalence
on feature names, or average-linkage hierarchical clustering of the features
under the Jaccard (all-binary data) or 1 - |corr| dissimilarity.
"""
import re
from collections.abc import Sequence
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from ..core import Dataset, FeatureKind
from ..exceptions import ContractViolation


class Stage(str, Enum):
    INITIAL = "initial"
    SCREENED = "screened"
    CANDIDATE = "candidate"
    FINAL = "final"


class Group(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    members: tuple[int, ...]

    @field_validator("members")
    @classmethod
    def _canonical(cls, members: tuple[int, ...]) -> tuple[int, ...]:
        if not members:
            raise ValueError("a group needs at least one member")
        if min(members) < 0:
            raise ValueError("feature indices are nonnegative")
        return tuple(sorted(set(members)))


class Grouping(BaseModel):
    """Labeled, pairwise-disjoint feature groups at one formation stage."""
    model_config = ConfigDict(frozen=True)

    groups: tuple[Group, ...]
    stage: Stage

    @model_validator(mode="after")
    def _partition(self) -> "Grouping":
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ValueError("group labels must be unique")
        seen: set[int] = set()
        for g in self.groups:
            if seen.intersection(g.members):
                raise ValueError(f"group '{g.label}' overlaps another group")
            seen.update(g.members)
        return self

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.groups]

    @property
    def features(self) -> tuple[int, ...]:
        return tuple(sorted(i for g in self.groups for i in g.members))

    def by_label(self) -> dict[str, tuple[int, ...]]:
        return {g.label: g.members for g in self.groups}

    def check_within(self, n_features: int) -> None:
        if self.groups and max(self.features) >= n_features:
            raise ContractViolation(f"grouping refers to feature {max(self.features)} but the data has {n_features}")

    def relabeled(self, prefix: str, stage: Stage) -> "Grouping":
        """Same groups (in the current order) renamed prefix_1..prefix_k."""
        return Grouping(
            groups=tuple(Group(label=f"{prefix}_{k + 1}", members=g.members) for k, g in enumerate(self.groups)),
            stage=stage,
        )


def singleton_groups(data: Dataset) -> Grouping:
    """One group per feature, labeled by the feature name."""
    return Grouping(
        groups=tuple(Group(label=name, members=(j,)) for j, name in enumerate(data.feature_names)),
        stage=Stage.INITIAL,
    )


# ==========================================
# DISSIMILARITIES
# ==========================================

def _is_binary(x: np.ndarray) -> bool:
    return bool(np.all((x == 0) | (x == 1)))


def jaccard_dissimilarity(xi: np.ndarray, xj: np.ndarray) -> float:
    """1 - |both 1| / |either 1|; two all-zero vectors are at distance 1."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape:
        raise ContractViolation("vectors differ in length")
    if not (_is_binary(xi) and _is_binary(xj)):
        raise ContractViolation("Jaccard dissimilarity is defined for 0/1 vectors only")
    both = np.sum((xi == 1) & (xj == 1))
    either = np.sum((xi == 1) | (xj == 1))
    return 1.0 if either == 0 else float(1.0 - both / either)


def correlation_dissimilarity(xi: np.ndarray, xj: np.ndarray) -> float:
    """1 - |Pearson correlation|; 1 when either vector is constant."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != xj.shape or xi.shape[0] < 2:
        raise ContractViolation("need two vectors of equal length >= 2")
    ci = xi - xi.mean()
    cj = xj - xj.mean()
    denom = np.sqrt(np.sum(ci * ci) * np.sum(cj * cj))
    if denom == 0:
        return 1.0
    r = float(np.sum(ci * cj) / denom)
    return float(min(1.0, max(0.0, 1.0 - abs(r))))


def dissimilarity_matrix(X: np.ndarray, kinds: Sequence[FeatureKind]) -> np.ndarray:
    """
    Feature-by-feature dissimilarities, matching the pairwise functions above.

    Jaccard when every feature is binary; 1 - |corr| otherwise, including
    mixes of binary and continuous features.
    """
    X = np.asarray(X, dtype=float)
    if all(k == FeatureKind.BINARY for k in kinds):
        B = (X == 1).astype(float)
        both = B.T @ B
        count = B.sum(axis=0)
        either = count[:, None] + count[None, :] - both
        with np.errstate(divide="ignore", invalid="ignore"):
            dist = np.where(either > 0, 1.0 - both / either, 1.0)
    else:
        centered = X - X.mean(axis=0)
        norms = np.sqrt(np.sum(centered * centered, axis=0))
        constant = norms == 0
        safe = np.where(constant, 1.0, norms)
        corr = (centered.T @ centered) / np.outer(safe, safe)
        dist = np.clip(1.0 - np.abs(corr), 0.0, 1.0)
        dist[constant, :] = 1.0
        dist[:, constant] = 1.0
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return dist


# ==========================================
# INITIAL GROUPING
# ==========================================

def initial_groups_by_clustering(data: Dataset, d_target: int) -> Grouping:
    """Average-linkage agglomerative clustering of the features, cut at exactly `d_target` clusters."""
    if not 1 <= d_target <= data.D:
        raise ContractViolation(f"d_target must lie in [1, {data.D}], got {d_target}")
    if data.D == 1:
        return Grouping(groups=(Group(label="C1", members=(0,)),), stage=Stage.INITIAL)

    dist = dissimilarity_matrix(data.X, data.feature_kinds)
    tree = linkage(squareform(dist, checks=False), method="average")
    assignment = cut_tree(tree, n_clusters=d_target).reshape(-1)

    # number clusters by their first feature so labels do not depend on scipy's ids
    first_seen: dict[int, list[int]] = {}
    for j, cluster in enumerate(assignment):
        first_seen.setdefault(int(cluster), []).append(j)
    groups = tuple(
        Group(label=f"C{k + 1}", members=tuple(members))
        for k, members in enumerate(first_seen.values())
    )
    return Grouping(groups=groups, stage=Stage.INITIAL)


class NameSchema(BaseModel):
    """
    Deterministic feature-name -> group-label rule.

    `strip` (default) deletes every match of `pattern` from the name, so with
    the default digit pattern AR_01_AR and AR_02_AR both map to AR__AR.
    `capture` uses the first capture group of `pattern` (or the whole match)
    as the label. A name whose label comes out empty, or that does not match
    in `capture` mode, keeps its own name and ends up a singleton.
    """
    model_config = ConfigDict(frozen=True)

    pattern: str = r"\d+"
    mode: Literal["strip", "capture"] = "strip"

    def label(self, name: str) -> str:
        if self.mode == "strip":
            label = re.sub(self.pattern, "", name)
            return label or name
        match = re.search(self.pattern, name)
        if not match:
            return name
        return (match.group(1) if match.groups() else match.group(0)) or name


def initial_groups_by_name(names: Sequence[str], schema: NameSchema = NameSchema()) -> Grouping:
    """Groups features whose names map to the same label; groups appear in first-occurrence order."""
    classes: dict[str, list[int]] = {}
    for j, name in enumerate(names):
        classes.setdefault(schema.label(name), []).append(j)
    return Grouping(
        groups=tuple(Group(label=label, members=tuple(members)) for label, members in classes.items()),
        stage=Stage.INITIAL,
    )
