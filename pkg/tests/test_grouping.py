"""
Tests for dissimilarities and the three initial-grouping sources.
"""
import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from erpx.core import Dataset, FeatureKind
from erpx.exceptions import ContractViolation
from erpx.formation import (
    Group, Grouping, NameSchema, Stage, correlation_dissimilarity, dissimilarity_matrix,
    initial_groups_by_clustering, initial_groups_by_name, jaccard_dissimilarity, singleton_groups,
)

# ==========================================
# DISSIMILARITIES
# ==========================================

@pytest.mark.parametrize("xi, xj, expected", [
    ((1, 1, 0), (1, 0, 1), 2 / 3),
    ((1, 0, 1), (1, 0, 1), 0.0),
    ((0, 0), (0, 0), 1.0),
    ((1, 0), (0, 1), 1.0),
])
def test_jaccard(xi, xj, expected):
    assert jaccard_dissimilarity(np.array(xi), np.array(xj)) == pytest.approx(expected)


def test_jaccard_rejects_non_binary():
    with pytest.raises(ContractViolation):
        jaccard_dissimilarity(np.array([0.0, 2.0]), np.array([1.0, 0.0]))


@pytest.mark.parametrize("xi, xj, expected", [
    ((1, 2, 3), (1, 3, 2), 0.5),
    ((1, 2, 3), (5, 7, 9), 0.0),
    ((1, 2, 3), (-1, -2, -3), 0.0),
    ((1, 2, 3), (4, 4, 4), 1.0),
])
def test_correlation(xi, xj, expected):
    assert correlation_dissimilarity(np.array(xi, float), np.array(xj, float)) == pytest.approx(expected)


def test_matrix_matches_pairwise_functions(binary_data, linear_data):
    for data, pairwise in ((binary_data, jaccard_dissimilarity), (linear_data, correlation_dissimilarity)):
        dist = dissimilarity_matrix(data.X, data.feature_kinds)
        assert dist.shape == (data.D, data.D)
        np.testing.assert_array_equal(dist, dist.T)
        for i, j in itertools.combinations(range(data.D), 2):
            assert dist[i, j] == pytest.approx(pairwise(data.X[:, i], data.X[:, j]), abs=1e-12)


def test_mixed_kinds_use_correlation():
    X = np.array([[0.0, 0.1], [1.0, 0.9], [0.0, 0.2], [1.0, 1.1]])
    kinds = (FeatureKind.BINARY, FeatureKind.CONTINUOUS)
    dist = dissimilarity_matrix(X, kinds)
    assert dist[0, 1] == pytest.approx(correlation_dissimilarity(X[:, 0], X[:, 1]))


# ==========================================
# GROUPINGS
# ==========================================

def test_groupings_must_be_disjoint():
    with pytest.raises(ValidationError):
        Grouping(groups=(Group(label="a", members=(0, 1)), Group(label="b", members=(1,))), stage=Stage.INITIAL)
    with pytest.raises(ValidationError):
        Grouping(groups=(Group(label="a", members=(0,)), Group(label="a", members=(1,))), stage=Stage.INITIAL)
    with pytest.raises(ValidationError):
        Group(label="empty", members=())


def test_singletons_follow_feature_names(linear_data):
    grouping = singleton_groups(linear_data)
    assert grouping.labels == list(linear_data.feature_names)
    assert grouping.features == tuple(range(linear_data.D))


def test_clustering_recovers_correlated_pairs(paired_data):
    grouping = initial_groups_by_clustering(paired_data, 2)
    assert sorted(g.members for g in grouping.groups) == [(0, 1), (2, 3)]
    assert grouping.labels == ["C1", "C2"]
    assert grouping.stage == Stage.INITIAL


@pytest.mark.parametrize("d", [1, 3, 8])
def test_clustering_cuts_at_exactly_d(linear_data, d):
    grouping = initial_groups_by_clustering(linear_data, d)
    assert len(grouping) == d
    assert grouping.features == tuple(range(linear_data.D))


def test_clustering_extremes(linear_data):
    assert [g.members for g in initial_groups_by_clustering(linear_data, 8).groups] == [(j,) for j in range(8)]
    assert initial_groups_by_clustering(linear_data, 1).groups[0].members == tuple(range(8))
    with pytest.raises(ContractViolation):
        initial_groups_by_clustering(linear_data, 9)


def test_clustering_binary_features(binary_data):
    grouping = initial_groups_by_clustering(binary_data, 3)
    assert len(grouping) == 3
    assert grouping.features == tuple(range(binary_data.D))


def test_clustering_one_feature():
    data = Dataset(y=[1.0, 2.0, 3.0], X=[[1.0], [0.0], [2.0]])
    assert initial_groups_by_clustering(data, 1).by_label() == {"C1": (0,)}


def test_name_grouping_strips_digits():
    names = ["AR_01_AR", "AR_02_AR", "MOM_01", "AR_07_AR", "LogP"]
    grouping = initial_groups_by_name(names)
    assert grouping.by_label() == {"AR__AR": (0, 1, 3), "MOM_": (2,), "LogP": (4,)}


def test_name_grouping_distinct_labels_gives_singletons():
    assert len(initial_groups_by_name(["a", "b", "c"])) == 3


def test_name_grouping_capture_mode():
    schema = NameSchema(pattern=r"^([A-Za-z]+)_", mode="capture")
    grouping = initial_groups_by_name(["AR_1", "AR_2", "BCUT_1", "plain"], schema)
    assert grouping.by_label() == {"AR": (0, 1), "BCUT": (2,), "plain": (3,)}


def test_name_that_strips_to_nothing_keeps_its_name():
    assert NameSchema().label("123") == "123"


def test_relabeled_keeps_order():
    grouping = initial_groups_by_name(["b1", "a1", "b2"]).relabeled("G", Stage.SCREENED)
    assert grouping.by_label() == {"G_1": (0, 2), "G_2": (1,)}
    assert grouping.stage == Stage.SCREENED
