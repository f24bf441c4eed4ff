from .assessor import RegressorAssessor, SubsetAssessor, formation_assessor
from .grouping import (
    Group, Grouping, NameSchema, Stage, correlation_dissimilarity, dissimilarity_matrix,
    initial_groups_by_clustering, initial_groups_by_name, jaccard_dissimilarity, singleton_groups,
)
from .merging import MergeResult, MergeStep, PairScore, hierarchical_merge, merge_phalanxes, merge_score, pair_scores
from .pipeline import (
    ErpxModel, FormationConfig, base_assessment, ensemble_assessment, form_erpx, initial_grouping, predict_erpx,
)
from .screening import ScreeningThresholds, screen_groups
from .selection import SelectionResult, forward_selection_path, screen_phalanxes, select_phalanxes
