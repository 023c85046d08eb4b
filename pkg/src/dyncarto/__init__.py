"""Difficulty splits for classification datasets from training-dynamics logs."""

from .baselines import BaselineSelection, PercentileRule, aum_ambiguous, datamaps_ambiguous, percentile
from .features import (
    FeatureVector,
    ScaledFeatureMatrix,
    SettingDynamics,
    aum,
    build_feature_vectors,
    confidence,
    correctness,
    standard_scale,
    variability,
)
from .gmm import (
    DIFFICULTY_ORDER,
    DifficultyAssignment,
    EmptyClusterError,
    GmmModel,
    assign_clusters,
    fit_gmm,
    rank_difficulty,
    responsibilities,
)
from .heuristics import (
    HeuristicProfile,
    LexiconSet,
    TokenizedPair,
    antonym_score,
    contains_negation,
    length_mismatch,
    misspelled_ratio,
    profile_dataset,
    tokenize,
    word_overlap,
)
from .log import (
    DynamicsLog,
    EpochLogits,
    InstanceMeta,
    LabelSpace,
    LogValidationError,
    load_log,
    parse_log,
    serialize_log,
    softmax,
    write_log,
)
from .report import SplitReport, aggregate_heuristics, build_report, build_splits, class_counts, split_accuracy
from .stats import (
    SignificanceReport,
    UTestResult,
    bonferroni,
    compare_splits,
    mann_whitney_u,
    significance_code,
)

__version__ = "0.1.0"
