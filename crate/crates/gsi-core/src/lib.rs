//! Low-rank matrix completion and group recommendation.
//!
//! The crate provides:
//!
//! - dense matrices with observed-entry projections and a from-scratch
//!   Jacobi SVD ([`matrix`], [`svd`]);
//! - the soft-impute solver for nuclear-norm-regularized completion with a
//!   warm-started regularization path ([`softimpute`]);
//! - rank-constrained matrix factorization fitted by alternating ridge
//!   regressions ([`als`]);
//! - group preference aggregation, matrix augmentation, the group
//!   soft-impute method, and its factorization baselines ([`group`]);
//! - dataset ingestion, KNN imputation, splits, and a synthetic generator
//!   ([`data`]);
//! - evaluation metrics and experiment tables ([`eval`]).
//!
//! All solver state is immutable after construction and every source of
//! randomness takes an explicit seed, so identical inputs give identical
//! outputs bit for bit.

// Dense kernels index several matrices with the same loop variable, and
// validation uses negated comparisons to catch NaN parameters.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod als;
pub mod data;
pub mod error;
pub mod eval;
pub mod group;
pub mod matrix;
mod rng;
pub mod softimpute;
pub mod svd;

pub use als::{
    als_fit, initial_item_factors, mf_objective, predict, AlsConfig, AlsFit, FactorPair,
};
pub use data::{
    generate_synthetic, knn_impute, load_ratings_csv, parse_ratings, read_snapshot,
    restrict_observed, subsample, train_test_split, write_snapshot, CsvSchema, RatingRecord,
    RatingsTable, SplitMask, SubsampleInfo, SubsampleRule, SyntheticConfig,
};
pub use error::{Error, Result};
pub use eval::{
    candidate_items, convergence_series, error_curve, group_prediction_aggregate,
    group_recommendation_experiment, group_reference, least_squares_line, precision_recall_f1,
    rank_recovery_experiment, train_test_error, CandidateMode, ConvergenceSeries, ErrorReport,
    GroupExperimentConfig, GroupMethod, GroupMetricRow, LineFit, MetricsAtK, RankCell, RankTable,
};
pub use group::{
    af, af_from_fit, aggregate_group, aggregate_group_with, augment, gsi_svd,
    sample_disjoint_groups, wbf, AggregationKind, AugmentedMatrix, Group, GroupAggregate,
    GsiResult, MeanDivisor,
};
pub use matrix::{project_unobserved, IndexSet, Matrix, RatingMatrix, RatingScale};
pub use softimpute::{
    completion_objective, estimate_contraction_rate, lambda_grid, random_init, soft_impute,
    soft_impute_path, soft_impute_step, ConvergenceTrace, SoftImputeConfig, SoftImputePath,
};
pub use svd::{
    nuclear_norm, numerical_rank, soft_threshold_svd, svd, SvdFactors, ThresholdedMatrix,
};
