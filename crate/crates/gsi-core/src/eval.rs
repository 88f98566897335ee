//! Metrics and experiment tables: train/test error, group-level
//! precision/recall/F1 at a list size k, rank-recovery tables,
//! error-versus-nuclear-norm curves, and convergence plot data.

use crate::als::{als_fit, predict, AlsConfig};
use crate::data::SplitMask;
use crate::error::{Error, Result};
use crate::group::{aggregate_group, augment, AggregationKind, Group};
use crate::matrix::{Matrix, RatingMatrix};
use crate::softimpute::{
    random_init, soft_impute, ConvergenceTrace, SoftImputeConfig, SoftImputePath,
};
use crate::svd::{numerical_rank, svd, ThresholdedMatrix};

/// Errors of one completed matrix against the reference, on one split.
#[derive(Clone, Debug)]
pub struct ErrorReport {
    pub train_mse: f64,
    /// Absent when the split has no test entries.
    pub test_mse: Option<f64>,
    pub nuclear_norm: f64,
    pub lambda: f64,
    pub rank: usize,
}

/// Mean squared deviation between `truth` and the completion over the train
/// and test masks.
pub fn train_test_error(
    truth: &Matrix,
    z: &ThresholdedMatrix,
    split: &SplitMask,
    lambda: f64,
) -> ErrorReport {
    assert_eq!(truth.dim(), z.z.dim(), "shape mismatch in train_test_error");
    let mse_over = |omega: &crate::matrix::IndexSet| -> Option<f64> {
        if omega.is_empty() {
            return None;
        }
        let mut acc = 0.0;
        for (i, j) in omega.iter() {
            let d = truth.get(i, j) - z.z.get(i, j);
            acc += d * d;
        }
        Some(acc / omega.len() as f64)
    };
    ErrorReport {
        train_mse: mse_over(&split.omega_train).unwrap_or(0.0),
        test_mse: mse_over(&split.omega_test),
        nuclear_norm: z.nuclear_norm,
        lambda,
        rank: z.rank,
    }
}

/// Mean of the member rows of a complete reference matrix; the divisor is
/// the group size.
pub fn group_reference(truth: &Matrix, g: &Group) -> Vec<f64> {
    mean_member_rows(truth, g)
}

/// Mean of the member rows of a completed matrix. For the group completion
/// method the appended-row prediction is used directly instead; the caller
/// picks per experiment.
pub fn group_prediction_aggregate(z: &Matrix, g: &Group) -> Vec<f64> {
    mean_member_rows(z, g)
}

fn mean_member_rows(matrix: &Matrix, g: &Group) -> Vec<f64> {
    let n = matrix.cols();
    let mut out = vec![0.0; n];
    for &u in g.members() {
        for (acc, v) in out.iter_mut().zip(matrix.row(u)) {
            *acc += v;
        }
    }
    let inv = 1.0 / g.len() as f64;
    out.iter_mut().for_each(|v| *v *= inv);
    out
}

/// Top-k retrieval quality for one (method, group) pair.
#[derive(Clone, Debug)]
pub struct MetricsAtK {
    pub precision: f64,
    /// Absent when no item is relevant.
    pub recall: Option<f64>,
    pub f1: f64,
    pub k: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_count: usize,
    pub group_id: String,
    pub method: String,
}

impl MetricsAtK {
    pub fn with_labels(mut self, method: impl Into<String>, group_id: impl Into<String>) -> Self {
        self.method = method.into();
        self.group_id = group_id.into();
        self
    }
}

/// Compare a predicted score vector against a reference rating vector.
///
/// The recommendation list is the top k of `predicted` over the candidate
/// set, ties broken by ascending item index. An item is relevant when its
/// reference rating reaches `tau`.
pub fn precision_recall_f1(
    reference: &[f64],
    predicted: &[f64],
    k: usize,
    tau: f64,
    candidates: &[usize],
) -> Result<MetricsAtK> {
    let n = reference.len();
    if predicted.len() != n {
        return Err(Error::Config(format!(
            "reference has {n} items but predictions have {}",
            predicted.len()
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Config("candidate set is empty".into()));
    }
    let mut cand: Vec<usize> = candidates.to_vec();
    cand.sort_unstable();
    cand.dedup();
    if let Some(&bad) = cand.iter().find(|&&j| j >= n) {
        return Err(Error::Config(format!(
            "candidate item {bad} out of range for {n} items"
        )));
    }
    if k == 0 || k > cand.len() {
        return Err(Error::Config(format!(
            "list size k={k} must lie in 1..={}",
            cand.len()
        )));
    }
    if cand.iter().any(|&j| !predicted[j].is_finite()) {
        return Err(Error::Config(
            "predictions contain non-finite scores".into(),
        ));
    }

    let mut ranked = cand.clone();
    ranked.sort_by(|&a, &b| {
        predicted[b]
            .partial_cmp(&predicted[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let recommended = &ranked[..k];

    let relevant_total = (0..n).filter(|&j| reference[j] >= tau).count();
    let tp = recommended.iter().filter(|&&j| reference[j] >= tau).count();
    let fp = k - tp;
    let fn_count = relevant_total - tp;

    let precision = tp as f64 / k as f64;
    let recall = if relevant_total == 0 {
        None
    } else {
        Some(tp as f64 / relevant_total as f64)
    };
    let f1 = match recall {
        Some(r) if precision + r > 0.0 => 2.0 * precision * r / (precision + r),
        _ => 0.0,
    };
    Ok(MetricsAtK {
        precision,
        recall,
        f1,
        k,
        tp,
        fp,
        fn_count,
        group_id: String::new(),
        method: String::new(),
    })
}

/// The group recommenders an experiment can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupMethod {
    Gsi,
    Wbf,
    Af(AggregationKind),
}

impl GroupMethod {
    pub fn name(&self) -> String {
        match self {
            GroupMethod::Gsi => "gsi".into(),
            GroupMethod::Wbf => "wbf".into(),
            GroupMethod::Af(kind) => format!("af-{}", kind.name()),
        }
    }
}

/// One recovered-rank measurement.
#[derive(Clone, Debug)]
pub struct RankCell {
    pub dataset: String,
    pub method: String,
    pub lambda: f64,
    /// Absent when the method failed on this cell.
    pub rank: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct RankTable {
    pub cells: Vec<RankCell>,
}

/// Run every (dataset, method, lambda) cell and record the rank of the
/// completed or predicted matrix at the configured rank tolerance. The
/// lambda of the cell replaces the method's own regularizer; cells that
/// error are recorded as absent.
pub fn rank_recovery_experiment(
    datasets: &[(String, RatingMatrix, Group)],
    methods: &[GroupMethod],
    lambdas: &[f64],
    si_config: &SoftImputeConfig,
    als_config: &AlsConfig,
) -> Result<RankTable> {
    if methods.is_empty() {
        return Err(Error::Config(
            "rank experiment needs at least one method".into(),
        ));
    }
    if lambdas.is_empty() {
        return Err(Error::Config(
            "rank experiment needs at least one lambda".into(),
        ));
    }
    let mut table = RankTable::default();
    for (name, matrix, group) in datasets {
        let augmented = aggregate_group(matrix, group).map(|agg| augment(matrix, &agg))?;
        for method in methods {
            // AF fits the base matrix once per lambda regardless of the
            // aggregation kind, so the rank does not depend on it.
            for &lambda in lambdas {
                let rank = rank_cell(
                    matrix,
                    &augmented.extended,
                    *method,
                    lambda,
                    si_config,
                    als_config,
                );
                table.cells.push(RankCell {
                    dataset: name.clone(),
                    method: method.name(),
                    lambda,
                    rank: rank.ok(),
                });
            }
        }
    }
    Ok(table)
}

fn rank_cell(
    base: &RatingMatrix,
    extended: &RatingMatrix,
    method: GroupMethod,
    lambda: f64,
    si_config: &SoftImputeConfig,
    als_config: &AlsConfig,
) -> Result<usize> {
    match method {
        GroupMethod::Gsi => {
            let z0 = random_init(extended.m(), extended.n(), si_config.seed);
            let (solution, _) = soft_impute(extended, lambda, &z0, si_config)?;
            Ok(numerical_rank(
                &solution.factors.sigma,
                si_config.rank_tolerance,
            ))
        }
        GroupMethod::Wbf => {
            let cfg = AlsConfig {
                reg_lambda: lambda,
                ..als_config.clone()
            };
            let fit = als_fit(extended, &cfg)?;
            let sigma = svd(&predict(&fit.factors))?.sigma;
            Ok(numerical_rank(&sigma, si_config.rank_tolerance))
        }
        GroupMethod::Af(_) => {
            let cfg = AlsConfig {
                reg_lambda: lambda,
                ..als_config.clone()
            };
            let fit = als_fit(base, &cfg)?;
            let sigma = svd(&predict(&fit.factors))?.sigma;
            Ok(numerical_rank(&sigma, si_config.rank_tolerance))
        }
    }
}

/// Candidate items offered to the top-k ranking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateMode {
    /// Every item except those rated in training by every group member.
    ExcludeJointlyObserved,
    AllItems,
}

/// Parameters of the group recommendation comparison.
#[derive(Clone, Debug)]
pub struct GroupExperimentConfig {
    pub sizes: Vec<usize>,
    /// Disjoint group instances per size.
    pub instances: usize,
    pub group_seed: u64,
    /// Recommendation list length.
    pub k: usize,
    /// Relevance threshold on the reference rating.
    pub tau: f64,
    pub candidate_mode: CandidateMode,
    pub methods: Vec<GroupMethod>,
    /// Worker threads for evaluating groups; 1 runs sequentially.
    pub threads: usize,
}

/// One row of the group comparison: metrics for a (method, group) pair.
#[derive(Clone, Debug)]
pub struct GroupMetricRow {
    pub method: String,
    pub group_id: String,
    pub group_size: usize,
    /// The regularizer the method ran with: the chosen grid point for the
    /// completion method, the factorization ridge weight for the baselines.
    pub lambda: f64,
    pub metrics: MetricsAtK,
}

/// Compare the configured group recommenders over seeded group samples.
///
/// `train` is the matrix the methods fit on; `truth` is the complete
/// reference matrix the per-group reference ratings come from. Rows come
/// back ordered by (size, instance, method) regardless of thread count.
pub fn group_recommendation_experiment(
    train: &RatingMatrix,
    truth: &Matrix,
    cfg: &GroupExperimentConfig,
    si: &SoftImputeConfig,
    als: &AlsConfig,
) -> Result<Vec<GroupMetricRow>> {
    if cfg.methods.is_empty() {
        return Err(Error::Config(
            "group experiment needs at least one method".into(),
        ));
    }
    if truth.dim() != (train.m(), train.n()) {
        return Err(Error::Config(
            "reference matrix shape does not match the training matrix".into(),
        ));
    }
    let groups =
        crate::group::sample_disjoint_groups(train.m(), &cfg.sizes, cfg.instances, cfg.group_seed)?;

    // One base fit serves every after-factorization row.
    let af_fit = if cfg.methods.iter().any(|m| matches!(m, GroupMethod::Af(_))) {
        Some(als_fit(train, als)?)
    } else {
        None
    };

    let evaluate = |g: &Group| -> Result<Vec<GroupMetricRow>> {
        let reference = group_reference(truth, g);
        let candidates = candidate_items(train, g, cfg.candidate_mode);
        let mut rows = Vec::with_capacity(cfg.methods.len());
        for method in &cfg.methods {
            let (predictions, lambda) = match method {
                GroupMethod::Gsi => {
                    let res = crate::group::gsi_svd(train, g, si)?;
                    let lambda = res.chosen_lambda();
                    (res.predicted_ratings, lambda)
                }
                GroupMethod::Wbf => {
                    let agg = aggregate_group(train, g)?;
                    let (pred, _) = crate::group::wbf(train, g, &agg, als)?;
                    (pred, als.reg_lambda)
                }
                GroupMethod::Af(kind) => {
                    let fit = af_fit.as_ref().expect("fit cached when AF requested");
                    let pred = crate::group::af_from_fit(fit, train, g, *kind)?;
                    (pred, als.reg_lambda)
                }
            };
            let metrics =
                precision_recall_f1(&reference, &predictions, cfg.k, cfg.tau, &candidates)?
                    .with_labels(method.name(), g.id());
            rows.push(GroupMetricRow {
                method: method.name(),
                group_id: g.id().to_string(),
                group_size: g.len(),
                lambda,
                metrics,
            });
        }
        Ok(rows)
    };

    let threads = cfg.threads.max(1).min(groups.len().max(1));
    let mut per_group: Vec<Result<Vec<GroupMetricRow>>> = Vec::with_capacity(groups.len());
    if threads <= 1 {
        for g in &groups {
            per_group.push(evaluate(g));
        }
    } else {
        let mut slots: Vec<Option<Result<Vec<GroupMetricRow>>>> =
            (0..groups.len()).map(|_| None).collect();
        std::thread::scope(|scope| {
            for (chunk_id, chunk) in slots.chunks_mut(groups.len().div_ceil(threads)).enumerate() {
                let groups = &groups;
                let evaluate = &evaluate;
                let chunk_size = groups.len().div_ceil(threads);
                scope.spawn(move || {
                    for (offset, slot) in chunk.iter_mut().enumerate() {
                        let idx = chunk_id * chunk_size + offset;
                        *slot = Some(evaluate(&groups[idx]));
                    }
                });
            }
        });
        per_group.extend(slots.into_iter().map(|s| s.expect("all slots filled")));
    }

    let mut rows = Vec::new();
    for group_rows in per_group {
        rows.extend(group_rows?);
    }
    Ok(rows)
}

/// The items a group can be recommended.
pub fn candidate_items(train: &RatingMatrix, g: &Group, mode: CandidateMode) -> Vec<usize> {
    match mode {
        CandidateMode::AllItems => (0..train.n()).collect(),
        CandidateMode::ExcludeJointlyObserved => (0..train.n())
            .filter(|&j| !g.members().iter().all(|&u| train.observed().contains(u, j)))
            .collect(),
    }
}

/// One error report per grid point, ordered by ascending nuclear norm.
pub fn error_curve(path: &SoftImputePath, truth: &Matrix, split: &SplitMask) -> Vec<ErrorReport> {
    let mut reports: Vec<ErrorReport> = path
        .lambdas
        .iter()
        .zip(&path.solutions)
        .map(|(&lambda, solution)| train_test_error(truth, solution, split, lambda))
        .collect();
    reports.sort_by(|a, b| a.nuclear_norm.partial_cmp(&b.nuclear_norm).unwrap());
    reports
}

/// Plot-ready log-scale convergence data.
#[derive(Clone, Debug)]
pub struct ConvergenceSeries {
    /// (iteration index, log10 relative error) pairs.
    pub points: Vec<(usize, f64)>,
    /// Entries dropped because the error was exactly zero.
    pub dropped_zeros: usize,
}

pub fn convergence_series(trace: &ConvergenceTrace) -> ConvergenceSeries {
    let mut points = Vec::with_capacity(trace.relative_errors.len());
    let mut dropped_zeros = 0;
    for (k, &e) in trace.relative_errors.iter().enumerate() {
        if e > 0.0 {
            points.push((k, e.log10()));
        } else {
            dropped_zeros += 1;
        }
    }
    ConvergenceSeries {
        points,
        dropped_zeros,
    }
}

/// Least-squares line fit with its coefficient of determination.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|p| {
                let fit = slope * p.0 + intercept;
                (p.1 - fit) * (p.1 - fit)
            })
            .sum();
        1.0 - ss_res / syy
    };
    LineFit {
        slope,
        intercept,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::train_test_split;
    use crate::matrix::IndexSet;
    use crate::svd::SvdFactors;

    fn literal_completion(z: Matrix) -> ThresholdedMatrix {
        // rank / nuclear norm are irrelevant for the error examples
        ThresholdedMatrix {
            rank: 0,
            nuclear_norm: 0.0,
            factors: SvdFactors {
                u: Matrix::zeros(z.rows(), 0),
                sigma: vec![],
                v: Matrix::zeros(z.cols(), 0),
            },
            z,
        }
    }

    #[test]
    fn exact_completion_has_zero_errors() {
        let truth = Matrix::from_fn(4, 3, |i, j| (i + j) as f64 + 1.0);
        let split = train_test_split(&IndexSet::full(4, 3), 0.5, 3).unwrap();
        let report = train_test_error(&truth, &literal_completion(truth.clone()), &split, 0.1);
        assert_eq!(report.train_mse, 0.0);
        assert_eq!(report.test_mse, Some(0.0));
        assert_eq!(report.lambda, 0.1);
    }

    #[test]
    fn constant_offset_gives_unit_mse() {
        let truth = Matrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64);
        let mut z = truth.clone();
        z.data_mut().iter_mut().for_each(|v| *v += 1.0);
        let split = train_test_split(&IndexSet::full(4, 3), 0.5, 3).unwrap();
        let report = train_test_error(&truth, &literal_completion(z), &split, 0.0);
        assert!((report.train_mse - 1.0).abs() < 1e-12);
        assert!((report.test_mse.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_decomposition_matches_total() {
        let truth = Matrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 6) as f64);
        let z = Matrix::from_fn(5, 5, |i, j| ((i + j) % 4) as f64 * 0.8);
        let omega = IndexSet::full(5, 5);
        let split = train_test_split(&omega, 0.72, 11).unwrap();
        let report = train_test_error(&truth, &literal_completion(z.clone()), &split, 0.0);
        let total: f64 = truth
            .data()
            .iter()
            .zip(z.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let recombined = split.omega_train.len() as f64 * report.train_mse
            + split.omega_test.len() as f64 * report.test_mse.unwrap();
        assert!((recombined - total).abs() < 1e-9);
    }

    #[test]
    fn empty_test_mask_reports_absent_mse() {
        let truth = Matrix::zeros(2, 2);
        let split = SplitMask {
            omega_train: IndexSet::full(2, 2),
            omega_test: IndexSet::empty(2, 2),
            seed: 0,
            fraction: 1.0,
        };
        let report = train_test_error(
            &truth,
            &literal_completion(Matrix::zeros(2, 2)),
            &split,
            0.0,
        );
        assert!(report.test_mse.is_none());
    }

    #[test]
    fn group_reference_examples() {
        let truth = Matrix::from_rows(vec![vec![2.0, 4.0], vec![4.0, 2.0], vec![1.0, 5.0]]);
        let singleton = Group::new("s", vec![2], 3).unwrap();
        assert_eq!(group_reference(&truth, &singleton), vec![1.0, 5.0]);
        let pair = Group::new("p", vec![0, 1], 3).unwrap();
        assert_eq!(group_reference(&truth, &pair), vec![3.0, 3.0]);
    }

    #[test]
    fn group_reference_is_member_order_invariant() {
        let truth = Matrix::from_fn(5, 4, |i, j| (i * 4 + j) as f64 * 0.5);
        let a = Group::new("a", vec![0, 2, 4], 5).unwrap();
        let b = Group::new("b", vec![4, 0, 2], 5).unwrap();
        assert_eq!(group_reference(&truth, &a), group_reference(&truth, &b));
    }

    #[test]
    fn prediction_aggregate_mirrors_reference_aggregation() {
        let z = Matrix::from_fn(4, 3, |i, j| (i + 2 * j) as f64 * 0.4 + 1.0);
        let g = Group::new("g", vec![1, 3], 4).unwrap();
        assert_eq!(group_prediction_aggregate(&z, &g), group_reference(&z, &g));
    }

    #[test]
    fn rank_cell_at_huge_lambda_is_zero() {
        let x = crate::data::generate_synthetic(&crate::data::SyntheticConfig {
            users: 12,
            items: 6,
            observed_fraction: 0.6,
            seed: 2,
            ..Default::default()
        })
        .unwrap();
        let group = crate::group::sample_disjoint_groups(12, &[3], 1, 1)
            .unwrap()
            .remove(0);
        let table = rank_recovery_experiment(
            &[("tiny".into(), x, group)],
            &[GroupMethod::Gsi],
            &[1e6],
            &SoftImputeConfig::default(),
            &AlsConfig::default(),
        )
        .unwrap();
        assert_eq!(table.cells[0].rank, Some(0));
    }

    #[test]
    fn hand_enumerated_metrics_example() {
        let reference = [5.0, 1.0, 4.0, 2.0, 5.0, 3.0];
        let predicted = [4.9, 1.2, 2.0, 4.5, 4.8, 3.1];
        let candidates: Vec<usize> = (0..6).collect();
        let m = precision_recall_f1(&reference, &predicted, 3, 3.5, &candidates).unwrap();
        assert_eq!(m.tp, 2);
        assert_eq!(m.fp, 1);
        assert_eq!(m.fn_count, 1);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_ranking_metrics() {
        let reference = [5.0, 4.0, 1.0, 2.0, 4.5];
        let candidates: Vec<usize> = (0..5).collect();
        let k = 2;
        let m = precision_recall_f1(&reference, &reference, k, 3.5, &candidates).unwrap();
        // 3 relevant items, perfect ordering puts relevant ones first
        assert_eq!(m.precision, 1.0);
        assert!((m.recall.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_relevant_set_drops_recall() {
        let reference = [1.0, 2.0, 1.5];
        let predicted = [0.3, 0.2, 0.9];
        let candidates: Vec<usize> = (0..3).collect();
        let m = precision_recall_f1(&reference, &predicted, 2, 3.5, &candidates).unwrap();
        assert_eq!(m.precision, 0.0);
        assert!(m.recall.is_none());
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn empty_candidate_set_is_a_config_error() {
        assert!(matches!(
            precision_recall_f1(&[1.0], &[1.0], 1, 3.5, &[]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ties_break_by_ascending_index() {
        let reference = [5.0, 5.0, 5.0, 1.0];
        let predicted = [2.0, 2.0, 2.0, 2.0];
        let candidates: Vec<usize> = (0..4).collect();
        let m = precision_recall_f1(&reference, &predicted, 2, 3.5, &candidates).unwrap();
        // recommended = {0, 1}, both relevant
        assert_eq!(m.tp, 2);
    }

    #[test]
    fn convergence_series_takes_log10() {
        let trace = ConvergenceTrace {
            relative_errors: vec![1e-1, 1e-2, 1e-3],
            iterations: 3,
            converged: true,
            estimated_rho: None,
        };
        let series = convergence_series(&trace);
        assert_eq!(series.dropped_zeros, 0);
        for (got, want) in series.points.iter().zip([(0, -1.0), (1, -2.0), (2, -3.0)]) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-12);
        }
    }

    #[test]
    fn convergence_series_drops_zero_errors() {
        let trace = ConvergenceTrace {
            relative_errors: vec![1e-1, 0.0, 1e-3],
            iterations: 3,
            converged: true,
            estimated_rho: None,
        };
        let series = convergence_series(&trace);
        assert_eq!(series.dropped_zeros, 1);
        assert_eq!(series.points.len(), 2);
        assert_eq!(series.points[1].0, 2);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let points: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 3.0 - 0.5 * k as f64)).collect();
        let fit = least_squares_line(&points);
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
