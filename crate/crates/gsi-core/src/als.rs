//! Rank-constrained matrix factorization fitted by alternating least
//! squares.
//!
//! With one factor fixed, the observed-entry objective splits into
//! independent ridge regressions, one per row (or column) of the rating
//! matrix; rows of the fixed factor matching missing entries are simply
//! dropped from the regression. The solver alternates full half-sweeps and
//! tracks the objective after each one.

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix, RatingMatrix};
use crate::rng;
use crate::svd::svd;

#[derive(Clone, Debug)]
pub struct AlsConfig {
    /// Number of latent dimensions.
    pub rank: usize,
    /// Ridge penalty on both factor matrices.
    pub reg_lambda: f64,
    /// Cap on full sweeps (users then items).
    pub max_sweeps: usize,
    /// Stop when the relative objective change over a full sweep drops
    /// below this.
    pub tolerance: f64,
    /// Seed for the item-factor initialization.
    pub seed: u64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            rank: 20,
            reg_lambda: 0.1,
            max_sweeps: 50,
            tolerance: 1e-5,
            seed: 0,
        }
    }
}

/// Fitted latent factors: users are m×r, items are n×r.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub user_factors: Matrix,
    pub item_factors: Matrix,
    pub rank: usize,
}

/// Outcome of a factorization fit.
#[derive(Clone, Debug)]
pub struct AlsFit {
    pub factors: FactorPair,
    /// Objective value after every half-sweep, users first.
    pub objective_trace: Vec<f64>,
    /// Full sweeps actually run.
    pub sweeps: usize,
    pub converged: bool,
    /// Number of ridge sub-problems that fell back to a pseudo-inverse
    /// because the normal equations were singular (possible at
    /// reg_lambda = 0).
    pub pinv_fallbacks: usize,
}

/// Fit latent factors to the observed entries of `x`.
pub fn als_fit(x: &RatingMatrix, config: &AlsConfig) -> Result<AlsFit> {
    let (m, n) = (x.m(), x.n());
    if config.rank == 0 {
        return Err(Error::Config("rank must be at least 1".into()));
    }
    if config.rank > m.min(n) {
        return Err(Error::Config(format!(
            "rank {} exceeds min(m, n) = {}",
            config.rank,
            m.min(n)
        )));
    }
    if !(config.reg_lambda >= 0.0) {
        return Err(Error::Config(format!(
            "reg_lambda must be nonnegative, got {}",
            config.reg_lambda
        )));
    }
    if config.max_sweeps < 1 {
        return Err(Error::Config("max_sweeps must be at least 1".into()));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::Config(format!(
            "tolerance must be positive, got {}",
            config.tolerance
        )));
    }
    let r = config.rank;

    // Observed entries grouped by row and by column.
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, j) in x.observed().iter() {
        let v = x.values().get(i, j);
        by_row[i].push((j, v));
        by_col[j].push((i, v));
    }

    // Item factors start at N(0, 1/sqrt(r)); the user half-sweep runs first.
    let item_factors = initial_item_factors(n, config);
    let user_factors = Matrix::zeros(m, r);
    let mut factors = FactorPair {
        user_factors,
        item_factors,
        rank: r,
    };

    let mut scratch = RidgeScratch::new(r);
    let mut objective_trace = Vec::new();
    let mut pinv_fallbacks = 0usize;
    let mut prev_obj = mf_objective(x, &factors, config.reg_lambda);
    let mut converged = false;
    let mut sweeps = 0usize;

    for _ in 0..config.max_sweeps {
        // users given items
        for i in 0..m {
            let row_obs = &by_row[i];
            let fallback = solve_ridge_into(
                &factors.item_factors,
                row_obs,
                config.reg_lambda,
                &mut scratch,
            )?;
            if fallback {
                pinv_fallbacks += 1;
            }
            factors
                .user_factors
                .row_mut(i)
                .copy_from_slice(&scratch.beta);
        }
        objective_trace.push(mf_objective(x, &factors, config.reg_lambda));

        // items given users
        for j in 0..n {
            let col_obs = &by_col[j];
            let fallback = solve_ridge_into(
                &factors.user_factors,
                col_obs,
                config.reg_lambda,
                &mut scratch,
            )?;
            if fallback {
                pinv_fallbacks += 1;
            }
            factors
                .item_factors
                .row_mut(j)
                .copy_from_slice(&scratch.beta);
        }
        let obj = mf_objective(x, &factors, config.reg_lambda);
        objective_trace.push(obj);
        sweeps += 1;

        let denom = prev_obj.abs().max(f64::MIN_POSITIVE);
        if (prev_obj - obj).abs() / denom < config.tolerance {
            converged = true;
            break;
        }
        prev_obj = obj;
    }

    Ok(AlsFit {
        factors,
        objective_trace,
        sweeps,
        converged,
        pinv_fallbacks,
    })
}

/// The seeded N(0, 1/sqrt(rank)) item-factor initialization the fit starts
/// from; exposed so callers can reproduce the solver's starting point.
pub fn initial_item_factors(items: usize, config: &AlsConfig) -> Matrix {
    let mut rng = rng::seeded(config.seed);
    let scale = 1.0 / (config.rank as f64).sqrt();
    Matrix::from_fn(items, config.rank, |_, _| {
        scale * rng::standard_normal(&mut rng)
    })
}

/// Dense prediction matrix `user_factors · item_factorsᵀ`.
pub fn predict(factors: &FactorPair) -> Matrix {
    let m = factors.user_factors.rows();
    let n = factors.item_factors.rows();
    Matrix::from_fn(m, n, |i, j| {
        dot(factors.user_factors.row(i), factors.item_factors.row(j))
    })
}

/// Observed-entry squared error plus the ridge penalty on both factors.
pub fn mf_objective(x: &RatingMatrix, factors: &FactorPair, reg_lambda: f64) -> f64 {
    let mut fit = 0.0;
    for (i, j) in x.observed().iter() {
        let pred = dot(factors.user_factors.row(i), factors.item_factors.row(j));
        let d = x.values().get(i, j) - pred;
        fit += d * d;
    }
    let reg: f64 = factors
        .user_factors
        .data()
        .iter()
        .chain(factors.item_factors.data())
        .map(|v| v * v)
        .sum();
    fit + reg_lambda * reg
}

struct RidgeScratch {
    r: usize,
    ata: Vec<f64>,
    chol: Vec<f64>,
    aty: Vec<f64>,
    beta: Vec<f64>,
}

impl RidgeScratch {
    fn new(r: usize) -> Self {
        RidgeScratch {
            r,
            ata: vec![0.0; r * r],
            chol: vec![0.0; r * r],
            aty: vec![0.0; r],
            beta: vec![0.0; r],
        }
    }
}

/// Solve `(AᵀA + lambda·I) beta = Aᵀy` where the rows of A are the rows of
/// `factor` selected by `obs` and y holds the matching responses. The
/// solution lands in `scratch.beta`; returns true when the pseudo-inverse
/// fallback was taken.
fn solve_ridge_into(
    factor: &Matrix,
    obs: &[(usize, f64)],
    lambda: f64,
    scratch: &mut RidgeScratch,
) -> Result<bool> {
    let r = scratch.r;
    if obs.is_empty() {
        // no data: the regularized solution is zero
        scratch.beta.fill(0.0);
        return Ok(false);
    }
    scratch.ata.fill(0.0);
    scratch.aty.fill(0.0);
    for &(k, y) in obs {
        let row = factor.row(k);
        for p in 0..r {
            let rp = row[p];
            scratch.aty[p] += rp * y;
            if rp != 0.0 {
                let base = p * r;
                for q in p..r {
                    scratch.ata[base + q] += rp * row[q];
                }
            }
        }
    }
    for p in 0..r {
        for q in 0..p {
            scratch.ata[p * r + q] = scratch.ata[q * r + p];
        }
        scratch.ata[p * r + p] += lambda;
    }

    scratch.chol.copy_from_slice(&scratch.ata);
    scratch.beta.copy_from_slice(&scratch.aty);
    if cholesky_solve(&mut scratch.chol, &mut scratch.beta, r) {
        return Ok(false);
    }

    // Singular normal equations: minimal-norm solve through the SVD.
    let gram = Matrix::from_fn(r, r, |p, q| scratch.ata[p * r + q]);
    let f = svd(&gram)?;
    let smax = f.sigma.first().copied().unwrap_or(0.0);
    let tol = 1e-12 * smax;
    scratch.beta.fill(0.0);
    for k in 0..r {
        if f.sigma[k] <= tol {
            continue;
        }
        let mut coeff = 0.0;
        for i in 0..r {
            coeff += f.u.get(i, k) * scratch.aty[i];
        }
        coeff /= f.sigma[k];
        for i in 0..r {
            scratch.beta[i] += coeff * f.v.get(i, k);
        }
    }
    Ok(true)
}

/// In-place Cholesky factorization and solve; returns false when the matrix
/// is not numerically positive definite.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], r: usize) -> bool {
    let max_diag = (0..r).fold(0.0f64, |acc, k| acc.max(a[k * r + k]));
    if !(max_diag > 0.0) {
        return false;
    }
    let floor = 1e-12 * max_diag;
    for k in 0..r {
        let mut d = a[k * r + k];
        for p in 0..k {
            d -= a[k * r + p] * a[k * r + p];
        }
        if !(d > floor) || !d.is_finite() {
            return false;
        }
        let lkk = d.sqrt();
        a[k * r + k] = lkk;
        for i in (k + 1)..r {
            let mut s = a[i * r + k];
            for p in 0..k {
                s -= a[i * r + p] * a[k * r + p];
            }
            a[i * r + k] = s / lkk;
        }
    }
    for i in 0..r {
        let mut s = b[i];
        for p in 0..i {
            s -= a[i * r + p] * b[p];
        }
        b[i] = s / a[i * r + i];
    }
    for i in (0..r).rev() {
        let mut s = b[i];
        for p in (i + 1)..r {
            s -= a[p * r + i] * b[p];
        }
        b[i] = s / a[i * r + i];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{IndexSet, RatingScale};

    #[test]
    fn ridge_subproblem_matches_hand_computation() {
        // A = [[1], [2]], y = [1, 2], lambda = 1: 6 beta = 5.
        let factor = Matrix::from_rows(vec![vec![1.0], vec![2.0]]);
        let obs = vec![(0usize, 1.0), (1usize, 2.0)];
        let mut scratch = RidgeScratch::new(1);
        let fallback = solve_ridge_into(&factor, &obs, 1.0, &mut scratch).unwrap();
        assert!(!fallback);
        assert!((scratch.beta[0] - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn empty_subproblem_returns_zero() {
        let factor = Matrix::from_rows(vec![vec![1.0, 2.0]]);
        let mut scratch = RidgeScratch::new(2);
        let fallback = solve_ridge_into(&factor, &[], 0.5, &mut scratch).unwrap();
        assert!(!fallback);
        assert_eq!(scratch.beta, vec![0.0, 0.0]);
    }

    #[test]
    fn singular_normal_equations_take_pinv_path() {
        // duplicate columns make AᵀA rank 1; lambda = 0 keeps it singular
        let factor = Matrix::from_rows(vec![vec![1.0, 1.0], vec![2.0, 2.0]]);
        let obs = vec![(0usize, 1.0), (1usize, 2.0)];
        let mut scratch = RidgeScratch::new(2);
        let fallback = solve_ridge_into(&factor, &obs, 0.0, &mut scratch).unwrap();
        assert!(fallback);
        // minimal-norm solution of 2x2 singular system: beta = [0.5, 0.5]
        assert!((scratch.beta[0] - 0.5).abs() < 1e-10);
        assert!((scratch.beta[1] - 0.5).abs() < 1e-10);
    }

    fn rank_one_full() -> RatingMatrix {
        let u = [1.0, 2.0, 1.5];
        let v = [2.0, 1.0, 2.5, 0.8];
        let values = Matrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        RatingMatrix::new(
            values,
            IndexSet::full(3, 4),
            RatingScale { min: 0.5, max: 6.0 },
        )
        .unwrap()
    }

    #[test]
    fn exact_rank_one_matrix_is_recovered() {
        let x = rank_one_full();
        let cfg = AlsConfig {
            rank: 1,
            reg_lambda: 0.0,
            max_sweeps: 30,
            tolerance: 1e-12,
            seed: 3,
        };
        let fit = als_fit(&x, &cfg).unwrap();
        let pred = predict(&fit.factors);
        assert!(
            pred.sub(x.values()).max_abs() < 1e-6,
            "max deviation {}",
            pred.sub(x.values()).max_abs()
        );
    }

    #[test]
    fn rank_above_min_dim_is_rejected() {
        let x = rank_one_full();
        let cfg = AlsConfig {
            rank: 4,
            ..Default::default()
        };
        assert!(matches!(als_fit(&x, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn identity_factors_predict_identity() {
        let eye = Matrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let factors = FactorPair {
            user_factors: eye.clone(),
            item_factors: eye.clone(),
            rank: 3,
        };
        assert_eq!(predict(&factors), eye);
    }

    #[test]
    fn rank_one_factors_predict_outer_product() {
        let u = Matrix::from_rows(vec![vec![2.0], vec![-1.0]]);
        let v = Matrix::from_rows(vec![vec![3.0], vec![0.5], vec![1.0]]);
        let factors = FactorPair {
            user_factors: u,
            item_factors: v,
            rank: 1,
        };
        let pred = predict(&factors);
        assert_eq!(
            pred,
            Matrix::from_rows(vec![vec![6.0, 1.0, 2.0], vec![-3.0, -0.5, -1.0]])
        );
    }

    #[test]
    fn zero_factors_objective_is_observed_energy() {
        let x =
            RatingMatrix::from_entries(2, 2, &[(0, 0, 3.0), (1, 1, 4.0)], RatingScale::STANDARD)
                .unwrap();
        let factors = FactorPair {
            user_factors: Matrix::zeros(2, 2),
            item_factors: Matrix::zeros(2, 2),
            rank: 2,
        };
        assert_eq!(mf_objective(&x, &factors, 0.7), 25.0);
    }

    #[test]
    fn exact_factorization_has_zero_objective_without_reg() {
        let x = rank_one_full();
        let u = Matrix::from_rows(vec![vec![1.0], vec![2.0], vec![1.5]]);
        let v = Matrix::from_rows(vec![vec![2.0], vec![1.0], vec![2.5], vec![0.8]]);
        let factors = FactorPair {
            user_factors: u,
            item_factors: v,
            rank: 1,
        };
        assert!(mf_objective(&x, &factors, 0.0).abs() < 1e-12);
    }

    #[test]
    fn objective_matches_elementwise_recomputation() {
        let x = RatingMatrix::from_entries(
            3,
            3,
            &[(0, 0, 2.0), (0, 2, 4.0), (1, 1, 3.0), (2, 0, 1.0)],
            RatingScale::STANDARD,
        )
        .unwrap();
        let factors = FactorPair {
            user_factors: Matrix::from_fn(3, 2, |i, j| (i + j) as f64 * 0.3),
            item_factors: Matrix::from_fn(3, 2, |i, j| (i as f64 - j as f64) * 0.4),
            rank: 2,
        };
        let lambda = 0.25;
        let pred = predict(&factors);
        let mut expected = 0.0;
        for (i, j) in x.observed().iter() {
            let d = x.values().get(i, j) - pred.get(i, j);
            expected += d * d;
        }
        for v in factors.user_factors.data() {
            expected += lambda * v * v;
        }
        for v in factors.item_factors.data() {
            expected += lambda * v * v;
        }
        let got = mf_objective(&x, &factors, lambda);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_identical_factors() {
        let x = rank_one_full();
        let cfg = AlsConfig {
            rank: 2,
            reg_lambda: 0.1,
            max_sweeps: 5,
            tolerance: 1e-9,
            seed: 77,
        };
        let a = als_fit(&x, &cfg).unwrap();
        let b = als_fit(&x, &cfg).unwrap();
        assert_eq!(a.factors, b.factors);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn empty_rows_and_columns_get_zero_vectors() {
        // user 2 and item 0 have no observations
        let x =
            RatingMatrix::from_entries(3, 2, &[(0, 1, 2.0), (1, 1, 4.0)], RatingScale::STANDARD)
                .unwrap();
        let cfg = AlsConfig {
            rank: 1,
            reg_lambda: 0.1,
            max_sweeps: 3,
            tolerance: 1e-8,
            seed: 1,
        };
        let fit = als_fit(&x, &cfg).unwrap();
        assert_eq!(fit.factors.user_factors.row(2), &[0.0]);
        assert_eq!(fit.factors.item_factors.row(0), &[0.0]);
    }

    #[test]
    fn final_trace_entry_matches_recomputed_objective() {
        let x = rank_one_full();
        let cfg = AlsConfig {
            rank: 2,
            reg_lambda: 0.05,
            max_sweeps: 8,
            tolerance: 1e-10,
            seed: 5,
        };
        let fit = als_fit(&x, &cfg).unwrap();
        let recomputed = mf_objective(&x, &fit.factors, cfg.reg_lambda);
        let last = *fit.objective_trace.last().unwrap();
        assert!((recomputed - last).abs() <= 1e-10 * last.max(1.0));
    }
}
