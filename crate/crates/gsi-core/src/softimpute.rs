//! Soft-impute: a fixed-point iteration for nuclear-norm-regularized matrix
//! completion.
//!
//! Each step fills the unobserved entries of the target with the current
//! estimate and soft-thresholds the singular values of the result:
//!
//! ```text
//! Z_new = S_lambda( P_Ω(X) + P_Ω^⊥(Z_old) )
//! ```
//!
//! The solver stops when the squared relative change between consecutive
//! iterates drops below the configured threshold. A full regularization
//! path runs the iteration over a geometric grid of shrinkage levels in
//! descending order, warm-starting each level with the previous solution.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, RatingMatrix};
use crate::rng;
use crate::svd::{soft_threshold_svd, svd, ThresholdedMatrix};

/// Scale of the random entries used to initialize the first iterate.
const INIT_SCALE: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct SoftImputeConfig {
    /// Number of grid points on the regularization path.
    pub grid_size: usize,
    /// Smallest shrinkage level on the path.
    pub lambda_min: f64,
    /// Convergence threshold on the squared relative change between iterates.
    pub epsilon: f64,
    /// Iteration cap per grid point.
    pub max_iters: usize,
    /// Relative tolerance for reporting the rank of a solution.
    pub rank_tolerance: f64,
    /// Seed for the random initialization of the first iterate.
    pub seed: u64,
}

impl Default for SoftImputeConfig {
    fn default() -> Self {
        SoftImputeConfig {
            grid_size: 10,
            lambda_min: 1.0,
            epsilon: 1e-5,
            max_iters: 500,
            rank_tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl SoftImputeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 1 {
            return Err(Error::Config("grid_size must be at least 1".into()));
        }
        if !(self.lambda_min > 0.0) {
            return Err(Error::Config(format!(
                "lambda_min must be positive, got {}",
                self.lambda_min
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rank_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "rank_tolerance must be positive, got {}",
                self.rank_tolerance
            )));
        }
        Ok(())
    }
}

/// Per-solve convergence record.
#[derive(Clone, Debug)]
pub struct ConvergenceTrace {
    /// Squared relative change between consecutive iterates, one entry per
    /// iteration; this is the quantity compared against epsilon.
    pub relative_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Geometric decay rate fitted to the tail of the trace, kept only when
    /// it falls in (0, 1).
    pub estimated_rho: Option<f64>,
}

/// Solutions along a descending shrinkage grid.
#[derive(Clone, Debug)]
pub struct SoftImputePath {
    /// Strictly descending shrinkage levels, starting at the largest
    /// singular value of the observed projection.
    pub lambdas: Vec<f64>,
    pub solutions: Vec<ThresholdedMatrix>,
    pub traces: Vec<ConvergenceTrace>,
}

/// Geometric grid of `grid_size` shrinkage levels from the largest singular
/// value of P_Ω(x) down to `lambda_min`.
pub fn lambda_grid(x: &RatingMatrix, config: &SoftImputeConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if x.observed().is_empty() {
        return Err(Error::DegenerateInput(
            "cannot build a shrinkage grid for an all-zero observed matrix".into(),
        ));
    }
    let lambda_max = svd(&x.project_observed())?.sigma[0];
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateInput(
            "observed projection has no nonzero singular value".into(),
        ));
    }
    let k = config.grid_size;
    if k == 1 {
        return Ok(vec![lambda_max]);
    }
    if lambda_max <= config.lambda_min {
        return Err(Error::DegenerateInput(format!(
            "largest singular value {lambda_max} does not exceed lambda_min {}; \
             no descending grid exists",
            config.lambda_min
        )));
    }
    let ratio = (config.lambda_min / lambda_max).powf(1.0 / (k - 1) as f64);
    let mut grid = Vec::with_capacity(k);
    grid.push(lambda_max);
    for i in 1..k - 1 {
        grid.push(lambda_max * ratio.powi(i as i32));
    }
    grid.push(config.lambda_min);
    Ok(grid)
}

/// Draw the random starting iterate used at the head of a path.
pub fn random_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    Matrix::from_fn(rows, cols, |_, _| INIT_SCALE * rng::standard_normal(&mut r))
}

/// One application of the fixed-point map: fill unobserved entries from
/// `z_old`, then soft-threshold the singular values.
pub fn soft_impute_step(
    x: &RatingMatrix,
    z_old: &Matrix,
    lambda: f64,
) -> Result<ThresholdedMatrix> {
    let mut y = z_old.clone();
    for (i, j) in x.observed().iter() {
        y.set(i, j, x.values().get(i, j));
    }
    soft_threshold_svd(&y, lambda)
}

/// Run the fixed-point iteration at a single shrinkage level.
///
/// Returns the final iterate and the full convergence trace. Hitting the
/// iteration cap is not an error: the trace comes back with
/// `converged == false` and the caller decides what to do.
pub fn soft_impute(
    x: &RatingMatrix,
    lambda: f64,
    z_init: &Matrix,
    config: &SoftImputeConfig,
) -> Result<(ThresholdedMatrix, ConvergenceTrace)> {
    config.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!(
            "shrinkage level must be a nonnegative real, got {lambda}"
        )));
    }
    if z_init.dim() != (x.m(), x.n()) {
        return Err(Error::Config(format!(
            "initial iterate shape {:?} does not match matrix shape {:?}",
            z_init.dim(),
            (x.m(), x.n())
        )));
    }
    if !z_init.is_finite() {
        return Err(Error::Config(
            "initial iterate has non-finite entries".into(),
        ));
    }

    let mut z_old = z_init.clone();
    let mut z_old_norm2: f64 = z_old.data().iter().map(|v| v * v).sum();
    let mut relative_errors = Vec::new();
    let mut converged = false;
    let mut result = None;

    for _ in 0..config.max_iters {
        let thresholded = soft_impute_step(x, &z_old, lambda)?;
        let diff2: f64 = thresholded
            .z
            .data()
            .iter()
            .zip(z_old.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        // The ratio is undefined at a zero previous iterate; fall back to
        // the absolute squared change there.
        let rel = if z_old_norm2 > 0.0 {
            diff2 / z_old_norm2
        } else {
            diff2
        };
        relative_errors.push(rel);
        z_old = thresholded.z.clone();
        z_old_norm2 = z_old.data().iter().map(|v| v * v).sum();
        result = Some(thresholded);
        if rel < config.epsilon {
            converged = true;
            break;
        }
    }

    let mut trace = ConvergenceTrace {
        iterations: relative_errors.len(),
        relative_errors,
        converged,
        estimated_rho: None,
    };
    trace.estimated_rho = estimate_contraction_rate(&trace)
        .ok()
        .filter(|&rho| rho > 0.0 && rho < 1.0);
    Ok((result.expect("max_iters >= 1"), trace))
}

/// Solve along the full descending grid, warm-starting every level with the
/// previous solution; the head of the path starts from a seeded random
/// iterate.
pub fn soft_impute_path(x: &RatingMatrix, config: &SoftImputeConfig) -> Result<SoftImputePath> {
    let lambdas = lambda_grid(x, config)?;
    let mut z = random_init(x.m(), x.n(), config.seed);
    let mut solutions = Vec::with_capacity(lambdas.len());
    let mut traces = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let (solution, trace) = soft_impute(x, lambda, &z, config)?;
        z = solution.z.clone();
        solutions.push(solution);
        traces.push(trace);
    }
    Ok(SoftImputePath {
        lambdas,
        solutions,
        traces,
    })
}

/// Estimate the geometric decay rate of a convergence trace: exp of the
/// least-squares slope of log(error) against the iteration index, fitted on
/// the tail half of the trace.
pub fn estimate_contraction_rate(trace: &ConvergenceTrace) -> Result<f64> {
    let errs = &trace.relative_errors;
    if errs.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "contraction estimate needs at least 5 iterations, trace has {}",
            errs.len()
        )));
    }
    let tail_start = errs.len() / 2;
    let points: Vec<(f64, f64)> = errs[tail_start..]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(i, &e)| ((tail_start + i) as f64, e.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(
            "tail of the trace has fewer than 2 positive errors".into(),
        ));
    }
    Ok(fit_slope(&points).exp())
}

/// Least-squares slope of y against x.
pub(crate) fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// The completion objective: squared observed-entry residual plus the
/// weighted nuclear norm of the estimate.
pub fn completion_objective(x: &RatingMatrix, z: &ThresholdedMatrix, lambda: f64) -> f64 {
    let mut data_term = 0.0;
    for (i, j) in x.observed().iter() {
        let d = x.values().get(i, j) - z.z.get(i, j);
        data_term += d * d;
    }
    data_term + lambda * z.nuclear_norm
}
