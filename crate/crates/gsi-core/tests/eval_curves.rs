//! Error-curve and convergence-series behavior on real solver runs.

mod common;

use gsi_core::{
    convergence_series, error_curve, generate_synthetic, knn_impute, restrict_observed,
    soft_impute_path, train_test_split, SoftImputeConfig, SyntheticConfig,
};

fn pipeline() -> (
    gsi_core::RatingMatrix,
    gsi_core::Matrix,
    gsi_core::SplitMask,
) {
    let x = generate_synthetic(&SyntheticConfig {
        users: 80,
        items: 30,
        observed_fraction: 0.4,
        seed: 13,
        ..Default::default()
    })
    .unwrap();
    let truth = knn_impute(&x, 5).unwrap();
    let split = train_test_split(x.observed(), 0.75, 3).unwrap();
    (x, truth, split)
}

#[test]
fn training_error_falls_as_nuclear_norm_grows() {
    let (x, truth, split) = pipeline();
    let train = restrict_observed(&x, &split.omega_train).unwrap();
    let si = SoftImputeConfig {
        grid_size: 8,
        lambda_min: 0.5,
        ..Default::default()
    };
    let path = soft_impute_path(&train, &si).unwrap();
    let curve = error_curve(&path, &truth, &split);
    assert_eq!(curve.len(), 8);
    for w in curve.windows(2) {
        assert!(w[0].nuclear_norm <= w[1].nuclear_norm);
        assert!(
            w[1].train_mse <= w[0].train_mse + 1e-9,
            "training error rose with nuclear norm: {} -> {}",
            w[0].train_mse,
            w[1].train_mse
        );
    }
}

#[test]
fn nuclear_norms_increase_strictly_along_descending_lambda() {
    let (x, _, split) = pipeline();
    let train = restrict_observed(&x, &split.omega_train).unwrap();
    let si = SoftImputeConfig {
        grid_size: 6,
        lambda_min: 0.5,
        ..Default::default()
    };
    let path = soft_impute_path(&train, &si).unwrap();
    for w in path.solutions.windows(2) {
        assert!(
            w[0].nuclear_norm < w[1].nuclear_norm,
            "nuclear norm not strictly increasing: {} -> {}",
            w[0].nuclear_norm,
            w[1].nuclear_norm
        );
    }
}

#[test]
fn single_lambda_path_yields_a_single_curve_point() {
    let (x, truth, split) = pipeline();
    let train = restrict_observed(&x, &split.omega_train).unwrap();
    let si = SoftImputeConfig {
        grid_size: 1,
        ..Default::default()
    };
    let path = soft_impute_path(&train, &si).unwrap();
    let curve = error_curve(&path, &truth, &split);
    assert_eq!(curve.len(), 1);
    assert_eq!(curve[0].lambda, path.lambdas[0]);
}

#[test]
fn converged_trace_series_ends_below_log_epsilon() {
    let (x, _, _) = pipeline();
    let si = SoftImputeConfig {
        grid_size: 3,
        lambda_min: 1.0,
        ..Default::default()
    };
    let path = soft_impute_path(&x, &si).unwrap();
    for trace in &path.traces {
        // exactly-zero final changes are excluded from the log series
        let last_err = *trace.relative_errors.last().unwrap();
        if trace.converged && last_err > 0.0 {
            let series = convergence_series(trace);
            let (_, last_log) = *series.points.last().unwrap();
            assert!(
                last_log < si.epsilon.log10(),
                "converged series ends at {last_log}, epsilon {}",
                si.epsilon
            );
        }
    }
}
