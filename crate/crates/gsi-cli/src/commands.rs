//! The experiment subcommands: each one runs an ingest-prepare-solve
//! pipeline from the declarative config and writes plot-ready CSV files, a
//! run manifest, and optional SVG charts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use gsi_core::{
    convergence_series, error_curve, generate_synthetic, group_recommendation_experiment,
    knn_impute, lambda_grid, least_squares_line, load_ratings_csv, random_init,
    rank_recovery_experiment, read_snapshot, restrict_observed, sample_disjoint_groups,
    soft_impute, soft_impute_path, subsample, train_test_split, write_snapshot,
    GroupExperimentConfig, Matrix, RatingMatrix, SplitMask, SubsampleRule,
};

use crate::config::{DatasetKind, ExperimentConfig};
use crate::manifest::{render, RunManifest, StageClock};
use crate::output::{csv_line, fmt_f64, fmt_opt_f64, OutputDir};
use crate::svg::{line_chart, Series};

pub struct Flags {
    pub seed_override: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub emit_svg: bool,
}

fn resolve_out_dir(config: &ExperimentConfig, flags: &Flags) -> Result<PathBuf> {
    flags
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set [output] dir"))
}

/// Load the configured dataset into a rating matrix. Runs before any
/// output is created so a bad path leaves nothing behind.
fn load_dataset(
    config: &ExperimentConfig,
    diagnostics: &mut BTreeMap<String, serde_json::Value>,
) -> Result<RatingMatrix> {
    match config.dataset.kind {
        DatasetKind::Synthetic => {
            let matrix = generate_synthetic(&config.synthetic_config()?)?;
            Ok(matrix)
        }
        DatasetKind::Csv => {
            let path = config.dataset.path.as_ref().expect("validated");
            let schema = config.csv_schema()?;
            let table = load_ratings_csv(path, &schema)?;
            if table.is_empty() {
                bail!(gsi_core::Error::Data(format!(
                    "no usable ratings in {}",
                    path.display()
                )));
            }
            let (m_target, n_target) = match &config.subsample {
                Some(block) => (block.users, block.items),
                None => (table.user_ids().len(), table.item_ids().len()),
            };
            let (matrix, info) = subsample(&table, m_target, n_target, SubsampleRule::MostActive)?;
            diagnostics.insert(
                "ingest".into(),
                serde_json::json!({
                    "records": table.len(),
                    "rejected_rows": table.rejected_rows,
                    "malformed_rows": table.malformed_rows,
                    "users": info.users,
                    "items": info.items,
                    "clamped": info.clamped,
                    "sparsity": info.sparsity,
                }),
            );
            Ok(matrix)
        }
        DatasetKind::Snapshot => {
            let path = config.dataset.path.as_ref().expect("validated");
            let file = std::fs::File::open(path).map_err(|e| {
                gsi_core::Error::Data(format!("cannot read snapshot {}: {e}", path.display()))
            })?;
            Ok(read_snapshot(std::io::BufReader::new(file))?)
        }
    }
}

/// Ingest, impute the complete reference, and split the observed entries.
struct Prepared {
    truth: Matrix,
    split: SplitMask,
    train: RatingMatrix,
}

fn prepare(
    config: &ExperimentConfig,
    clock: &mut StageClock,
    diagnostics: &mut BTreeMap<String, serde_json::Value>,
) -> Result<Prepared> {
    let matrix = clock.time("ingest", || load_dataset(config, diagnostics))?;
    let truth = clock.time("impute", || knn_impute(&matrix, config.impute.k))?;
    let split_block = config.split_block()?;
    let split = clock.time("split", || {
        train_test_split(matrix.observed(), split_block.fraction, split_block.seed)
    })?;
    let train = restrict_observed(&matrix, &split.omega_train)?;
    diagnostics.insert(
        "prepare".into(),
        serde_json::json!({
            "observed": matrix.observed().len(),
            "train_entries": split.omega_train.len(),
            "test_entries": split.omega_test.len(),
            "knn_k": config.impute.k,
        }),
    );
    Ok(Prepared {
        truth,
        split,
        train,
    })
}

fn write_manifest(
    out: &OutputDir,
    command: &str,
    config: &ExperimentConfig,
    flags: &Flags,
    clock: &StageClock,
    diagnostics: &BTreeMap<String, serde_json::Value>,
) -> Result<()> {
    let manifest = RunManifest {
        tool: "gsi",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed_override: flags.seed_override,
        threads: flags.threads,
        emit_svg: flags.emit_svg,
        config,
        stages: clock.stages(),
        diagnostics: &serde_json::json!(diagnostics),
    };
    out.write("manifest.json", &render(&manifest))?;
    Ok(())
}

/// Completion experiment: solve the regularization path on the training
/// matrix and report train/test error against the imputed reference.
pub fn cmd_complete(config: &ExperimentConfig, flags: &Flags) -> Result<()> {
    let mut clock = StageClock::default();
    let mut diagnostics = BTreeMap::new();
    let prepared = prepare(config, &mut clock, &mut diagnostics)?;
    let si = config.softimpute_config()?;

    let path = clock.time("solve", || soft_impute_path(&prepared.train, &si))?;
    let curve = clock.time("evaluate", || {
        error_curve(&path, &prepared.truth, &prepared.split)
    });

    let out = OutputDir::create(&resolve_out_dir(config, flags)?)?;
    let mut csv = String::from("lambda,nuclear_norm,rank,train_mse,test_mse\n");
    for report in &curve {
        csv.push_str(&csv_line(&[
            fmt_f64(report.lambda),
            fmt_f64(report.nuclear_norm),
            report.rank.to_string(),
            fmt_f64(report.train_mse),
            fmt_opt_f64(report.test_mse),
        ]));
    }
    out.write("error_curve.csv", &csv)?;

    let mut traces = String::from("level,lambda,iterations,converged,estimated_rho\n");
    for (level, (lambda, trace)) in path.lambdas.iter().zip(&path.traces).enumerate() {
        traces.push_str(&csv_line(&[
            level.to_string(),
            fmt_f64(*lambda),
            trace.iterations.to_string(),
            trace.converged.to_string(),
            fmt_opt_f64(trace.estimated_rho),
        ]));
    }
    out.write("traces.csv", &traces)?;

    if flags.emit_svg {
        let train_series = Series {
            label: "train mse".into(),
            points: curve
                .iter()
                .map(|r| (r.nuclear_norm, r.train_mse))
                .collect(),
        };
        let test_series = Series {
            label: "test mse".into(),
            points: curve
                .iter()
                .filter_map(|r| r.test_mse.map(|t| (r.nuclear_norm, t)))
                .collect(),
        };
        out.write(
            "error_curve.svg",
            &line_chart(
                "error vs nuclear norm",
                "nuclear norm",
                "mean squared error",
                &[train_series, test_series],
            ),
        )?;
    }

    diagnostics.insert(
        "solve".into(),
        serde_json::json!({
            "grid": path.lambdas,
            "total_iterations": path.traces.iter().map(|t| t.iterations).sum::<usize>(),
            "converged_levels": path.traces.iter().filter(|t| t.converged).count(),
        }),
    );
    write_manifest(&out, "complete", config, flags, &clock, &diagnostics)
}

/// Group comparison: run the configured recommenders over seeded groups and
/// write one metrics row per (method, group).
pub fn cmd_group_rec(config: &ExperimentConfig, flags: &Flags) -> Result<()> {
    let mut clock = StageClock::default();
    let mut diagnostics = BTreeMap::new();
    let prepared = prepare(config, &mut clock, &mut diagnostics)?;
    let si = config.softimpute_config()?;
    let als = config.als_config()?;
    let groups_block = config.groups_block()?;
    let experiment = GroupExperimentConfig {
        sizes: groups_block.sizes.clone(),
        instances: groups_block.instances,
        group_seed: groups_block.seed,
        k: config.metrics.k,
        tau: config.metrics.tau,
        candidate_mode: config.candidate_mode(),
        methods: config.methods()?,
        threads: flags.threads,
    };

    let rows = clock.time("evaluate", || {
        group_recommendation_experiment(&prepared.train, &prepared.truth, &experiment, &si, &als)
    })?;

    let dataset = config.dataset_name();
    let out = OutputDir::create(&resolve_out_dir(config, flags)?)?;
    let mut csv = String::from(
        "dataset,method,group_id,group_size,k,tau,lambda,precision,recall,f1,tp,fp,fn,seed\n",
    );
    for row in &rows {
        csv.push_str(&csv_line(&[
            dataset.clone(),
            row.method.clone(),
            row.group_id.clone(),
            row.group_size.to_string(),
            experiment.k.to_string(),
            fmt_f64(experiment.tau),
            fmt_f64(row.lambda),
            fmt_f64(row.metrics.precision),
            fmt_opt_f64(row.metrics.recall),
            fmt_f64(row.metrics.f1),
            row.metrics.tp.to_string(),
            row.metrics.fp.to_string(),
            row.metrics.fn_count.to_string(),
            experiment.group_seed.to_string(),
        ]));
    }
    out.write("group_metrics.csv", &csv)?;

    // per-method aggregates for the manifest and the optional chart
    let mut by_method: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for row in &rows {
        by_method
            .entry(row.method.clone())
            .or_default()
            .entry(row.group_size)
            .or_default()
            .push(row.metrics.f1);
    }
    if flags.emit_svg {
        let series: Vec<Series> = by_method
            .iter()
            .map(|(method, sizes)| Series {
                label: method.clone(),
                points: sizes
                    .iter()
                    .map(|(&size, f1s)| (size as f64, f1s.iter().sum::<f64>() / f1s.len() as f64))
                    .collect(),
            })
            .collect();
        out.write(
            "group_f1.svg",
            &line_chart("mean F1 by group size", "group size", "F1", &series),
        )?;
    }
    let summary: BTreeMap<&String, f64> = by_method
        .iter()
        .map(|(m, sizes)| {
            let all: Vec<f64> = sizes.values().flatten().copied().collect();
            (m, all.iter().sum::<f64>() / all.len() as f64)
        })
        .collect();
    diagnostics.insert("mean_f1".into(), serde_json::json!(summary));
    write_manifest(&out, "group-rec", config, flags, &clock, &diagnostics)
}

/// Recovered-rank table over the configured shrinkage levels.
pub fn cmd_rank_table(config: &ExperimentConfig, flags: &Flags) -> Result<()> {
    let mut clock = StageClock::default();
    let mut diagnostics = BTreeMap::new();
    let matrix = clock.time("ingest", || load_dataset(config, &mut diagnostics))?;
    let si = config.softimpute_config()?;
    let als = config.als_config()?;
    let groups_block = config.groups_block()?;
    let group = sample_disjoint_groups(
        matrix.m(),
        &[config.rank_table.group_size],
        1,
        groups_block.seed,
    )?
    .remove(0);
    let methods = config.methods()?;
    let dataset = config.dataset_name();

    let table = clock.time("evaluate", || {
        rank_recovery_experiment(
            &[(dataset.clone(), matrix, group)],
            &methods,
            &config.rank_table.lambdas,
            &si,
            &als,
        )
    })?;

    let out = OutputDir::create(&resolve_out_dir(config, flags)?)?;
    let mut csv = String::from("dataset,method,lambda,rank\n");
    for cell in &table.cells {
        csv.push_str(&csv_line(&[
            cell.dataset.clone(),
            cell.method.clone(),
            fmt_f64(cell.lambda),
            cell.rank.map(|r| r.to_string()).unwrap_or_default(),
        ]));
    }
    out.write("rank_table.csv", &csv)?;

    if flags.emit_svg {
        let mut by_method: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for cell in &table.cells {
            if let Some(rank) = cell.rank {
                by_method
                    .entry(cell.method.clone())
                    .or_default()
                    .push((cell.lambda.log10(), rank as f64));
            }
        }
        let series: Vec<Series> = by_method
            .into_iter()
            .map(|(label, points)| Series { label, points })
            .collect();
        out.write(
            "rank_table.svg",
            &line_chart(
                "recovered rank vs shrinkage",
                "log10 lambda",
                "rank",
                &series,
            ),
        )?;
    }
    diagnostics.insert("cells".into(), serde_json::json!(table.cells.len()));
    write_manifest(&out, "rank-table", config, flags, &clock, &diagnostics)
}

/// One completion's per-iteration convergence series plus the estimated
/// contraction rate.
pub fn cmd_convergence(config: &ExperimentConfig, flags: &Flags) -> Result<()> {
    let mut clock = StageClock::default();
    let mut diagnostics = BTreeMap::new();
    let matrix = clock.time("ingest", || load_dataset(config, &mut diagnostics))?;
    let mut si = config.softimpute_config()?;
    if let Some(eps) = config.convergence.epsilon {
        si.epsilon = eps;
    }

    let (lambda, trace) = clock.time("solve", || -> Result<_> {
        if let Some(lambda) = config.convergence.lambda {
            // single cold-started solve at an absolute shrinkage level
            let z0 = random_init(matrix.m(), matrix.n(), si.seed);
            let (_, trace) = soft_impute(&matrix, lambda, &z0, &si)?;
            Ok((lambda, trace))
        } else {
            // warm-started path level, mid-grid unless configured
            let grid = lambda_grid(&matrix, &si)?;
            let level = config
                .convergence
                .level
                .unwrap_or(grid.len() / 2)
                .min(grid.len() - 1);
            let mut z = random_init(matrix.m(), matrix.n(), si.seed);
            let mut last = None;
            for &lambda in &grid[..=level] {
                let (solution, trace) = soft_impute(&matrix, lambda, &z, &si)?;
                z = solution.z.clone();
                last = Some((lambda, trace));
            }
            Ok(last.expect("grid is non-empty"))
        }
    })?;

    let series = convergence_series(&trace);
    let points: Vec<(f64, f64)> = series.points.iter().map(|&(k, v)| (k as f64, v)).collect();
    let fit = least_squares_line(&points);

    let out = OutputDir::create(&resolve_out_dir(config, flags)?)?;
    let mut csv = String::from("iteration,relative_error,log10_relative_error\n");
    let mut log_lookup: BTreeMap<usize, f64> = BTreeMap::new();
    for &(k, v) in &series.points {
        log_lookup.insert(k, v);
    }
    for (k, &err) in trace.relative_errors.iter().enumerate() {
        csv.push_str(&csv_line(&[
            k.to_string(),
            fmt_f64(err),
            fmt_opt_f64(log_lookup.get(&k).copied()),
        ]));
    }
    out.write("convergence.csv", &csv)?;

    let mut summary =
        String::from("lambda,iterations,converged,estimated_rho,slope,r_squared,dropped_zeros\n");
    summary.push_str(&csv_line(&[
        fmt_f64(lambda),
        trace.iterations.to_string(),
        trace.converged.to_string(),
        fmt_opt_f64(trace.estimated_rho),
        fmt_f64(fit.slope),
        fmt_f64(fit.r_squared),
        series.dropped_zeros.to_string(),
    ]));
    out.write("convergence_summary.csv", &summary)?;

    if flags.emit_svg {
        out.write(
            "convergence.svg",
            &line_chart(
                "relative error decay",
                "iteration",
                "log10 relative error",
                &[Series {
                    label: "relative error".into(),
                    points,
                }],
            ),
        )?;
    }
    diagnostics.insert(
        "convergence".into(),
        serde_json::json!({
            "lambda": lambda,
            "iterations": trace.iterations,
            "converged": trace.converged,
            "estimated_rho": trace.estimated_rho,
            "slope": fit.slope,
            "r_squared": fit.r_squared,
        }),
    );
    write_manifest(&out, "convergence", config, flags, &clock, &diagnostics)
}

/// Emit a synthetic matrix in the canonical snapshot format.
pub fn cmd_synth(config: &ExperimentConfig, flags: &Flags) -> Result<()> {
    if config.dataset.kind != DatasetKind::Synthetic {
        bail!("the synth command requires dataset.kind = \"synthetic\"");
    }
    let mut clock = StageClock::default();
    let mut diagnostics = BTreeMap::new();
    let matrix = clock.time("generate", || {
        generate_synthetic(&config.synthetic_config()?).context("synthetic generation")
    })?;

    let mut buffer = Vec::new();
    write_snapshot(&matrix, &mut buffer)?;
    let text = String::from_utf8(buffer).expect("snapshot is ascii");

    let out = OutputDir::create(&resolve_out_dir(config, flags)?)?;
    out.write("synthetic-matrix.txt", &text)?;
    diagnostics.insert(
        "matrix".into(),
        serde_json::json!({
            "users": matrix.m(),
            "items": matrix.n(),
            "observed": matrix.observed().len(),
        }),
    );
    write_manifest(&out, "synth", config, flags, &clock, &diagnostics)
}
