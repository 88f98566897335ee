//! Declarative experiment configuration.
//!
//! A single TOML file describes the dataset, the preparation pipeline, the
//! solvers, and the evaluation parameters. Unknown keys are rejected, and
//! every random stage carries an explicit seed so a config file pins a run
//! completely. Command-line flags override the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gsi_core::{
    AggregationKind, AlsConfig, CandidateMode, CsvSchema, GroupMethod, SoftImputeConfig,
    SyntheticConfig,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub subsample: Option<SubsampleBlock>,
    #[serde(default)]
    pub impute: ImputeBlock,
    #[serde(default)]
    pub split: Option<SplitBlock>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub groups: Option<GroupsBlock>,
    #[serde(default)]
    pub methods: MethodsBlock,
    #[serde(default)]
    pub metrics: MetricsBlock,
    #[serde(default)]
    pub rank_table: RankTableBlock,
    #[serde(default)]
    pub convergence: ConvergenceBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Label used in result files; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    /// Ratings file for `csv`, snapshot file for `snapshot`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub schema: Option<SchemaKind>,
    /// Column layout when `schema = "custom"`.
    #[serde(default)]
    pub custom: Option<CustomSchema>,
    #[serde(default)]
    pub synthetic: Option<SyntheticBlock>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Synthetic,
    Csv,
    Snapshot,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemaKind {
    Movielens,
    Goodbooks,
    Custom,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSchema {
    pub delimiter: char,
    pub has_header: bool,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    #[serde(default)]
    pub timestamp_col: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticBlock {
    #[serde(default = "default_users")]
    pub users: usize,
    #[serde(default = "default_items")]
    pub items: usize,
    #[serde(default = "default_mean")]
    pub mean: f64,
    #[serde(default = "default_std")]
    pub std: f64,
    #[serde(default = "default_observed_fraction")]
    pub observed_fraction: f64,
    #[serde(default = "default_min_rating")]
    pub min_rating: f64,
    #[serde(default = "default_max_rating")]
    pub max_rating: f64,
    pub seed: u64,
}

fn default_users() -> usize {
    2000
}
fn default_items() -> usize {
    200
}
fn default_mean() -> f64 {
    3.5
}
fn default_std() -> f64 {
    0.65
}
fn default_observed_fraction() -> f64 {
    0.25
}
fn default_min_rating() -> f64 {
    1.0
}
fn default_max_rating() -> f64 {
    5.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SubsampleBlock {
    pub users: usize,
    pub items: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ImputeBlock {
    #[serde(default = "default_knn_k")]
    pub k: usize,
}

fn default_knn_k() -> usize {
    10
}

impl Default for ImputeBlock {
    fn default() -> Self {
        ImputeBlock { k: default_knn_k() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SplitBlock {
    #[serde(default = "default_split_fraction")]
    pub fraction: f64,
    pub seed: u64,
}

fn default_split_fraction() -> f64 {
    0.75
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default)]
    pub softimpute: Option<SoftImputeBlock>,
    #[serde(default)]
    pub als: Option<AlsBlock>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SoftImputeBlock {
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_rank_tolerance")]
    pub rank_tolerance: f64,
    pub seed: u64,
}

fn default_grid_size() -> usize {
    10
}
fn default_lambda_min() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    1e-5
}
fn default_max_iters() -> usize {
    500
}
fn default_rank_tolerance() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AlsBlock {
    #[serde(default = "default_als_rank")]
    pub rank: usize,
    #[serde(default = "default_als_reg")]
    pub reg_lambda: f64,
    #[serde(default = "default_als_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "default_als_tolerance")]
    pub tolerance: f64,
    pub seed: u64,
}

fn default_als_rank() -> usize {
    20
}
fn default_als_reg() -> f64 {
    0.1
}
fn default_als_sweeps() -> usize {
    50
}
fn default_als_tolerance() -> f64 {
    1e-5
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsBlock {
    #[serde(default = "default_group_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_group_instances")]
    pub instances: usize,
    pub seed: u64,
}

fn default_group_sizes() -> Vec<usize> {
    vec![5, 10, 15, 20, 25]
}
fn default_group_instances() -> usize {
    2
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsBlock {
    #[serde(default = "default_method_list")]
    pub list: Vec<String>,
    #[serde(default = "default_af_aggregation")]
    pub af_aggregation: String,
}

fn default_method_list() -> Vec<String> {
    vec!["gsi".into(), "wbf".into(), "af".into()]
}
fn default_af_aggregation() -> String {
    "average".into()
}

impl Default for MethodsBlock {
    fn default() -> Self {
        MethodsBlock {
            list: default_method_list(),
            af_aggregation: default_af_aggregation(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsBlock {
    #[serde(default = "default_metrics_k")]
    pub k: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_candidates")]
    pub candidates: CandidatesKind,
}

fn default_metrics_k() -> usize {
    20
}
fn default_tau() -> f64 {
    3.5
}
fn default_candidates() -> CandidatesKind {
    CandidatesKind::ExcludeJointlyObserved
}

impl Default for MetricsBlock {
    fn default() -> Self {
        MetricsBlock {
            k: default_metrics_k(),
            tau: default_tau(),
            candidates: default_candidates(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CandidatesKind {
    ExcludeJointlyObserved,
    All,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RankTableBlock {
    #[serde(default = "default_rank_lambdas")]
    pub lambdas: Vec<f64>,
    /// Size of the single group appended for the rank experiment.
    #[serde(default = "default_rank_group_size")]
    pub group_size: usize,
}

fn default_rank_lambdas() -> Vec<f64> {
    vec![0.001, 0.01, 0.1, 1.0, 10.0]
}
fn default_rank_group_size() -> usize {
    5
}

impl Default for RankTableBlock {
    fn default() -> Self {
        RankTableBlock {
            lambdas: default_rank_lambdas(),
            group_size: default_rank_group_size(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceBlock {
    /// Path level whose trace is reported; defaults to the middle of the
    /// grid, where the warm-started iteration is in its contraction regime.
    #[serde(default)]
    pub level: Option<usize>,
    /// Absolute shrinkage level; set to run a single cold-started solve
    /// instead of a path level.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Convergence threshold override for this command.
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match self.dataset.kind {
            DatasetKind::Synthetic => {
                if self.dataset.synthetic.is_none() {
                    bail!("dataset.kind = synthetic requires a [dataset.synthetic] block");
                }
            }
            DatasetKind::Csv => {
                if self.dataset.path.is_none() {
                    bail!("dataset.kind = csv requires dataset.path");
                }
                match self.dataset.schema {
                    None => bail!("dataset.kind = csv requires dataset.schema"),
                    Some(SchemaKind::Custom) if self.dataset.custom.is_none() => {
                        bail!("schema = custom requires a [dataset.custom] block")
                    }
                    _ => {}
                }
            }
            DatasetKind::Snapshot => {
                if self.dataset.path.is_none() {
                    bail!("dataset.kind = snapshot requires dataset.path");
                }
            }
        }
        for name in &self.methods.list {
            self.parse_method(name)?;
        }
        Ok(())
    }

    /// Replace every stage seed with one global value.
    pub fn override_seeds(&mut self, seed: u64) {
        if let Some(s) = self.dataset.synthetic.as_mut() {
            s.seed = seed;
        }
        if let Some(s) = self.split.as_mut() {
            s.seed = seed;
        }
        if let Some(s) = self.solver.softimpute.as_mut() {
            s.seed = seed;
        }
        if let Some(a) = self.solver.als.as_mut() {
            a.seed = seed;
        }
        if let Some(g) = self.groups.as_mut() {
            g.seed = seed;
        }
    }

    pub fn dataset_name(&self) -> String {
        if let Some(name) = &self.dataset.name {
            return name.clone();
        }
        match self.dataset.kind {
            DatasetKind::Synthetic => "synthetic".into(),
            DatasetKind::Csv | DatasetKind::Snapshot => self
                .dataset
                .path
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
        }
    }

    pub fn synthetic_config(&self) -> Result<SyntheticConfig> {
        let block = self
            .dataset
            .synthetic
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("missing [dataset.synthetic] block"))?;
        Ok(SyntheticConfig {
            users: block.users,
            items: block.items,
            mean: block.mean,
            std: block.std,
            observed_fraction: block.observed_fraction,
            min_rating: block.min_rating,
            max_rating: block.max_rating,
            seed: block.seed,
        })
    }

    pub fn csv_schema(&self) -> Result<CsvSchema> {
        match self.dataset.schema {
            Some(SchemaKind::Movielens) => Ok(CsvSchema::movielens()),
            Some(SchemaKind::Goodbooks) => Ok(CsvSchema::goodbooks()),
            Some(SchemaKind::Custom) => {
                let c = self
                    .dataset
                    .custom
                    .as_ref()
                    .ok_or_else(|| anyhow::anyhow!("missing [dataset.custom] block"))?;
                Ok(CsvSchema {
                    delimiter: c.delimiter,
                    has_header: c.has_header,
                    user_col: c.user_col,
                    item_col: c.item_col,
                    rating_col: c.rating_col,
                    timestamp_col: c.timestamp_col,
                })
            }
            None => bail!("dataset.schema is required for csv datasets"),
        }
    }

    pub fn softimpute_config(&self) -> Result<SoftImputeConfig> {
        let block =
            self.solver.softimpute.as_ref().ok_or_else(|| {
                anyhow::anyhow!("this command requires a [solver.softimpute] block")
            })?;
        Ok(SoftImputeConfig {
            grid_size: block.grid_size,
            lambda_min: block.lambda_min,
            epsilon: block.epsilon,
            max_iters: block.max_iters,
            rank_tolerance: block.rank_tolerance,
            seed: block.seed,
        })
    }

    pub fn als_config(&self) -> Result<AlsConfig> {
        let block = self
            .solver
            .als
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("this command requires a [solver.als] block"))?;
        Ok(AlsConfig {
            rank: block.rank,
            reg_lambda: block.reg_lambda,
            max_sweeps: block.max_sweeps,
            tolerance: block.tolerance,
            seed: block.seed,
        })
    }

    pub fn split_block(&self) -> Result<&SplitBlock> {
        self.split
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("this command requires a [split] block"))
    }

    pub fn groups_block(&self) -> Result<&GroupsBlock> {
        self.groups
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("this command requires a [groups] block"))
    }

    pub fn parse_method(&self, name: &str) -> Result<GroupMethod> {
        let af_kind = || -> Result<AggregationKind> {
            Ok(match self.methods.af_aggregation.as_str() {
                "average" => AggregationKind::Average,
                "weighted_average" => AggregationKind::WeightedAverage,
                "minimum" => AggregationKind::Minimum,
                "maximum" => AggregationKind::Maximum,
                other => bail!("unknown af_aggregation {other:?}"),
            })
        };
        Ok(match name {
            "gsi" => GroupMethod::Gsi,
            "wbf" => GroupMethod::Wbf,
            "af" => GroupMethod::Af(af_kind()?),
            "af-average" => GroupMethod::Af(AggregationKind::Average),
            "af-weighted_average" => GroupMethod::Af(AggregationKind::WeightedAverage),
            "af-minimum" => GroupMethod::Af(AggregationKind::Minimum),
            "af-maximum" => GroupMethod::Af(AggregationKind::Maximum),
            other => bail!("unknown method {other:?} (expected gsi, wbf, or af)"),
        })
    }

    pub fn methods(&self) -> Result<Vec<GroupMethod>> {
        self.methods
            .list
            .iter()
            .map(|name| self.parse_method(name))
            .collect()
    }

    pub fn candidate_mode(&self) -> CandidateMode {
        match self.metrics.candidates {
            CandidatesKind::ExcludeJointlyObserved => CandidateMode::ExcludeJointlyObserved,
            CandidatesKind::All => CandidateMode::AllItems,
        }
    }
}
