//! Group preference aggregation, rating-matrix augmentation, the group
//! soft-impute completion method, and its matrix-factorization baselines.
//!
//! A group's observed ratings are folded into a weighted per-item aggregate
//! row: the mean of the member ratings for each item, weighted by the
//! fraction of members who rated it and damped by the rating spread,
//!
//! ```text
//! w_j = (raters_j / |G|) · 1 / (1 + std_j)
//! ```
//!
//! The aggregate row (mean · weight) is appended to the matrix as a pseudo
//! user. The group completion method runs the soft-impute path on the
//! augmented matrix and reads the completed appended row as the group's
//! predicted ratings. The two baselines fit latent factors instead: one on
//! the augmented matrix (weighting before factorization), one aggregating
//! member factors after fitting the unmodified matrix.

use crate::als::{als_fit, AlsConfig, AlsFit};
use crate::error::{Error, Result};
use crate::matrix::{dot, RatingMatrix, RatingScale};
use crate::rng;
use crate::softimpute::{soft_impute_path, SoftImputeConfig, SoftImputePath};
use crate::svd::ThresholdedMatrix;
use rand::seq::SliceRandom;

/// A non-empty set of user indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    id: String,
    members: Vec<usize>,
}

impl Group {
    /// `user_count` is the number of rows the group must fit within.
    pub fn new(id: impl Into<String>, mut members: Vec<usize>, user_count: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("a group needs at least one member".into()));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("group members must be distinct".into()));
        }
        if let Some(&bad) = members.iter().find(|&&u| u >= user_count) {
            return Err(Error::Config(format!(
                "group member {bad} out of range for {user_count} users"
            )));
        }
        Ok(Group {
            id: id.into(),
            members,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Which divisor the per-item group mean uses.
///
/// `Raters` averages over the members who actually rated the item (the
/// default). `GroupSize` divides the same sum by |G| instead, which deflates
/// the mean whenever some members have not rated the item; it is kept as a
/// compatibility switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanDivisor {
    Raters,
    GroupSize,
}

/// Per-item aggregate statistics for one group.
#[derive(Clone, Debug)]
pub struct GroupAggregate {
    /// Per-item mean of the member ratings; 0 where no member rated.
    pub mean_ratings: Vec<f64>,
    /// Per-item weights in (0, 1]; 0 where no member rated.
    pub weights: Vec<f64>,
    pub rater_counts: Vec<usize>,
    /// Population standard deviation of the observed member ratings.
    pub std_devs: Vec<f64>,
    /// True where at least one member rated the item.
    pub rated_mask: Vec<bool>,
    pub group_size: usize,
}

/// Aggregate with the default raters divisor.
pub fn aggregate_group(x: &RatingMatrix, g: &Group) -> Result<GroupAggregate> {
    aggregate_group_with(x, g, MeanDivisor::Raters)
}

pub fn aggregate_group_with(
    x: &RatingMatrix,
    g: &Group,
    divisor: MeanDivisor,
) -> Result<GroupAggregate> {
    if let Some(&bad) = g.members().iter().find(|&&u| u >= x.m()) {
        return Err(Error::Config(format!(
            "group member {bad} out of range for {} users",
            x.m()
        )));
    }
    let n = x.n();
    let size = g.len();
    let mut mean_ratings = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut rater_counts = vec![0usize; n];
    let mut std_devs = vec![0.0; n];
    let mut rated_mask = vec![false; n];

    for j in 0..n {
        let ratings: Vec<f64> = g
            .members()
            .iter()
            .filter(|&&u| x.observed().contains(u, j))
            .map(|&u| x.values().get(u, j))
            .collect();
        let count = ratings.len();
        if count == 0 {
            continue;
        }
        let sum: f64 = ratings.iter().sum();
        let rater_mean = sum / count as f64;
        let var = ratings
            .iter()
            .map(|v| (v - rater_mean) * (v - rater_mean))
            .sum::<f64>()
            / count as f64;
        let std = var.sqrt();
        mean_ratings[j] = match divisor {
            MeanDivisor::Raters => rater_mean,
            MeanDivisor::GroupSize => sum / size as f64,
        };
        std_devs[j] = std;
        rater_counts[j] = count;
        rated_mask[j] = true;
        weights[j] = (count as f64 / size as f64) * (1.0 / (1.0 + std));
    }

    Ok(GroupAggregate {
        mean_ratings,
        weights,
        rater_counts,
        std_devs,
        rated_mask,
        group_size: size,
    })
}

/// The base matrix with the weighted group row appended as row m.
#[derive(Clone, Debug)]
pub struct AugmentedMatrix {
    pub base: RatingMatrix,
    pub extended: RatingMatrix,
    /// Index of the appended row (equals the base user count).
    pub group_row_index: usize,
}

/// Append `mean · weight` as an extra observed row wherever the group rated;
/// the rest of the appended row stays unobserved.
pub fn augment(x: &RatingMatrix, agg: &GroupAggregate) -> AugmentedMatrix {
    let (m, n) = (x.m(), x.n());
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(x.observed().len() + n);
    for (i, j) in x.observed().iter() {
        entries.push((i, j, x.values().get(i, j)));
    }
    for j in 0..n {
        if agg.rated_mask[j] {
            entries.push((m, j, agg.mean_ratings[j] * agg.weights[j]));
        }
    }
    // Weighted entries can drop below the base scale minimum but stay
    // positive and never exceed the maximum.
    let scale = RatingScale {
        min: 0.0,
        max: x.scale().max,
    };
    let extended = RatingMatrix::from_entries(m + 1, n, &entries, scale)
        .expect("augmented entries stay within the widened scale");
    AugmentedMatrix {
        base: x.clone(),
        extended,
        group_row_index: m,
    }
}

/// Output of the group completion method.
#[derive(Clone, Debug)]
pub struct GsiResult {
    pub aggregate: GroupAggregate,
    /// Path over the augmented (m+1)×n matrix.
    pub path: SoftImputePath,
    /// Index into the path of the solution the predictions come from: the
    /// smallest-lambda converged grid point, or the last point if none
    /// converged.
    pub chosen: usize,
    /// Completed ratings for the group: the appended row of the chosen
    /// solution.
    pub predicted_ratings: Vec<f64>,
}

impl GsiResult {
    pub fn completed(&self) -> &ThresholdedMatrix {
        &self.path.solutions[self.chosen]
    }

    pub fn chosen_lambda(&self) -> f64 {
        self.path.lambdas[self.chosen]
    }
}

/// Group completion: augment with the weighted aggregate row, run the
/// soft-impute path, and read the appended row of the final solution.
pub fn gsi_svd(x: &RatingMatrix, g: &Group, config: &SoftImputeConfig) -> Result<GsiResult> {
    let aggregate = aggregate_group(x, g)?;
    let augmented = augment(x, &aggregate);
    let path = soft_impute_path(&augmented.extended, config)?;
    let chosen = path
        .traces
        .iter()
        .rposition(|t| t.converged)
        .unwrap_or(path.traces.len() - 1);
    let predicted_ratings = path.solutions[chosen]
        .z
        .row(augmented.group_row_index)
        .to_vec();
    Ok(GsiResult {
        aggregate,
        path,
        chosen,
        predicted_ratings,
    })
}

/// Weighted-before-factorization baseline: fit latent factors on the
/// augmented matrix and predict from the pseudo-user row.
pub fn wbf(
    x: &RatingMatrix,
    g: &Group,
    agg: &GroupAggregate,
    als_config: &AlsConfig,
) -> Result<(Vec<f64>, AlsFit)> {
    if g.len() != agg.group_size {
        return Err(Error::Config(
            "aggregate was computed for a group of a different size".into(),
        ));
    }
    let augmented = augment(x, agg);
    let fit = als_fit(&augmented.extended, als_config)?;
    let row = fit.factors.user_factors.row(augmented.group_row_index);
    let predictions = (0..x.n())
        .map(|j| dot(row, fit.factors.item_factors.row(j)))
        .collect();
    Ok((predictions, fit))
}

/// How member latent factors are merged into a group profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregationKind {
    Average,
    /// Weights proportional to each member's observed-rating count.
    WeightedAverage,
    Minimum,
    Maximum,
}

impl AggregationKind {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationKind::Average => "average",
            AggregationKind::WeightedAverage => "weighted_average",
            AggregationKind::Minimum => "minimum",
            AggregationKind::Maximum => "maximum",
        }
    }
}

/// After-factorization baseline: fit on the unmodified matrix, then
/// aggregate the member factor rows into a group profile.
pub fn af(
    x: &RatingMatrix,
    g: &Group,
    h: AggregationKind,
    als_config: &AlsConfig,
) -> Result<(Vec<f64>, AlsFit)> {
    let fit = als_fit(x, als_config)?;
    let predictions = af_from_fit(&fit, x, g, h)?;
    Ok((predictions, fit))
}

/// Aggregate member rows of an existing fit; lets callers reuse one fit
/// across many groups.
pub fn af_from_fit(
    fit: &AlsFit,
    x: &RatingMatrix,
    g: &Group,
    h: AggregationKind,
) -> Result<Vec<f64>> {
    if let Some(&bad) = g
        .members()
        .iter()
        .find(|&&u| u >= fit.factors.user_factors.rows())
    {
        return Err(Error::Config(format!(
            "group member {bad} out of range for the fitted factors"
        )));
    }
    let r = fit.factors.rank;
    let members = g.members();
    let mut profile = vec![0.0f64; r];
    match h {
        AggregationKind::Average => {
            for &u in members {
                for (p, v) in profile.iter_mut().zip(fit.factors.user_factors.row(u)) {
                    *p += v;
                }
            }
            for p in profile.iter_mut() {
                *p /= members.len() as f64;
            }
        }
        AggregationKind::WeightedAverage => {
            let counts: Vec<f64> = members
                .iter()
                .map(|&u| (0..x.n()).filter(|&j| x.observed().contains(u, j)).count() as f64)
                .collect();
            let total: f64 = counts.iter().sum();
            for (idx, &u) in members.iter().enumerate() {
                // all members inactive: fall back to uniform weights
                let w = if total > 0.0 {
                    counts[idx] / total
                } else {
                    1.0 / members.len() as f64
                };
                for (p, v) in profile.iter_mut().zip(fit.factors.user_factors.row(u)) {
                    *p += w * v;
                }
            }
        }
        AggregationKind::Minimum | AggregationKind::Maximum => {
            profile.copy_from_slice(fit.factors.user_factors.row(members[0]));
            for &u in &members[1..] {
                for (p, &v) in profile.iter_mut().zip(fit.factors.user_factors.row(u)) {
                    *p = match h {
                        AggregationKind::Minimum => p.min(v),
                        _ => p.max(v),
                    };
                }
            }
        }
    }
    Ok((0..x.n())
        .map(|j| dot(&profile, fit.factors.item_factors.row(j)))
        .collect())
}

/// Sample experiment groups: for every size, `instances` pairwise-disjoint
/// groups drawn without replacement from the user range. Groups of
/// different sizes may overlap.
pub fn sample_disjoint_groups(
    user_count: usize,
    sizes: &[usize],
    instances: usize,
    seed: u64,
) -> Result<Vec<Group>> {
    if instances == 0 {
        return Err(Error::Config("need at least one group instance".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut groups = Vec::new();
    for &size in sizes {
        if size == 0 {
            return Err(Error::Config("group size must be at least 1".into()));
        }
        if size * instances > user_count {
            return Err(Error::Config(format!(
                "cannot draw {instances} disjoint groups of size {size} from {user_count} users"
            )));
        }
        let mut pool: Vec<usize> = (0..user_count).collect();
        pool.shuffle(&mut rng);
        for k in 0..instances {
            let members = pool[k * size..(k + 1) * size].to_vec();
            groups.push(Group::new(format!("s{size}-i{k}"), members, user_count)?);
        }
    }
    Ok(groups)
}
