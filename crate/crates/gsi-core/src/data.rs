//! Dataset ingestion, subsampling, KNN imputation, train/test masking, the
//! synthetic generator, and the canonical matrix snapshot format.
//!
//! The ingestion path is: load a ratings file (or generate synthetic data),
//! densify a subsample into a [`RatingMatrix`], impute the missing entries
//! with the KNN imputer to obtain a complete reference matrix, then split
//! the observed set into train and test masks. Every stage takes explicit
//! seeds and is bit-reproducible.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::RngExt;

use crate::error::{Error, Result};
use crate::matrix::{IndexSet, Matrix, RatingMatrix, RatingScale};
use crate::rng;

/// Column layout of a delimited ratings file.
#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub delimiter: char,
    pub has_header: bool,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub timestamp_col: Option<usize>,
}

impl CsvSchema {
    /// MovieLens 100K `u.data`: tab-separated user, item, rating, timestamp.
    pub fn movielens() -> Self {
        CsvSchema {
            delimiter: '\t',
            has_header: false,
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            timestamp_col: Some(3),
        }
    }

    /// Goodbooks `ratings.csv`: comma-separated with a header row,
    /// user_id, book_id, rating.
    pub fn goodbooks() -> Self {
        CsvSchema {
            delimiter: ',',
            has_header: true,
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            timestamp_col: None,
        }
    }

    fn max_col(&self) -> usize {
        self.user_col
            .max(self.item_col)
            .max(self.rating_col)
            .max(self.timestamp_col.unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatingRecord {
    pub user: u64,
    pub item: u64,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Parsed ratings with per-file rejection counters.
#[derive(Clone, Debug, Default)]
pub struct RatingsTable {
    /// Validated records, deduplicated on (user, item) keeping the last.
    pub records: Vec<RatingRecord>,
    /// Rows whose rating fell outside the 1-5 scale.
    pub rejected_rows: usize,
    /// Rows that could not be parsed at all.
    pub malformed_rows: usize,
}

impl RatingsTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct user ids, ascending.
    pub fn user_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.records.iter().map(|r| r.user).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Distinct item ids, ascending.
    pub fn item_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.records.iter().map(|r| r.item).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Parse a delimited ratings stream according to `schema`.
pub fn parse_ratings(reader: impl BufRead, schema: &CsvSchema) -> Result<RatingsTable> {
    let scale = RatingScale::STANDARD;
    let mut table = RatingsTable::default();
    let mut raw: Vec<RatingRecord> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if schema.has_header && line_no == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(schema.delimiter).collect();
        if fields.len() <= schema.max_col() {
            table.malformed_rows += 1;
            continue;
        }
        let user = fields[schema.user_col].trim().parse::<u64>();
        let item = fields[schema.item_col].trim().parse::<u64>();
        let rating = fields[schema.rating_col].trim().parse::<f64>();
        let (user, item, rating) = match (user, item, rating) {
            (Ok(u), Ok(i), Ok(r)) => (u, i, r),
            _ => {
                table.malformed_rows += 1;
                continue;
            }
        };
        let timestamp = match schema.timestamp_col {
            Some(c) => match fields[c].trim().parse::<i64>() {
                Ok(t) => Some(t),
                Err(_) => {
                    table.malformed_rows += 1;
                    continue;
                }
            },
            None => None,
        };
        if !scale.contains(rating) {
            table.rejected_rows += 1;
            continue;
        }
        raw.push(RatingRecord {
            user,
            item,
            rating,
            timestamp,
        });
    }

    // deduplicate (user, item), keeping the last occurrence
    let mut seen = HashSet::new();
    let mut kept: Vec<RatingRecord> = Vec::with_capacity(raw.len());
    for rec in raw.into_iter().rev() {
        if seen.insert((rec.user, rec.item)) {
            kept.push(rec);
        }
    }
    kept.reverse();
    table.records = kept;
    Ok(table)
}

/// Load a ratings file from disk.
pub fn load_ratings_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RatingsTable> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| {
        Error::Data(format!(
            "cannot read ratings file {}: {e}",
            path.as_ref().display()
        ))
    })?;
    parse_ratings(BufReader::new(file), schema)
}

/// How subsampling picks users and items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SubsampleRule {
    /// Most-active users and most-rated items, ties broken by ascending id.
    #[default]
    MostActive,
}

/// Shape and sparsity of a subsampled matrix.
#[derive(Clone, Debug)]
pub struct SubsampleInfo {
    pub users: usize,
    pub items: usize,
    /// Targets exceeded the vocabulary and were clamped.
    pub clamped: bool,
    /// Fraction of unobserved cells.
    pub sparsity: f64,
    /// Original ids in row / column order.
    pub user_ids: Vec<u64>,
    pub item_ids: Vec<u64>,
}

/// Densify the most active `m_target` users by `n_target` items into a
/// rating matrix. Rows and columns are ordered by ascending original id.
pub fn subsample(
    table: &RatingsTable,
    m_target: usize,
    n_target: usize,
    rule: SubsampleRule,
) -> Result<(RatingMatrix, SubsampleInfo)> {
    if table.is_empty() {
        return Err(Error::Data(
            "cannot subsample an empty ratings table".into(),
        ));
    }
    if m_target == 0 || n_target == 0 {
        return Err(Error::Config("subsample targets must be at least 1".into()));
    }
    let SubsampleRule::MostActive = rule;

    let mut user_counts: Vec<(u64, usize)> = Vec::new();
    let mut item_counts: Vec<(u64, usize)> = Vec::new();
    {
        use std::collections::HashMap;
        let mut uc: HashMap<u64, usize> = HashMap::new();
        let mut ic: HashMap<u64, usize> = HashMap::new();
        for rec in &table.records {
            *uc.entry(rec.user).or_insert(0) += 1;
            *ic.entry(rec.item).or_insert(0) += 1;
        }
        user_counts.extend(uc);
        item_counts.extend(ic);
    }
    // activity descending, id ascending on ties
    user_counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    item_counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    let clamped = m_target > user_counts.len() || n_target > item_counts.len();
    let m = m_target.min(user_counts.len());
    let n = n_target.min(item_counts.len());

    let mut user_ids: Vec<u64> = user_counts[..m].iter().map(|&(id, _)| id).collect();
    let mut item_ids: Vec<u64> = item_counts[..n].iter().map(|&(id, _)| id).collect();
    user_ids.sort_unstable();
    item_ids.sort_unstable();

    let user_index: std::collections::HashMap<u64, usize> = user_ids
        .iter()
        .enumerate()
        .map(|(idx, &id)| (id, idx))
        .collect();
    let item_index: std::collections::HashMap<u64, usize> = item_ids
        .iter()
        .enumerate()
        .map(|(idx, &id)| (id, idx))
        .collect();

    let mut entries = Vec::new();
    for rec in &table.records {
        if let (Some(&i), Some(&j)) = (user_index.get(&rec.user), item_index.get(&rec.item)) {
            entries.push((i, j, rec.rating));
        }
    }
    let matrix = RatingMatrix::from_entries(m, n, &entries, RatingScale::STANDARD)?;
    let sparsity = 1.0 - matrix.observed().len() as f64 / (m * n) as f64;
    Ok((
        matrix,
        SubsampleInfo {
            users: m,
            items: n,
            clamped,
            sparsity,
            user_ids,
            item_ids,
        },
    ))
}

/// Fill every missing entry of `x` from the k nearest raters.
///
/// Distance between users is the Euclidean distance over their commonly
/// observed columns scaled by the square root of the overlap count; users
/// with no overlap are infinitely distant. For a missing (i, j) the imputed
/// value is the mean rating of the k nearest finite-distance users who
/// rated j, falling back to all such raters when there are fewer than k,
/// then to the item mean, then to the global mean.
pub fn knn_impute(x: &RatingMatrix, k_neighbors: usize) -> Result<Matrix> {
    if k_neighbors < 1 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    let (m, n) = (x.m(), x.n());
    let values = x.values();
    let omega = x.observed();

    let row_mask = |i: usize| -> Vec<bool> { (0..n).map(|j| omega.contains(i, j)).collect() };
    let masks: Vec<Vec<bool>> = (0..m).map(row_mask).collect();

    // per-column raters and means, global mean
    let mut col_raters: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_sum = vec![0.0f64; n];
    let mut total_sum = 0.0f64;
    let mut total_count = 0usize;
    for (i, j) in omega.iter() {
        let v = values.get(i, j);
        col_raters[j].push(i);
        col_sum[j] += v;
        total_sum += v;
        total_count += 1;
    }
    let global_mean = if total_count > 0 {
        total_sum / total_count as f64
    } else {
        0.0
    };
    let col_mean: Vec<Option<f64>> = (0..n)
        .map(|j| {
            if col_raters[j].is_empty() {
                None
            } else {
                Some(col_sum[j] / col_raters[j].len() as f64)
            }
        })
        .collect();

    let distance = |a: usize, b: usize| -> f64 {
        let mut acc = 0.0;
        let mut overlap = 0usize;
        let (ma, mb) = (&masks[a], &masks[b]);
        for j in 0..n {
            if ma[j] && mb[j] {
                let d = values.get(a, j) - values.get(b, j);
                acc += d * d;
                overlap += 1;
            }
        }
        if overlap == 0 {
            f64::INFINITY
        } else {
            (acc / overlap as f64).sqrt()
        }
    };

    let mut out = values.clone();
    for i in 0..m {
        if masks[i].iter().all(|&obs| obs) {
            continue;
        }
        // neighbors of i sorted by (distance, index)
        let mut neighbors: Vec<(f64, usize)> = (0..m)
            .filter(|&u| u != i)
            .map(|u| (distance(i, u), u))
            .filter(|&(d, _)| d.is_finite())
            .collect();
        neighbors.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        for j in 0..n {
            if masks[i][j] {
                continue;
            }
            let mut picked = 0usize;
            let mut sum = 0.0;
            for &(_, u) in &neighbors {
                if masks[u][j] {
                    sum += values.get(u, j);
                    picked += 1;
                    if picked == k_neighbors {
                        break;
                    }
                }
            }
            let filled = if picked > 0 {
                sum / picked as f64
            } else if let Some(mean) = col_mean[j] {
                mean
            } else {
                global_mean
            };
            out.set(i, j, filled);
        }
    }
    Ok(out)
}

/// Disjoint train/test partition of an observed set.
#[derive(Clone, Debug)]
pub struct SplitMask {
    pub omega_train: IndexSet,
    pub omega_test: IndexSet,
    pub seed: u64,
    pub fraction: f64,
}

/// The matrix `x` with its observed set cut down to `omega ∩ observed`;
/// used to build the training matrix from a split mask.
pub fn restrict_observed(x: &RatingMatrix, omega: &IndexSet) -> Result<RatingMatrix> {
    let entries: Vec<(usize, usize, f64)> = x
        .observed()
        .iter()
        .filter(|&(i, j)| omega.contains(i, j))
        .map(|(i, j)| (i, j, x.values().get(i, j)))
        .collect();
    RatingMatrix::from_entries(x.m(), x.n(), &entries, x.scale())
}

/// Uniform random partition of `omega` with `round(fraction * |omega|)`
/// training entries.
pub fn train_test_split(omega: &IndexSet, fraction: f64, seed: u64) -> Result<SplitMask> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let mut indices: Vec<(usize, usize)> = omega.iter().collect();
    let mut rng = rng::seeded(seed);
    indices.shuffle(&mut rng);
    let n_train = (fraction * indices.len() as f64).round() as usize;
    let train = indices[..n_train].to_vec();
    let test = indices[n_train..].to_vec();
    Ok(SplitMask {
        omega_train: IndexSet::new(omega.rows(), omega.cols(), train)?,
        omega_test: IndexSet::new(omega.rows(), omega.cols(), test)?,
        seed,
        fraction,
    })
}

/// Parameters of the synthetic rating generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub mean: f64,
    pub std: f64,
    pub observed_fraction: f64,
    pub min_rating: f64,
    pub max_rating: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 2000,
            items: 200,
            mean: 3.5,
            std: 0.65,
            observed_fraction: 0.25,
            min_rating: 1.0,
            max_rating: 5.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.items == 0 {
            return Err(Error::Config("synthetic matrix must be non-empty".into()));
        }
        if !(self.std > 0.0) {
            return Err(Error::Config(format!(
                "synthetic std must be positive, got {}",
                self.std
            )));
        }
        if !(self.observed_fraction > 0.0 && self.observed_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "observed_fraction must lie in (0, 1], got {}",
                self.observed_fraction
            )));
        }
        if !(self.min_rating > 0.0 && self.min_rating < self.max_rating) {
            return Err(Error::Config(
                "rating bounds must satisfy 0 < min < max".into(),
            ));
        }
        Ok(())
    }
}

/// Draw a dense matrix of clipped normal ratings and keep each entry with
/// probability `observed_fraction`.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<RatingMatrix> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let mut entries = Vec::new();
    for i in 0..config.users {
        for j in 0..config.items {
            let value = (config.mean + config.std * rng::standard_normal(&mut rng))
                .clamp(config.min_rating, config.max_rating);
            let keep = rng.random::<f64>() < config.observed_fraction;
            if keep {
                entries.push((i, j, value));
            }
        }
    }
    RatingMatrix::from_entries(
        config.users,
        config.items,
        &entries,
        RatingScale {
            min: config.min_rating,
            max: config.max_rating,
        },
    )
}

const SNAPSHOT_MAGIC: &str = "GSI-MATRIX v1";

/// Write the canonical snapshot: a `GSI-MATRIX v1 m n |omega|` header, then
/// one `i j value` line per observed entry in row-major order with values
/// at 6 significant digits.
pub fn write_snapshot(x: &RatingMatrix, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "{SNAPSHOT_MAGIC} {} {} {}",
        x.m(),
        x.n(),
        x.observed().len()
    )?;
    for (i, j) in x.observed().iter() {
        writeln!(w, "{i} {j} {:.5e}", x.values().get(i, j))?;
    }
    Ok(())
}

/// Read a matrix snapshot produced by [`write_snapshot`].
pub fn read_snapshot(r: impl BufRead) -> Result<RatingMatrix> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("snapshot is empty".into()))??;
    let rest = header.strip_prefix(SNAPSHOT_MAGIC).ok_or_else(|| {
        Error::Data(format!(
            "snapshot header {header:?} is not {SNAPSHOT_MAGIC:?}"
        ))
    })?;
    let dims: Vec<usize> = rest
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Data(format!("bad snapshot header {header:?}: {e}")))?;
    let [m, n, count] = dims[..] else {
        return Err(Error::Data(format!(
            "snapshot header {header:?} must carry m, n and the entry count"
        )));
    };
    let mut entries = Vec::with_capacity(count);
    for (line_no, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut parse = || -> Option<(usize, usize, f64)> {
            let i = it.next()?.parse().ok()?;
            let j = it.next()?.parse().ok()?;
            let v = it.next()?.parse().ok()?;
            Some((i, j, v))
        };
        let Some((i, j, v)) = parse() else {
            return Err(Error::Data(format!(
                "snapshot line {} is malformed: {line:?}",
                line_no + 2
            )));
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Data(format!(
                "snapshot line {} holds non-positive value {v}",
                line_no + 2
            )));
        }
        entries.push((i, j, v));
    }
    if entries.len() != count {
        return Err(Error::Data(format!(
            "snapshot announced {count} entries but contains {}",
            entries.len()
        )));
    }
    // Snapshots can carry weighted or imputed values, so the scale is only
    // constrained from below by the zero-is-unobserved rule.
    RatingMatrix::from_entries(
        m,
        n,
        &entries,
        RatingScale {
            min: 0.0,
            max: f64::INFINITY,
        },
    )
}
