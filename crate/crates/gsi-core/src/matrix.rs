//! Dense row-major matrices, observed-index sets, and the projection
//! operators onto observed and unobserved entries.
//!
//! A partially observed rating matrix is stored densely with unobserved
//! entries held at 0, together with an explicit index set of the observed
//! positions. All types are immutable after construction.

use crate::error::{Error, Result};

/// Dense real matrix with row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from nested rows; panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in &rows {
            assert_eq!(row.len(), ncols, "ragged row in Matrix::from_rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Elementwise difference `self - other`.
    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim(), other.dim());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// `self * other`, shapes (m,k)·(k,n) -> (m,n).
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            // split: out is borrowed mutably row-wise
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in a_row.iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), out_row);
                }
            }
        }
        out
    }

    /// Gram matrix `selfᵀ·self` (cols × cols), exploiting symmetry.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row(i);
            for p in 0..n {
                let v = row[p];
                if v != 0.0 {
                    let grow = &mut g.data[p * n..(p + 1) * n];
                    for q in p..n {
                        grow[q] += v * row[q];
                    }
                }
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let v = g.get(p, q);
                g.set(q, p, v);
            }
        }
        g
    }
}

/// Dot product with four accumulators so the compiler can keep the
/// floating-point pipeline busy; summation order is fixed and deterministic.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4 * 4;
    let mut i = 0;
    while i < chunks {
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < a.len() {
        tail += a[i] * b[i];
        i += 1;
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// `y += alpha * x`.
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Set of observed (row, col) positions of an m×n matrix.
///
/// Indices are kept sorted in row-major order with a dense membership mask
/// alongside, so iteration is deterministic and membership tests are O(1).
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    indices: Vec<(usize, usize)>,
}

impl IndexSet {
    pub fn new(rows: usize, cols: usize, mut indices: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &indices {
            if i >= rows || j >= cols {
                return Err(Error::Data(format!(
                    "index ({i}, {j}) out of bounds for {rows}x{cols} matrix"
                )));
            }
        }
        indices.sort_unstable();
        indices.dedup();
        let mut mask = vec![false; rows * cols];
        for &(i, j) in &indices {
            mask[i * cols + j] = true;
        }
        Ok(IndexSet {
            rows,
            cols,
            mask,
            indices,
        })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        IndexSet {
            rows,
            cols,
            mask: vec![false; rows * cols],
            indices: Vec::new(),
        }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        let mut indices = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                indices.push((i, j));
            }
        }
        IndexSet {
            rows,
            cols,
            mask: vec![true; rows * cols],
            indices,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.cols + j]
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Observed positions in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices.iter().copied()
    }

    pub fn indices(&self) -> &[(usize, usize)] {
        &self.indices
    }

    pub(crate) fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Declared rating bounds. Zero is reserved as the unobserved marker, so
/// observed values must be strictly positive regardless of the bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl RatingScale {
    /// The 1-5 scale used by the book and movie rating datasets.
    pub const STANDARD: RatingScale = RatingScale { min: 1.0, max: 5.0 };

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v > 0.0 && v >= self.min && v <= self.max
    }
}

/// Partially observed m×n rating matrix.
///
/// Entries outside the observed set are stored as literal 0 (the projection
/// convention), which is why a rating of exactly 0 is never a valid value.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingMatrix {
    values: Matrix,
    observed: IndexSet,
    scale: RatingScale,
}

impl RatingMatrix {
    /// Validating constructor: dims must match, unobserved entries must be
    /// exactly 0, and observed entries must lie within `scale`.
    pub fn new(values: Matrix, observed: IndexSet, scale: RatingScale) -> Result<Self> {
        if values.dim() != (observed.rows(), observed.cols()) {
            return Err(Error::Data(format!(
                "value shape {:?} does not match index set shape {:?}",
                values.dim(),
                (observed.rows(), observed.cols())
            )));
        }
        for i in 0..values.rows() {
            for j in 0..values.cols() {
                let v = values.get(i, j);
                if observed.contains(i, j) {
                    if !scale.contains(v) {
                        return Err(Error::Data(format!(
                            "observed rating {v} at ({i}, {j}) outside scale [{}, {}]",
                            scale.min, scale.max
                        )));
                    }
                } else if v != 0.0 {
                    return Err(Error::Data(format!(
                        "unobserved entry ({i}, {j}) holds {v}, expected 0"
                    )));
                }
            }
        }
        Ok(RatingMatrix {
            values,
            observed,
            scale,
        })
    }

    /// Build from (row, col, value) triplets. Later duplicates win.
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: &[(usize, usize, f64)],
        scale: RatingScale,
    ) -> Result<Self> {
        let mut values = Matrix::zeros(rows, cols);
        let mut indices = Vec::with_capacity(entries.len());
        for &(i, j, v) in entries {
            if i >= rows || j >= cols {
                return Err(Error::Data(format!(
                    "entry ({i}, {j}) out of bounds for {rows}x{cols} matrix"
                )));
            }
            values.set(i, j, v);
            indices.push((i, j));
        }
        let observed = IndexSet::new(rows, cols, indices)?;
        RatingMatrix::new(values, observed, scale)
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn observed(&self) -> &IndexSet {
        &self.observed
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    /// P_Ω(X): the stored values on Ω and 0 elsewhere. Because of the
    /// storage convention this equals the dense value array.
    pub fn project_observed(&self) -> Matrix {
        self.values.clone()
    }
}

/// P_Ω^⊥(X): zero out the entries listed in `omega`, keep the rest,
/// so that `project_observed + project_unobserved` reassembles the input.
pub fn project_unobserved(x: &Matrix, omega: &IndexSet) -> Matrix {
    assert_eq!(x.dim(), (omega.rows(), omega.cols()));
    let mut out = x.clone();
    for (v, &observed) in out.data_mut().iter_mut().zip(omega.mask()) {
        if observed {
            *v = 0.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> RatingMatrix {
        RatingMatrix::from_entries(2, 2, &[(0, 0, 4.0), (1, 1, 2.0)], RatingScale::STANDARD)
            .unwrap()
    }

    #[test]
    fn project_observed_keeps_omega_and_zeroes_rest() {
        let x = two_by_two();
        let p = x.project_observed();
        assert_eq!(p, Matrix::from_rows(vec![vec![4.0, 0.0], vec![0.0, 2.0]]));
    }

    #[test]
    fn project_observed_full_omega_is_identity() {
        let values = Matrix::from_rows(vec![vec![4.0, 3.0], vec![2.0, 1.0]]);
        let x =
            RatingMatrix::new(values.clone(), IndexSet::full(2, 2), RatingScale::STANDARD).unwrap();
        assert_eq!(x.project_observed(), values);
    }

    #[test]
    fn project_observed_empty_omega_is_zero() {
        let x = RatingMatrix::new(
            Matrix::zeros(2, 3),
            IndexSet::empty(2, 3),
            RatingScale::STANDARD,
        )
        .unwrap();
        assert_eq!(x.project_observed(), Matrix::zeros(2, 3));
    }

    #[test]
    fn project_unobserved_complements_omega() {
        let x = Matrix::from_rows(vec![vec![4.0, 7.0], vec![3.0, 2.0]]);
        let omega = IndexSet::new(2, 2, vec![(0, 0), (1, 1)]).unwrap();
        let out = project_unobserved(&x, &omega);
        assert_eq!(out, Matrix::from_rows(vec![vec![0.0, 7.0], vec![3.0, 0.0]]));
    }

    #[test]
    fn project_unobserved_full_omega_is_zero() {
        let x = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(
            project_unobserved(&x, &IndexSet::full(2, 2)),
            Matrix::zeros(2, 2)
        );
    }

    #[test]
    fn projections_partition_the_matrix() {
        // P_Ω(X) + P_Ω^⊥(X) = X on a 5x4 instance.
        let x = Matrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let omega =
            IndexSet::new(5, 4, vec![(0, 0), (1, 2), (2, 3), (3, 1), (4, 0), (4, 3)]).unwrap();
        let mut kept = project_unobserved(&x, &omega);
        for (i, j) in omega.iter() {
            let v = kept.get(i, j) + x.get(i, j);
            kept.set(i, j, v);
        }
        assert_eq!(kept, x);
    }

    #[test]
    fn rating_matrix_rejects_out_of_scale_values() {
        let err = RatingMatrix::from_entries(1, 1, &[(0, 0, 7.0)], RatingScale::STANDARD);
        assert!(err.is_err());
        let err = RatingMatrix::from_entries(1, 1, &[(0, 0, 0.0)], RatingScale::STANDARD);
        assert!(err.is_err(), "zero is the unobserved marker, not a rating");
    }

    #[test]
    fn rating_matrix_rejects_out_of_bounds_indices() {
        assert!(RatingMatrix::from_entries(2, 2, &[(2, 0, 3.0)], RatingScale::STANDARD).is_err());
    }

    #[test]
    fn index_set_dedups_and_sorts() {
        let s = IndexSet::new(3, 3, vec![(2, 1), (0, 0), (2, 1), (1, 2)]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.indices(), &[(0, 0), (1, 2), (2, 1)]);
        assert!(s.contains(2, 1));
        assert!(!s.contains(1, 1));
    }

    #[test]
    fn duplicate_entries_keep_last_value() {
        let x =
            RatingMatrix::from_entries(1, 2, &[(0, 0, 2.0), (0, 0, 5.0)], RatingScale::STANDARD)
                .unwrap();
        assert_eq!(x.values().get(0, 0), 5.0);
        assert_eq!(x.observed().len(), 1);
    }

    #[test]
    fn matmul_and_gram_agree_with_definition() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let b = Matrix::from_rows(vec![vec![7.0, 8.0], vec![9.0, 10.0]]);
        let ab = a.matmul(&b);
        assert_eq!(
            ab,
            Matrix::from_rows(vec![vec![25.0, 28.0], vec![57.0, 64.0], vec![89.0, 100.0]])
        );
        let g = a.gram();
        assert_eq!(g, a.transpose().matmul(&a));
    }
}
