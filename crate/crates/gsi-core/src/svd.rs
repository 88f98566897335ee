//! Full dense SVD and the soft-thresholding operator on singular values.
//!
//! The decomposition is a one-sided Jacobi SVD: columns of the working
//! matrix are rotated in pairs until they are mutually orthogonal, at which
//! point the column norms are the singular values. A symmetric Jacobi
//! eigensolve of the Gram matrix seeds the rotations, so the one-sided
//! sweeps normally finish in one or two passes. Everything is deterministic:
//! fixed sweep order, fixed tie-breaking, and a fixed sign convention.

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, Matrix};

/// Sweep cap factor: the solver gives up after `100 * min(m, n)` sweeps.
const SWEEP_CAP_FACTOR: usize = 100;

/// Convergence threshold on the off-diagonal of the implicit Gram matrix,
/// relative to the participating column norms.
const JACOBI_TOL: f64 = 1e-12;

/// Sweep cap for the Gram preconditioner; it only needs to get close.
const PRECOND_SWEEP_CAP: usize = 20;

/// Singular values below this fraction of the largest one are treated as
/// zero when reporting rank: the floating-point noise floor.
pub const RANK_FLOOR_REL: f64 = 1e-10;

/// Thin SVD factors `x = u * diag(sigma) * vᵀ`.
///
/// For a full decomposition of an m×n input, `u` is m×p and `v` is n×p with
/// p = min(m, n), both with orthonormal columns, and `sigma` is nonnegative
/// and non-increasing. Reduced factor sets (p < min(m, n)) appear inside
/// [`ThresholdedMatrix`].
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    /// Materialize `u * diag(sigma) * vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        reconstruct(&self.u, &self.sigma, &self.v)
    }
}

/// Result of soft-thresholding the singular values of a matrix.
#[derive(Clone, Debug)]
pub struct ThresholdedMatrix {
    /// The reconstruction from the retained components only.
    pub z: Matrix,
    /// Number of singular values still positive after shrinkage (values
    /// below the noise floor count as zero).
    pub rank: usize,
    /// Sum of the retained shrunken singular values.
    pub nuclear_norm: f64,
    /// Reduced factors: u is m×rank, sigma has rank entries, v is n×rank.
    pub factors: SvdFactors,
}

/// Full SVD of a dense matrix.
///
/// Singular values come back sorted descending. Signs are fixed so that the
/// largest-magnitude entry of each left singular vector is positive (first
/// such entry wins on ties), which makes results byte-reproducible.
pub fn svd(x: &Matrix) -> Result<SvdFactors> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::DegenerateInput("svd of an empty matrix".into()));
    }
    if !x.is_finite() {
        return Err(Error::NumericalFailure(
            "svd input contains non-finite entries".into(),
        ));
    }
    let mut factors = if x.rows() >= x.cols() {
        svd_tall(x)?
    } else {
        // X = (Xᵀ)ᵀ = (U'ΣV'ᵀ)ᵀ with the roles of the factor pair swapped.
        let t = svd_tall(&x.transpose())?;
        SvdFactors {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        }
    };
    orient_signs(&mut factors);
    Ok(factors)
}

/// One-sided Jacobi on an m×n matrix with m >= n.
fn svd_tall(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.dim();
    debug_assert!(m >= n);

    let a_cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();

    // Seed rotations with the eigenvectors of AᵀA.
    let v0 = sym_jacobi_eigvecs(&a.gram(), PRECOND_SWEEP_CAP);

    // b_j = A · v0_j; after preconditioning these are nearly orthogonal.
    let mut b: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut col = vec![0.0; m];
            for (k, a_col) in a_cols.iter().enumerate() {
                let w = v0[j][k];
                if w != 0.0 {
                    axpy(w, a_col, &mut col);
                }
            }
            col
        })
        .collect();
    let mut v = v0;

    // Columns whose norm falls to the roundoff floor carry no usable
    // direction; park them at exact zero so noise never drives rotations.
    let scale2 = b.iter().map(|col| dot(col, col)).fold(0.0f64, f64::max);
    let park_floor2 = scale2 * 1e-28;

    let cap = SWEEP_CAP_FACTOR * n;
    let mut converged = false;
    let mut norms2 = vec![0.0f64; n];
    for _sweep in 0..cap {
        // Refresh cached norms each sweep so the O(1) updates cannot drift.
        for (j, col) in b.iter_mut().enumerate() {
            let n2 = dot(col, col);
            if n2 <= park_floor2 && n2 != 0.0 {
                col.iter_mut().for_each(|x| *x = 0.0);
                norms2[j] = 0.0;
            } else {
                norms2[j] = n2;
            }
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let alpha = norms2[p];
                let beta = norms2[q];
                if alpha <= 0.0 || beta <= 0.0 {
                    continue;
                }
                let gamma = dot(&b[p], &b[q]);
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                if s == 0.0 {
                    // Rotation is below one ulp; nothing would change.
                    continue;
                }
                rotated = true;
                rotate_pair(&mut b, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
                norms2[p] = (alpha - t * gamma).max(0.0);
                norms2[q] = beta + t * gamma;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "one-sided Jacobi SVD did not converge within {cap} sweeps"
        )));
    }

    // Column norms are the singular values; sort descending, ties by the
    // original column index so the ordering is reproducible.
    let sig: Vec<f64> = b.iter().map(|col| dot(col, col).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap().then(i.cmp(&j)));

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut zero_cols = Vec::new();
    for (out_j, &src) in order.iter().enumerate() {
        let s = sig[src];
        sigma.push(s);
        for r in 0..n {
            vm.set(r, out_j, v[src][r]);
        }
        if s > 0.0 {
            let inv = 1.0 / s;
            for r in 0..m {
                u.set(r, out_j, b[src][r] * inv);
            }
        } else {
            zero_cols.push(out_j);
        }
    }
    complete_orthonormal(&mut u, &zero_cols);

    Ok(SvdFactors { u, sigma, v: vm })
}

/// Apply the (p, q) plane rotation to a pair of stored columns.
fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    debug_assert!(p < q);
    let (head, tail) = cols.split_at_mut(q);
    let bp = &mut head[p];
    let bq = &mut tail[0];
    for (xp, xq) in bp.iter_mut().zip(bq.iter_mut()) {
        let vp = *xp;
        let vq = *xq;
        *xp = c * vp - s * vq;
        *xq = s * vp + c * vq;
    }
}

/// Cyclic symmetric Jacobi eigensolve; returns the accumulated rotations as
/// columns. Used as a preconditioner, so hitting the sweep cap is fine.
fn sym_jacobi_eigvecs(g: &Matrix, max_sweeps: usize) -> Vec<Vec<f64>> {
    let n = g.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| g.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let scale = a[p][p].abs() + a[q][q].abs();
                if apq.abs() <= 1e-14 * scale || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // rows p and q
                for k in 0..n {
                    let akp = a[p][k];
                    let akq = a[q][k];
                    a[p][k] = c * akp - s * akq;
                    a[q][k] = s * akp + c * akq;
                }
                // columns p and q
                for row in a.iter_mut() {
                    let akp = row[p];
                    let akq = row[q];
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

/// Fill exactly-zero singular vector slots with a deterministic orthonormal
/// completion (Gram-Schmidt over the standard basis).
fn complete_orthonormal(u: &mut Matrix, zero_cols: &[usize]) {
    if zero_cols.is_empty() {
        return;
    }
    let (m, p) = u.dim();
    let filled: Vec<usize> = (0..p).filter(|j| !zero_cols.contains(j)).collect();
    let mut done: Vec<usize> = filled;
    let mut candidate = 0usize;
    for &jz in zero_cols {
        loop {
            assert!(candidate < m, "ran out of basis candidates");
            let mut vec: Vec<f64> = vec![0.0; m];
            vec[candidate] = 1.0;
            candidate += 1;
            for &jf in &done {
                let proj: f64 = (0..m).map(|i| vec[i] * u.get(i, jf)).sum();
                for (i, vi) in vec.iter_mut().enumerate() {
                    *vi -= proj * u.get(i, jf);
                }
            }
            let norm = dot(&vec, &vec).sqrt();
            if norm > 0.5 {
                for (i, vi) in vec.iter().enumerate() {
                    u.set(i, jz, vi / norm);
                }
                done.push(jz);
                break;
            }
        }
    }
}

/// Flip signs so the largest-magnitude entry of each left singular vector is
/// positive; the matching right vector is flipped with it.
fn orient_signs(f: &mut SvdFactors) {
    let (m, p) = f.u.dim();
    let n = f.v.rows();
    for j in 0..p {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for i in 0..m {
            let a = f.u.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if f.u.get(best, j) < 0.0 {
            for i in 0..m {
                let v = f.u.get(i, j);
                f.u.set(i, j, -v);
            }
            for i in 0..n {
                let v = f.v.get(i, j);
                f.v.set(i, j, -v);
            }
        }
    }
}

/// `u * diag(sigma) * vᵀ` from reduced factors (u: m×r, v: n×r).
pub(crate) fn reconstruct(u: &Matrix, sigma: &[f64], v: &Matrix) -> Matrix {
    let m = u.rows();
    let n = v.rows();
    let r = sigma.len();
    debug_assert_eq!(u.cols(), r);
    debug_assert_eq!(v.cols(), r);
    let mut out = Matrix::zeros(m, n);
    for k in 0..r {
        if sigma[k] == 0.0 {
            continue;
        }
        let vcol = v.col(k);
        for i in 0..m {
            let w = u.get(i, k) * sigma[k];
            axpy(w, &vcol, out.row_mut(i));
        }
    }
    out
}

/// Soft-threshold the singular values of `x`: keep the components whose
/// shrunken value `(sigma_i - lambda)_+` stays above the noise floor and
/// rebuild the matrix from those components alone.
pub fn soft_threshold_svd(x: &Matrix, lambda: f64) -> Result<ThresholdedMatrix> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!(
            "soft-threshold level must be a nonnegative real, got {lambda}"
        )));
    }
    let f = svd(x)?;
    let shrunk: Vec<f64> = f.sigma.iter().map(|&s| (s - lambda).max(0.0)).collect();
    let smax = shrunk.first().copied().unwrap_or(0.0);
    let floor = RANK_FLOOR_REL * smax;
    // shrunk is non-increasing because sigma is
    let rank = shrunk.iter().take_while(|&&s| s > floor && s > 0.0).count();
    let sigma_r: Vec<f64> = shrunk[..rank].to_vec();
    // an empty f64 sum is -0.0, which would leak into printed output
    let nuclear_norm: f64 = if sigma_r.is_empty() {
        0.0
    } else {
        sigma_r.iter().sum()
    };

    let m = f.u.rows();
    let n = f.v.rows();
    let mut u_r = Matrix::zeros(m, rank);
    let mut v_r = Matrix::zeros(n, rank);
    for k in 0..rank {
        for i in 0..m {
            u_r.set(i, k, f.u.get(i, k));
        }
        for i in 0..n {
            v_r.set(i, k, f.v.get(i, k));
        }
    }
    let z = reconstruct(&u_r, &sigma_r, &v_r);
    Ok(ThresholdedMatrix {
        z,
        rank,
        nuclear_norm,
        factors: SvdFactors {
            u: u_r,
            sigma: sigma_r,
            v: v_r,
        },
    })
}

/// Nuclear norm: the sum of the singular values.
pub fn nuclear_norm(x: &Matrix) -> Result<f64> {
    Ok(svd(x)?.sigma.iter().sum())
}

/// Count of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(sigma: &[f64], rel_tol: f64) -> usize {
    let smax = sigma.iter().fold(0.0f64, |a, &s| a.max(s));
    if smax <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > rel_tol * smax).count()
}
