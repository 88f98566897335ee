//! Brute-force oracles for the integration suites.
//!
//! Everything here is deliberately independent of the library's numerical
//! paths: plain nested vectors, classical pivoted Jacobi on the Gram
//! matrix, Gaussian elimination, and direct enumeration. The only crate
//! types that appear are plain data containers at the call boundary.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

/// Small deterministic generator (SplitMix64) for test instances.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    vec![vec![0.0; cols]; rows]
}

pub fn random_mat(rng: &mut TestRng, rows: usize, cols: usize, lo: f64, hi: f64) -> Mat {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.range(lo, hi)).collect())
        .collect()
}

pub fn to_crate(m: &Mat) -> gsi_core::Matrix {
    gsi_core::Matrix::from_rows(m.clone())
}

pub fn from_crate(m: &gsi_core::Matrix) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    let (m, n) = (a.len(), a[0].len());
    let mut out = zeros(n, m);
    for i in 0..m {
        for j in 0..n {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (m, k, n) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(m, n);
    for i in 0..m {
        for p in 0..k {
            let aip = a[i][p];
            for j in 0..n {
                out[i][j] += aip * b[p][j];
            }
        }
    }
    out
}

pub fn frob(a: &Mat) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

/// Classical Jacobi eigensolve with largest-off-diagonal pivoting.
/// Returns eigenvalues (unsorted) and eigenvectors as columns.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut d: Mat = a.clone();
    let mut v = zeros(n, n);
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return ((0..n).map(|i| d[i][i]).collect(), v);
    }
    for _ in 0..200 * n * n {
        let mut p = 0;
        let mut q = 1;
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                if d[i][j].abs() > best {
                    best = d[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if best <= 1e-14 * scale {
            break;
        }
        let apq = d[p][q];
        let theta = (d[q][q] - d[p][p]) / (2.0 * apq);
        let t = if theta >= 0.0 {
            1.0 / (theta + (1.0 + theta * theta).sqrt())
        } else {
            -1.0 / (-theta + (1.0 + theta * theta).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        for k in 0..n {
            let dkp = d[k][p];
            let dkq = d[k][q];
            d[k][p] = c * dkp - s * dkq;
            d[k][q] = s * dkp + c * dkq;
        }
        for k in 0..n {
            let dpk = d[p][k];
            let dqk = d[q][k];
            d[p][k] = c * dpk - s * dqk;
            d[q][k] = s * dpk + c * dqk;
        }
        for row in v.iter_mut() {
            let vp = row[p];
            let vq = row[q];
            row[p] = c * vp - s * vq;
            row[q] = s * vp + c * vq;
        }
    }
    ((0..n).map(|i| d[i][i]).collect(), v)
}

/// Singular values of a dense matrix as square roots of the Gram
/// eigenvalues, sorted descending.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    let g = matmul(&transpose(a), a);
    let (eig, _) = sym_eigen(&g);
    let mut sv: Vec<f64> = eig.into_iter().map(|e| e.max(0.0).sqrt()).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn nuclear_norm(a: &Mat) -> f64 {
    singular_values(a).iter().sum()
}

/// Thin SVD through the Gram eigensolve: components above a relative floor.
pub fn svd_via_gram(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let m = a.len();
    let n = a[0].len();
    let g = matmul(&transpose(a), a);
    let (eig, vecs) = sym_eigen(&g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).unwrap());
    let smax = eig[order[0]].max(0.0).sqrt();
    let mut u: Mat = vec![Vec::new(); m];
    let mut sigma = Vec::new();
    let mut v: Mat = vec![Vec::new(); n];
    for &idx in &order {
        let s = eig[idx].max(0.0).sqrt();
        if s <= 1e-12 * smax {
            continue;
        }
        sigma.push(s);
        for (r, row) in v.iter_mut().enumerate() {
            row.push(vecs[r][idx]);
        }
        for (r, row) in u.iter_mut().enumerate() {
            let av: f64 = (0..n).map(|c| a[r][c] * vecs[c][idx]).sum();
            row.push(av / s);
        }
    }
    (u, sigma, v)
}

/// Soft-thresholded reconstruction built on the Gram-eigensolve SVD.
pub fn soft_threshold(a: &Mat, lambda: f64) -> Mat {
    let (u, sigma, v) = svd_via_gram(a);
    let m = a.len();
    let n = a[0].len();
    let mut out = zeros(m, n);
    for (k, &s) in sigma.iter().enumerate() {
        let shrunk = (s - lambda).max(0.0);
        if shrunk == 0.0 {
            continue;
        }
        for i in 0..m {
            let w = u[i][k] * shrunk;
            for j in 0..n {
                out[i][j] += w * v[j][k];
            }
        }
    }
    out
}

/// The completion objective Σ_Ω (x - z)^2 + lambda * ||z||_* computed from
/// scratch.
pub fn completion_objective(values: &Mat, mask: &[Vec<bool>], z: &Mat, lambda: f64) -> f64 {
    let mut fit = 0.0;
    for (i, row) in mask.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            if obs {
                let d = values[i][j] - z[i][j];
                fit += d * d;
            }
        }
    }
    fit + lambda * nuclear_norm(z)
}

/// Step-size-one proximal gradient on the completion objective: fill the
/// unobserved entries from the current estimate, then soft-threshold.
pub fn prox_gradient(values: &Mat, mask: &[Vec<bool>], lambda: f64, iters: usize, z0: &Mat) -> Mat {
    let mut z = z0.clone();
    for _ in 0..iters {
        let mut y = z.clone();
        for (i, row) in mask.iter().enumerate() {
            for (j, &obs) in row.iter().enumerate() {
                if obs {
                    y[i][j] = values[i][j];
                }
            }
        }
        z = soft_threshold(&y, lambda);
    }
    z
}

/// Ridge normal equations (AᵀA + lambda I) beta = Aᵀ y solved by Gaussian
/// elimination with partial pivoting.
pub fn ridge(a_rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Vec<f64> {
    let r = if a_rows.is_empty() {
        0
    } else {
        a_rows[0].len()
    };
    if r == 0 {
        return Vec::new();
    }
    let mut ata = zeros(r, r);
    let mut aty = vec![0.0; r];
    for (row, &yi) in a_rows.iter().zip(y) {
        for p in 0..r {
            aty[p] += row[p] * yi;
            for q in 0..r {
                ata[p][q] += row[p] * row[q];
            }
        }
    }
    for (p, row) in ata.iter_mut().enumerate() {
        row[p] += lambda;
    }
    gauss_solve(&mut ata, &mut aty);
    aty
}

fn gauss_solve(a: &mut Mat, b: &mut [f64]) {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in (col + 1)..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * b[k];
        }
        b[row] = acc / a[row][row];
    }
}

/// Brute-force nearest-neighbor imputation following the masked-distance
/// definition: per missing cell, enumerate every candidate rater, sort by
/// (distance, index), average the nearest k, then fall back to the item
/// mean and the global mean.
pub fn knn_oracle(values: &Mat, mask: &[Vec<bool>], k: usize) -> Mat {
    let m = values.len();
    let n = values[0].len();
    let dist = |a: usize, b: usize| -> f64 {
        let mut acc = 0.0;
        let mut overlap = 0usize;
        for j in 0..n {
            if mask[a][j] && mask[b][j] {
                let d = values[a][j] - values[b][j];
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
    let mut col_mean = vec![None; n];
    for j in 0..n {
        let rated: Vec<f64> = (0..m)
            .filter(|&i| mask[i][j])
            .map(|i| values[i][j])
            .collect();
        if !rated.is_empty() {
            col_mean[j] = Some(rated.iter().sum::<f64>() / rated.len() as f64);
        }
    }
    let observed: Vec<f64> = (0..m)
        .flat_map(|i| (0..n).filter(move |&j| mask[i][j]).map(move |j| (i, j)))
        .map(|(i, j)| values[i][j])
        .collect();
    let global_mean = if observed.is_empty() {
        0.0
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };

    let mut out = values.to_vec();
    for i in 0..m {
        for j in 0..n {
            if mask[i][j] {
                continue;
            }
            let mut raters: Vec<(f64, usize)> = (0..m)
                .filter(|&u| u != i && mask[u][j])
                .map(|u| (dist(i, u), u))
                .filter(|&(d, _)| d.is_finite())
                .collect();
            raters.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            out[i][j] = if !raters.is_empty() {
                let take = raters.len().min(k);
                raters[..take]
                    .iter()
                    .map(|&(_, u)| values[u][j])
                    .sum::<f64>()
                    / take as f64
            } else if let Some(mean) = col_mean[j] {
                mean
            } else {
                global_mean
            };
        }
    }
    out
}
