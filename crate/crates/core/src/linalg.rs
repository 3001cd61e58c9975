//! Small dense symmetric solves (row-major `n × n`).

use crate::scalar::Real;

/// Cholesky factor L (lower, row-major) of a symmetric positive-definite matrix.
///
/// Returns `None` when a pivot falls below `rel_tol` times the largest diagonal entry.
pub fn cholesky<T: Real>(a: &[T], n: usize, rel_tol: T) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let floor = rel_tol * max_diag;
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > floor) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves L·Lᵀ·x = b in place.
pub fn cholesky_solve<T: Real>(l: &[T], n: usize, b: &mut [T]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Inverse of an SPD matrix from its Cholesky factor.
pub fn cholesky_inverse<T: Real>(l: &[T], n: usize) -> Vec<T> {
    let mut inv = vec![T::zero(); n * n];
    let mut col = vec![T::zero(); n];
    for j in 0..n {
        col.iter_mut().for_each(|c| *c = T::zero());
        col[j] = T::one();
        cholesky_solve(l, n, &mut col);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    // Symmetrize against rounding.
    for i in 0..n {
        for j in 0..i {
            let m = (inv[i * n + j] + inv[j * n + i]) * T::lit(0.5);
            inv[i * n + j] = m;
            inv[j * n + i] = m;
        }
    }
    inv
}

/// Weighted linear least squares: minimizes Σ wᵢ²(yᵢ − Σⱼ Aᵢⱼ xⱼ)².
///
/// `columns` holds the basis functions sampled at the data points. Returns the
/// coefficients and the inverse normal matrix (the covariance for unit-variance weights).
pub fn weighted_lstsq(columns: &[&[f64]], y: &[f64], w: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = columns.len();
    let mut ata = vec![0.0; n * n];
    let mut atb = vec![0.0; n];
    for i in 0..y.len() {
        let wi2 = w[i] * w[i];
        for a in 0..n {
            let ca = columns[a][i];
            atb[a] += wi2 * ca * y[i];
            for b in 0..=a {
                ata[a * n + b] += wi2 * ca * columns[b][i];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            ata[b * n + a] = ata[a * n + b];
        }
    }
    // Equilibrate so the pivot test is scale free.
    let d: Vec<f64> = (0..n).map(|i| ata[i * n + i].sqrt().max(f64::MIN_POSITIVE)).collect();
    let mut scaled = ata.clone();
    for a in 0..n {
        for b in 0..n {
            scaled[a * n + b] /= d[a] * d[b];
        }
    }
    let l = cholesky(&scaled, n, 1e-14)?;
    let mut x: Vec<f64> = (0..n).map(|i| atb[i] / d[i]).collect();
    cholesky_solve(&l, n, &mut x);
    let mut cov = cholesky_inverse(&l, n);
    for a in 0..n {
        x[a] /= d[a];
        for b in 0..n {
            cov[a * n + b] /= d[a] * d[b];
        }
    }
    Some((x, cov))
}

/// Median of a slice (mean of the two central values for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
