//! Small dense solvers used by the weighted regressions.
//!
//! Problem sizes are tiny (a few dozen coefficients at most), so a plain
//! Cholesky factorization of the normal equations is sufficient.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Result, RomeError};

/// Solves the symmetric positive definite system `a x = b` by Cholesky
/// factorization. `a` is not checked for symmetry; only its lower
/// triangle is read.
pub fn cholesky_solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(RomeError::DimensionMismatch(format!(
            "cholesky_solve: matrix {}x{}, rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(RomeError::Numerical(format!(
                        "matrix not positive definite (pivot {i} = {sum:e})"
                    )));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    // forward then backward substitution
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    Ok(x)
}

/// Weighted least squares: minimizes `Σ_i w_i (y_i - x_i^T beta)^2` through
/// the normal equations, with `ridge * I` added to the Gram matrix.
///
/// `weights = None` means unit weights (ordinary least squares).
pub fn weighted_least_squares(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    weights: Option<ArrayView1<f64>>,
    ridge: f64,
) -> Result<Array1<f64>> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(RomeError::DimensionMismatch(format!(
            "weighted_least_squares: {} rows vs {} responses",
            n,
            y.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(RomeError::DimensionMismatch(format!(
                "weighted_least_squares: {} rows vs {} weights",
                n,
                w.len()
            )));
        }
    }
    let mut gram = Array2::<f64>::zeros((p, p));
    let mut rhs = Array1::<f64>::zeros(p);
    for i in 0..n {
        let wi = weights.map_or(1.0, |w| w[i]);
        if wi == 0.0 {
            continue;
        }
        let row = x.row(i);
        for a in 0..p {
            let wa = wi * row[a];
            rhs[a] += wa * y[i];
            for b in 0..=a {
                gram[(a, b)] += wa * row[b];
            }
        }
    }
    // mirror the lower triangle and apply the ridge
    for a in 0..p {
        gram[(a, a)] += ridge;
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    cholesky_solve(&gram, &rhs)
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub fn spectral_radius(a: &Array2<f64>, iterations: usize) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Array1::<f64>::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let av = a.dot(&v);
        let norm = av.dot(&av).sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        v = av / norm;
        lambda = v.dot(&a.dot(&v));
    }
    lambda
}
