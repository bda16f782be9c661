//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

/// Largest eigenvalue of `XᵀX / n` by power iteration.
///
/// Iterates on the smaller of the two Gram matrices implicitly, so the cost
/// per step is two matrix-vector products with `X`. Stops after `max_iter`
/// steps or when the Rayleigh quotient changes by less than `rel_tol`.
pub fn gram_lambda_max(x: &DMatrix<f64>, max_iter: usize, rel_tol: f64) -> f64 {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return 0.0;
    }
    // Deterministic, non-degenerate start vector.
    let mut v = DVector::from_fn(p, |j, _| 1.0 + 0.01 * ((j % 7) as f64));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let xv = x * &v;
        let w = x.tr_mul(&xv) / n as f64;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// Power-iteration estimate with the fixed 30-step budget used for the
/// default gradient-descent step size.
pub fn gram_lambda_max_quick(x: &DMatrix<f64>) -> f64 {
    gram_lambda_max(x, 30, 0.0)
}

/// `Xᵀ r / n`.
pub fn scaled_xt(x: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    x.tr_mul(r) / n
}

/// `θ_s(v)`: the `s`-th largest absolute component (1-based `s`).
/// Returns 0 for `s == 0` or `s > len`.
pub fn theta(values: impl IntoIterator<Item = f64>, s: usize) -> f64 {
    if s == 0 {
        return 0.0;
    }
    let mut abs: Vec<f64> = values.into_iter().map(f64::abs).collect();
    if s > abs.len() {
        return 0.0;
    }
    abs.sort_by(|a, b| b.total_cmp(a));
    abs[s - 1]
}

pub fn l1_norm(v: &DVector<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Median of a non-empty slice (average of the two middle values for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
