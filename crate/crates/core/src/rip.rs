//! Lower bounds on the restricted isometry constant of a design.
//!
//! For a support `T` with `|T| = s`, the local isometry defect is the spectral
//! radius of `X_Tᵀ X_T / n − I`. The RIP constant `δ_s` is the maximum defect
//! over all supports; we evaluate it exactly when the number of supports fits
//! the budget and otherwise report the maximum over a seeded random sample.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::design::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub sparsity: usize,
    /// Largest isometry defect seen. Exceeds 1 only for badly scaled designs.
    pub delta_lower: f64,
    pub supports_tested: usize,
    /// Every support of size `s` was evaluated, so `delta_lower` equals `δ_s`.
    pub exhaustive: bool,
    /// Support attaining `delta_lower`.
    pub worst_support: Vec<usize>,
}

/// `C(p, s)`, saturating at `u128::MAX`.
pub fn binomial(p: usize, s: usize) -> u128 {
    if s > p {
        return 0;
    }
    let s = s.min(p - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = match acc.checked_mul((p - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Spectral radius of `X_Tᵀ X_T / n − I`.
pub fn isometry_defect(x: &DMatrix<f64>, support: &[usize]) -> f64 {
    let sub = x.select_columns(support.iter());
    let n = x.nrows() as f64;
    let mut gram = sub.tr_mul(&sub) / n;
    for i in 0..support.len() {
        gram[(i, i)] -= 1.0;
    }
    gram.symmetric_eigenvalues().amax()
}

pub fn estimate_rip(ds: &Dataset, s: usize, budget: usize, seed: u64) -> Result<RipEstimate> {
    let p = ds.p();
    if s == 0 || s > p {
        return Err(Error::Config(format!("sparsity s = {s} must lie in [1, p = {p}]")));
    }
    if budget == 0 {
        return Err(Error::Config("RIP budget must be at least 1".into()));
    }
    let x = ds.x();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut consider = |support: &[usize]| {
        let d = isometry_defect(x, support);
        if d > best.0 {
            best = (d, support.to_vec());
        }
    };

    let total = binomial(p, s);
    let (tested, exhaustive) = if total <= budget as u128 {
        let mut support: Vec<usize> = (0..s).collect();
        let mut count = 0;
        loop {
            consider(&support);
            count += 1;
            if !next_combination(&mut support, p) {
                break;
            }
        }
        (count, true)
    } else {
        let mut rng = rng_from_seed(seed);
        for _ in 0..budget {
            let mut support = sample(&mut rng, p, s).into_vec();
            support.sort_unstable();
            consider(&support);
        }
        (budget, false)
    };
    Ok(RipEstimate {
        sparsity: s,
        delta_lower: best.0.max(0.0),
        supports_tested: tested,
        exhaustive,
        worst_support: best.1,
    })
}

/// Advances `c` to the next `s`-subset of `0..p` in lexicographic order.
fn next_combination(c: &mut [usize], p: usize) -> bool {
    let s = c.len();
    let mut i = s;
    while i > 0 {
        i -= 1;
        if c[i] < p - s + i {
            c[i] += 1;
            for k in i + 1..s {
                c[k] = c[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_design, Covariance, CovarianceSpec};
    use nalgebra::DVector;

    fn dataset(x: DMatrix<f64>) -> Dataset {
        let n = x.nrows();
        Dataset::new(x, DVector::zeros(n)).unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(5000, 2500), u128::MAX);
    }

    #[test]
    fn combinations_enumerate_all_subsets() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(c, vec![3, 4]);
    }

    #[test]
    fn orthogonal_design_has_zero_defect() {
        // Columns of a scaled identity have norm √n and are orthogonal.
        let n = 5;
        let x = DMatrix::identity(n, n) * (n as f64).sqrt();
        let est = estimate_rip(&dataset(x), 3, 1000, 0).unwrap();
        assert!(est.exhaustive);
        assert!(est.delta_lower < 1e-12);
    }

    #[test]
    fn duplicated_column_breaks_isometry() {
        let spec = CovarianceSpec::new(Covariance::Identity, 4).unwrap();
        let mut x = generate_design(50, &spec, 3).unwrap();
        let first = x.column(0).into_owned();
        x.set_column(1, &first);
        let est = estimate_rip(&dataset(x), 2, 100, 0).unwrap();
        assert!(est.delta_lower >= 1.0 - 1e-12, "{}", est.delta_lower);
    }

    #[test]
    fn sampled_bound_is_monotone_in_budget() {
        let spec = CovarianceSpec::new(Covariance::Identity, 40).unwrap();
        let ds = dataset(generate_design(30, &spec, 8).unwrap());
        let small = estimate_rip(&ds, 3, 20, 9).unwrap();
        let large = estimate_rip(&ds, 3, 200, 9).unwrap();
        assert!(!small.exhaustive && !large.exhaustive);
        assert!(small.delta_lower <= large.delta_lower);
    }

    #[test]
    fn invalid_sparsity_is_rejected() {
        let ds = dataset(DMatrix::identity(3, 3));
        assert!(estimate_rip(&ds, 0, 10, 0).is_err());
        assert!(estimate_rip(&ds, 4, 10, 0).is_err());
        assert!(estimate_rip(&ds, 1, 0, 0).is_err());
    }
}
