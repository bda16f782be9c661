//! Regression problems: datasets, ground truth, synthetic Gaussian designs,
//! column normalization, correlation screening and row splitting.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::theta;
use crate::seed::rng_from_seed;

/// Relative tolerance used to decide that a column already has norm `√n`.
const NORMALIZED_RTOL: f64 = 1e-8;

/// A design matrix with its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    /// ℓ2 norms of the columns as they were before any normalization.
    column_norms: DVector<f64>,
    normalized: bool,
    names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                x_rows: x.nrows(),
                y_len: y.len(),
            });
        }
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "design must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        for (col, column) in x.column_iter().enumerate() {
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "design", row, col });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "response", row, col: 0 });
        }
        let column_norms = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.norm()));
        Ok(Self {
            x,
            y,
            column_norms,
            normalized: false,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Dimension(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_norms(&self) -> &DVector<f64> {
        &self.column_norms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Dataset restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset {
            x,
            y,
            column_norms: self.column_norms.clone(),
            normalized: self.normalized,
            names: self.names.clone(),
        }
    }

    /// Dataset restricted to the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_columns(cols.iter()),
            y: self.y.clone(),
            column_norms: DVector::from_iterator(cols.len(), cols.iter().map(|&j| self.column_norms[j])),
            normalized: self.normalized,
            names: self
                .names
                .as_ref()
                .map(|names| cols.iter().map(|&j| names[j].clone()).collect()),
        }
    }

    /// Same design, new response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Dataset> {
        if y.len() != self.n() {
            return Err(Error::LengthMismatch {
                x_rows: self.n(),
                y_len: y.len(),
            });
        }
        let mut ds = self.clone();
        ds.y = y;
        Ok(ds)
    }

    /// Maps coefficients fitted on the normalized design back to the scale of
    /// the original columns. Identity for datasets that were never normalized.
    pub fn to_original_scale(&self, beta: &DVector<f64>) -> DVector<f64> {
        if !self.normalized {
            return beta.clone();
        }
        let root_n = (self.n() as f64).sqrt();
        beta.zip_map(&self.column_norms, |b, norm| b * root_n / norm)
    }
}

/// Covariance structure of the rows of a synthetic design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Covariance {
    Identity,
    /// `Σ_jk = ρ + (1 − ρ)·1{j = k}`.
    Equicorrelated { rho: f64 },
    /// `Σ_jk = ρ^|j − k|`.
    Toeplitz { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    #[serde(flatten)]
    pub kind: Covariance,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn new(kind: Covariance, p: usize) -> Result<Self> {
        let spec = Self { kind, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("covariance dimension p must be positive".into()));
        }
        match self.kind {
            Covariance::Identity => Ok(()),
            Covariance::Equicorrelated { rho } | Covariance::Toeplitz { rho } => {
                if (0.0..1.0).contains(&rho) {
                    Ok(())
                } else {
                    Err(Error::Config(format!("correlation rho = {rho} must lie in [0, 1)")))
                }
            }
        }
    }

    /// Population covariance entry `Σ_jk`.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        match self.kind {
            Covariance::Identity => f64::from(u8::from(j == k)),
            Covariance::Equicorrelated { rho } => {
                if j == k {
                    1.0
                } else {
                    rho
                }
            }
            Covariance::Toeplitz { rho } => rho.powi(j.abs_diff(k) as i32),
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |j, k| self.entry(j, k))
    }
}

/// Draws an `n × p` design with i.i.d. `N(0, Σ)` rows.
///
/// Equicorrelated rows use a shared latent factor, `x_j = √ρ·z₀ + √(1−ρ)·z_j`;
/// Toeplitz rows are a stationary AR(1) sequence, `x_j = ρ·x_{j−1} + √(1−ρ²)·z_j`.
/// Both reproduce `Σ` exactly without a Cholesky factor.
pub fn generate_design(n: usize, spec: &CovarianceSpec, seed: u64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Config("sample size n must be positive".into()));
    }
    let p = spec.p;
    let mut rng = rng_from_seed(seed);
    let mut x = DMatrix::zeros(n, p);
    let mut row = vec![0.0; p];
    for i in 0..n {
        match spec.kind {
            Covariance::Identity => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            Covariance::Equicorrelated { rho } => {
                let common: f64 = rng.sample(StandardNormal);
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for v in row.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = a * common + b * z;
                }
            }
            Covariance::Toeplitz { rho } => {
                let innovation = (1.0 - rho * rho).sqrt();
                let mut prev: f64 = rng.sample(StandardNormal);
                row[0] = prev;
                for v in row.iter_mut().skip(1) {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innovation * z;
                    *v = prev;
                }
            }
        }
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
    }
    Ok(x)
}

/// True coefficients with their strong/weak support partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_star: Vec<f64>,
    pub support: Vec<usize>,
    pub strong_support: Vec<usize>,
    pub weak_support: Vec<usize>,
    pub sigma: f64,
    /// `θ_{s₁}(β*)`, the smallest strong-signal magnitude.
    pub m: f64,
    /// Largest |β*| over the smallest strong |β*|.
    pub kappa: f64,
}

impl GroundTruth {
    /// Every nonzero coefficient is treated as a strong signal.
    pub fn all_strong(beta_star: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::with_weak(beta_star, &[], sigma)
    }

    /// The listed indices are weak signals, every other nonzero is strong.
    pub fn with_weak(beta_star: Vec<f64>, weak: &[usize], sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("noise level sigma = {sigma} must be finite and >= 0")));
        }
        if let Some(j) = beta_star.iter().position(|b| !b.is_finite()) {
            return Err(Error::NonFinite { what: "beta_star", row: j, col: 0 });
        }
        let support: Vec<usize> = (0..beta_star.len()).filter(|&j| beta_star[j] != 0.0).collect();
        for &j in weak {
            if !support.contains(&j) {
                return Err(Error::Config(format!("weak index {j} is not in the support of beta_star")));
            }
        }
        let mut weak_support: Vec<usize> = weak.to_vec();
        weak_support.sort_unstable();
        weak_support.dedup();
        let strong_support: Vec<usize> = support
            .iter()
            .copied()
            .filter(|j| weak_support.binary_search(j).is_err())
            .collect();
        let m = theta(beta_star.iter().copied(), strong_support.len());
        let max_strong = strong_support
            .iter()
            .map(|&j| beta_star[j].abs())
            .fold(0.0_f64, f64::max);
        let kappa = if m > 0.0 { max_strong / m } else { 1.0 };
        Ok(Self {
            beta_star,
            support,
            strong_support,
            weak_support,
            sigma,
            m,
            kappa,
        })
    }

    /// Partitions the support with the theoretical signal-strength cut-offs:
    /// strong if `|β*_j| ≥ 2σ log p √(log p / n)`, weak if `|β*_j| ≤ 2σ √(log p / n)`.
    /// A coefficient strictly between the two cut-offs violates the
    /// strong/weak dichotomy and is reported as a configuration error.
    pub fn classify(beta_star: Vec<f64>, sigma: f64, n: usize) -> Result<Self> {
        let p = beta_star.len() as f64;
        let base = 2.0 * sigma * (p.ln() / n as f64).sqrt();
        let strong_cut = base * p.ln();
        let mut weak = Vec::new();
        for (j, b) in beta_star.iter().enumerate() {
            let a = b.abs();
            if a == 0.0 || a >= strong_cut {
                continue;
            }
            if a <= base {
                weak.push(j);
            } else {
                return Err(Error::Config(format!(
                    "coefficient {j} (|beta| = {a}) is neither strong (>= {strong_cut}) nor weak (<= {base})"
                )));
            }
        }
        Self::with_weak(beta_star, &weak, sigma)
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_star)
    }

    pub fn l2_norm(&self) -> f64 {
        self.beta_star.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    pub fn is_strong(&self, j: usize) -> bool {
        self.strong_support.binary_search(&j).is_ok()
    }
}

/// `y = Xβ* + w` with `w ~ N(0, σ² I)`.
pub fn attach_response(x: DMatrix<f64>, truth: &GroundTruth, seed: u64) -> Result<Dataset> {
    if x.ncols() != truth.p() {
        return Err(Error::Dimension(format!(
            "design has {} columns but beta_star has length {}",
            x.ncols(),
            truth.p()
        )));
    }
    let mut y = &x * truth.beta();
    if truth.sigma > 0.0 {
        let mut rng = rng_from_seed(seed);
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += truth.sigma * z;
        }
    }
    Dataset::new(x, y)
}

/// Rescales every column to ℓ2 norm `√n`. Idempotent.
pub fn normalize_columns(ds: &Dataset) -> Result<Dataset> {
    let root_n = (ds.n() as f64).sqrt();
    let norms: Vec<f64> = ds.x.column_iter().map(|c| c.norm()).collect();
    if let Some(index) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::DegenerateColumn { index });
    }
    let already = norms
        .iter()
        .all(|&v| ((v - root_n) / root_n).abs() <= NORMALIZED_RTOL);
    let mut out = ds.clone();
    if already {
        out.normalized = true;
        return Ok(out);
    }
    for (j, mut col) in out.x.column_iter_mut().enumerate() {
        col *= root_n / norms[j];
    }
    if !ds.normalized {
        out.column_norms = DVector::from_vec(norms);
    }
    out.normalized = true;
    Ok(out)
}

/// Inverse of [`normalize_columns`]: restores the original column scales.
pub fn denormalize_columns(ds: &Dataset) -> Dataset {
    if !ds.normalized {
        return ds.clone();
    }
    let root_n = (ds.n() as f64).sqrt();
    let mut out = ds.clone();
    for (j, mut col) in out.x.column_iter_mut().enumerate() {
        col *= ds.column_norms[j] / root_n;
    }
    out.normalized = false;
    out
}

/// Keeps the `keep` columns with the largest absolute correlation with `y`.
///
/// Returns the reduced dataset and, for each retained column, its original
/// index (ascending). Zero-variance columns rank last; ties go to the lower index.
pub fn screen_by_correlation(ds: &Dataset, keep: usize) -> Result<(Dataset, Vec<usize>)> {
    if keep == 0 || keep > ds.p() {
        return Err(Error::Config(format!(
            "keep = {keep} must lie in [1, p = {}]",
            ds.p()
        )));
    }
    let n = ds.n() as f64;
    let y_mean = ds.y.mean();
    let yc = ds.y.map(|v| v - y_mean);
    let y_norm = yc.norm();
    let score: Vec<Option<f64>> = ds
        .x
        .column_iter()
        .map(|col| {
            let mean = col.sum() / n;
            let centered = col.map(|v| v - mean);
            let norm = centered.norm();
            if norm == 0.0 {
                None
            } else if y_norm == 0.0 {
                Some(0.0)
            } else {
                Some((centered.dot(&yc) / (norm * y_norm)).abs())
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..ds.p()).collect();
    order.sort_by(|&a, &b| match (score[a], score[b]) {
        (Some(sa), Some(sb)) => sb.total_cmp(&sa).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    let mut kept: Vec<usize> = order[..keep].to_vec();
    kept.sort_unstable();
    Ok((ds.select_columns(&kept), kept))
}

/// Assigns rows to `k` contiguous blocks (sizes differ by at most one),
/// optionally after a seeded shuffle. Returns the held-out rows of each fold.
pub fn kfold_indices(n: usize, k: usize, shuffle: bool, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k = {k} folds; need at least 2")));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} folds exceeds n = {n} samples")));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    if shuffle {
        rows.shuffle(&mut rng_from_seed(seed));
    }
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(rows[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Rows of `0..n` not in `held_out`.
pub fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in held_out {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_design_has_unit_column_variances() {
        let spec = CovarianceSpec::new(Covariance::Identity, 30).unwrap();
        let x = generate_design(200, &spec, 7).unwrap();
        assert_eq!(x.shape(), (200, 30));
        for col in x.column_iter() {
            let var = col.norm_squared() / 200.0;
            assert!((0.7..=1.3).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn equicorrelated_rows_are_positively_correlated_on_average() {
        let spec = CovarianceSpec::new(Covariance::Equicorrelated { rho: 0.5 }, 2).unwrap();
        let mut total = 0.0;
        for seed in 0..200 {
            let x = generate_design(4, &spec, seed).unwrap();
            total += x.column(0).dot(&x.column(1)) / 4.0;
        }
        assert!(total / 200.0 > 0.0);
    }

    #[test]
    fn invalid_rho_is_a_configuration_error() {
        for rho in [-0.1, 1.0, f64::NAN] {
            let err = CovarianceSpec::new(Covariance::Toeplitz { rho }, 5).unwrap_err();
            assert!(matches!(err, Error::Config(_)));
        }
    }

    #[test]
    fn generation_is_bit_reproducible() {
        let spec = CovarianceSpec::new(Covariance::Toeplitz { rho: 0.3 }, 12).unwrap();
        let a = generate_design(9, &spec, 99).unwrap();
        let b = generate_design(9, &spec, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_design(9, &spec, 100).unwrap());
    }

    #[test]
    fn noiseless_response_is_first_column_for_unit_vector() {
        let spec = CovarianceSpec::new(Covariance::Identity, 5).unwrap();
        let x = generate_design(10, &spec, 1).unwrap();
        let mut beta = vec![0.0; 5];
        beta[0] = 1.0;
        let truth = GroundTruth::all_strong(beta, 0.0).unwrap();
        let ds = attach_response(x.clone(), &truth, 3).unwrap();
        assert_eq!(ds.y(), &x.column(0).into_owned());
    }

    #[test]
    fn pure_noise_response_has_unit_variance() {
        let spec = CovarianceSpec::new(Covariance::Identity, 3).unwrap();
        let x = generate_design(200, &spec, 1).unwrap();
        let truth = GroundTruth::all_strong(vec![0.0; 3], 1.0).unwrap();
        let ds = attach_response(x, &truth, 5).unwrap();
        let ms = ds.y().norm_squared() / 200.0;
        assert!((0.7..=1.3).contains(&ms), "{ms}");
    }

    #[test]
    fn attach_response_checks_dimensions() {
        let x = DMatrix::zeros(3, 4);
        let truth = GroundTruth::all_strong(vec![1.0; 5], 0.0).unwrap();
        assert!(matches!(attach_response(x, &truth, 0), Err(Error::Dimension(_))));
    }

    #[test]
    fn ground_truth_statistics() {
        let truth = GroundTruth::all_strong(vec![0.0, -1.0, 2.0, 0.0, 2.0, 3.0], 0.5).unwrap();
        assert_eq!(truth.support, vec![1, 2, 4, 5]);
        assert_eq!(truth.strong_support, truth.support);
        assert!(truth.weak_support.is_empty());
        assert_eq!(truth.m, 1.0);
        assert_eq!(truth.kappa, 3.0);

        let mixed = GroundTruth::with_weak(vec![0.1, 2.0, 4.0, 0.0], &[0], 1.0).unwrap();
        assert_eq!(mixed.strong_support, vec![1, 2]);
        assert_eq!(mixed.weak_support, vec![0]);
        assert_eq!(mixed.m, 2.0);
        assert_eq!(mixed.kappa, 2.0);
    }

    #[test]
    fn classify_rejects_intermediate_signals() {
        // n = 200, p = 500, sigma = 1: weak <= 0.353, strong >= 2.19.
        let mut beta = vec![0.0; 500];
        beta[0] = 0.1;
        beta[1] = 3.0;
        let truth = GroundTruth::classify(beta.clone(), 1.0, 200).unwrap();
        assert_eq!(truth.weak_support, vec![0]);
        assert_eq!(truth.strong_support, vec![1]);
        beta[2] = 1.0;
        assert!(GroundTruth::classify(beta, 1.0, 200).is_err());
    }

    #[test]
    fn normalization_examples() {
        let x = DMatrix::from_element(4, 1, 2.0);
        let ds = Dataset::new(x, DVector::zeros(4)).unwrap();
        let norm = normalize_columns(&ds).unwrap();
        assert!(norm.x().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert_eq!(norm.column_norms()[0], 4.0);

        let again = normalize_columns(&norm).unwrap();
        assert_eq!(again.x(), norm.x());
        assert_eq!(again.column_norms(), norm.column_norms());
    }

    #[test]
    fn normalization_round_trip() {
        let spec = CovarianceSpec::new(Covariance::Identity, 6).unwrap();
        let x = generate_design(8, &spec, 4).unwrap();
        let ds = Dataset::new(x.clone(), DVector::zeros(8)).unwrap();
        let back = denormalize_columns(&normalize_columns(&ds).unwrap());
        assert!((back.x() - &x).amax() < 1e-12);
    }

    #[test]
    fn zero_column_is_degenerate() {
        let mut x = DMatrix::from_element(3, 3, 1.0);
        x.column_mut(2).fill(0.0);
        let ds = Dataset::new(x, DVector::zeros(3)).unwrap();
        assert!(matches!(normalize_columns(&ds), Err(Error::DegenerateColumn { index: 2 })));
    }

    #[test]
    fn original_scale_mapping_preserves_fit() {
        let spec = CovarianceSpec::new(Covariance::Identity, 4).unwrap();
        let x = generate_design(10, &spec, 2).unwrap();
        let ds = Dataset::new(x, DVector::zeros(10)).unwrap();
        let norm = normalize_columns(&ds).unwrap();
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let back = norm.to_original_scale(&beta);
        assert!((norm.x() * &beta - ds.x() * &back).amax() < 1e-12);
    }

    #[test]
    fn screening_examples() {
        let spec = CovarianceSpec::new(Covariance::Identity, 6).unwrap();
        let x = generate_design(30, &spec, 11).unwrap();
        let y = x.column(3).into_owned();
        let ds = Dataset::new(x, y).unwrap();
        let (reduced, map) = screen_by_correlation(&ds, 1).unwrap();
        assert_eq!(map, vec![3]);
        assert_eq!(reduced.p(), 1);

        let (full, map) = screen_by_correlation(&ds, 6).unwrap();
        assert_eq!(map, (0..6).collect::<Vec<_>>());
        assert_eq!(full.x(), ds.x());
    }

    #[test]
    fn constant_column_ranks_last() {
        let mut x = DMatrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64);
        x.column_mut(0).fill(2.0);
        let y = DVector::from_fn(5, |i, _| i as f64);
        let ds = Dataset::new(x, y).unwrap();
        let (_, map) = screen_by_correlation(&ds, 2).unwrap();
        assert!(!map.contains(&0));
    }

    #[test]
    fn screening_keeps_true_columns() {
        let spec = CovarianceSpec::new(Covariance::Identity, 100).unwrap();
        for seed in 0..20 {
            let x = generate_design(50, &spec, seed).unwrap();
            let mut beta = vec![0.0; 100];
            beta[1] = 1.0;
            beta[2] = 1.0;
            let truth = GroundTruth::all_strong(beta, 0.0).unwrap();
            let ds = attach_response(x, &truth, seed).unwrap();
            let (_, map) = screen_by_correlation(&ds, 10).unwrap();
            assert!(map.contains(&1) && map.contains(&2), "seed {seed}: {map:?}");
        }
    }

    #[test]
    fn kfold_blocks_partition_rows() {
        let folds = kfold_indices(11, 3, true, 5).unwrap();
        assert_eq!(folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(kfold_indices(4, 2, false, 0).unwrap(), vec![vec![0, 1], vec![2, 3]]);
        assert!(kfold_indices(3, 4, true, 0).is_err());
        assert_eq!(complement(5, &[1, 3]), vec![0, 2, 4]);
    }
}
