//! Lasso baselines solved by proximal gradient.
//!
//! Objective: `(2n)⁻¹‖Xβ − y‖² + λ‖β‖₁`, step `1/L` with `L = λ_max(XᵀX/n)`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{complement, kfold_indices, Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{gram_lambda_max, l1_norm};

/// `sign(x)·max(|x| − λ, 0)`.
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LassoProblem<'a> {
    pub ds: &'a Dataset,
    pub lambda: f64,
}

impl<'a> LassoProblem<'a> {
    pub fn new(ds: &'a Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {lambda} must be >= 0")));
        }
        Ok(Self { ds, lambda })
    }

    /// `(2n)⁻¹‖Xβ − y‖² + λ‖β‖₁`.
    pub fn objective(&self, beta: &DVector<f64>) -> f64 {
        let r = self.ds.x() * beta - self.ds.y();
        r.norm_squared() / (2.0 * self.ds.n() as f64) + self.lambda * l1_norm(beta)
    }

    /// `Xᵀ(Xβ − y)/n`.
    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let r = self.ds.x() * beta - self.ds.y();
        self.ds.x().tr_mul(&r) / self.ds.n() as f64
    }
}

/// `L = λ_max(XᵀX/n)` by power iteration run to convergence.
pub fn lipschitz(x: &DMatrix<f64>) -> f64 {
    gram_lambda_max(x, 20_000, 1e-13)
}

/// `‖Xᵀy/n‖∞`, the smallest λ with solution zero.
pub fn lambda_max(ds: &Dataset) -> f64 {
    (ds.x().tr_mul(ds.y()) / ds.n() as f64).amax()
}

/// `num` log-spaced values from `lmax` down to `ratio·lmax`.
pub fn lambda_grid(lmax: f64, num: usize, ratio: f64) -> Vec<f64> {
    match num {
        0 => Vec::new(),
        1 => vec![lmax],
        _ => (0..num)
            .map(|i| lmax * ratio.powf(i as f64 / (num - 1) as f64))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Sup-norm change between iterates; KKT is then checked at `10·tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Precomputed `L`; computed from the design when absent.
    pub lipschitz: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            lipschitz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub beta: DVector<f64>,
    pub iters: usize,
    pub kkt_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub ok: bool,
    pub max_violation: f64,
}

/// Largest violation of `|∇h_j| ≤ λ` (β_j = 0) and `∇h_j = −λ sign(β_j)` (β_j ≠ 0).
pub fn check_kkt(prob: &LassoProblem<'_>, beta: &DVector<f64>, tol: f64) -> KktReport {
    let max_violation = kkt_violation(&prob.gradient(beta), beta, prob.lambda);
    KktReport {
        ok: max_violation <= tol,
        max_violation,
    }
}

fn kkt_violation(grad: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    grad.iter()
        .zip(beta.iter())
        .map(|(g, b)| {
            if *b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g + lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn ista(prob: &LassoProblem<'_>, opts: &SolverOptions) -> Result<LassoSolution> {
    solve(prob, opts, false, None)
}

pub fn fista(prob: &LassoProblem<'_>, opts: &SolverOptions) -> Result<LassoSolution> {
    solve(prob, opts, true, None)
}

/// FISTA from a given starting point.
pub fn fista_from(prob: &LassoProblem<'_>, opts: &SolverOptions, start: &DVector<f64>) -> Result<LassoSolution> {
    solve(prob, opts, true, Some(start))
}

/// Proximal gradient with optional Beck–Teboulle momentum (no restarts).
fn solve(
    prob: &LassoProblem<'_>,
    opts: &SolverOptions,
    accelerate: bool,
    start: Option<&DVector<f64>>,
) -> Result<LassoSolution> {
    let ds = prob.ds;
    let p = ds.p();
    if let Some(s) = start {
        if s.len() != p {
            return Err(Error::Dimension(format!("start of length {} for p = {p}", s.len())));
        }
    }
    let lip = opts.lipschitz.unwrap_or_else(|| lipschitz(ds.x()));
    let mut beta = start.cloned().unwrap_or_else(|| DVector::zeros(p));
    if lip == 0.0 {
        // X = 0: the smooth part is constant.
        beta.fill(0.0);
        return Ok(LassoSolution {
            beta,
            iters: 0,
            kkt_violation: 0.0,
        });
    }
    let step = 1.0 / lip;
    let thresh = prob.lambda * step;
    let n = ds.n() as f64;
    let mut point = beta.clone();
    let mut prev = beta.clone();
    let mut resid = DVector::zeros(ds.n());
    let mut grad = DVector::zeros(p);
    let mut momentum = 1.0_f64;
    let mut violation = f64::INFINITY;

    for k in 1..=opts.max_iter {
        resid.copy_from(ds.y());
        resid.gemv(1.0, ds.x(), &point, -1.0);
        grad.gemv_tr(1.0 / n, ds.x(), &resid, 0.0);
        prev.copy_from(&beta);
        let mut change = 0.0_f64;
        for j in 0..p {
            let next = soft_threshold(point[j] - step * grad[j], thresh);
            change = change.max((next - prev[j]).abs());
            beta[j] = next;
        }
        if accelerate {
            let next_m = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let w = (momentum - 1.0) / next_m;
            momentum = next_m;
            for j in 0..p {
                point[j] = beta[j] + w * (beta[j] - prev[j]);
            }
        } else {
            point.copy_from(&beta);
        }
        if change <= opts.tol {
            violation = kkt_violation(&prob.gradient(&beta), &beta, prob.lambda);
            if violation <= 10.0 * opts.tol {
                return Ok(LassoSolution {
                    beta,
                    iters: k,
                    kkt_violation: violation,
                });
            }
        }
    }
    if !violation.is_finite() || violation > 10.0 * opts.tol {
        violation = kkt_violation(&prob.gradient(&beta), &beta, prob.lambda);
    }
    if violation <= 10.0 * opts.tol {
        return Ok(LassoSolution {
            beta,
            iters: opts.max_iter,
            kkt_violation: violation,
        });
    }
    Err(Error::NotConverged {
        iters: opts.max_iter,
        kkt_violation: violation,
        beta: beta.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub betas: Vec<Vec<f64>>,
    pub kkt_residuals: Vec<f64>,
    pub iters: Vec<usize>,
    /// `false` where the solver hit `max_iter`; the last iterate is kept.
    pub converged: Vec<bool>,
}

impl PathResult {
    /// Columns `lambda, l1_norm[, est_error]`.
    pub fn write_csv(&self, path: &Path, truth: Option<&GroundTruth>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        match truth {
            Some(_) => writeln!(out, "lambda,l1_norm,est_error")?,
            None => writeln!(out, "lambda,l1_norm")?,
        }
        for (lambda, beta) in self.lambdas.iter().zip(&self.betas) {
            let l1: f64 = beta.iter().map(|b| b.abs()).sum();
            match truth {
                Some(t) => {
                    let err: f64 = beta
                        .iter()
                        .zip(&t.beta_star)
                        .map(|(b, s)| (b - s) * (b - s))
                        .sum::<f64>()
                        .sqrt();
                    writeln!(out, "{lambda},{l1},{err}")?;
                }
                None => writeln!(out, "{lambda},{l1}")?,
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Solves each λ (strictly descending) with FISTA.
pub fn lasso_path(ds: &Dataset, lambdas: &[f64], warm_start: bool, opts: &SolverOptions) -> Result<PathResult> {
    if lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("lambdas must be strictly descending".into()));
    }
    let opts = SolverOptions {
        lipschitz: Some(opts.lipschitz.unwrap_or_else(|| lipschitz(ds.x()))),
        ..*opts
    };
    let mut out = PathResult {
        lambdas: lambdas.to_vec(),
        betas: Vec::with_capacity(lambdas.len()),
        kkt_residuals: Vec::with_capacity(lambdas.len()),
        iters: Vec::with_capacity(lambdas.len()),
        converged: Vec::with_capacity(lambdas.len()),
    };
    let mut start = DVector::zeros(ds.p());
    for &lambda in lambdas {
        let prob = LassoProblem::new(ds, lambda)?;
        let init = if warm_start { start.clone() } else { DVector::zeros(ds.p()) };
        let (beta, kkt, iters, ok) = match fista_from(&prob, &opts, &init) {
            Ok(sol) => (sol.beta, sol.kkt_violation, sol.iters, true),
            Err(Error::NotConverged {
                iters,
                kkt_violation,
                beta,
            }) => (DVector::from_vec(beta), kkt_violation, iters, false),
            Err(e) => return Err(e),
        };
        out.betas.push(beta.iter().copied().collect());
        out.kkt_residuals.push(kkt);
        out.iters.push(iters);
        out.converged.push(ok);
        start = beta;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    /// Mean squared held-out prediction error per λ.
    pub cv_error: Vec<f64>,
    pub best_index: usize,
    pub best_lambda: f64,
    /// Fit on all of the data at `best_lambda`.
    pub beta: Vec<f64>,
}

/// K-fold cross-validation over a λ grid (shuffled folds, warm-started paths).
pub fn lasso_cv(ds: &Dataset, k: usize, lambdas: &[f64], seed: u64, opts: &SolverOptions) -> Result<CvResult> {
    if lambdas.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    let folds = kfold_indices(ds.n(), k, true, seed)?;
    let mut sse = vec![0.0; lambdas.len()];
    for held in &folds {
        let train = ds.select_rows(&complement(ds.n(), held));
        let valid = ds.select_rows(held);
        let path = lasso_path(&train, lambdas, true, &SolverOptions { lipschitz: None, ..*opts })?;
        for (acc, beta) in sse.iter_mut().zip(&path.betas) {
            let b = DVector::from_column_slice(beta);
            *acc += (valid.x() * b - valid.y()).norm_squared();
        }
    }
    let cv_error: Vec<f64> = sse.iter().map(|s| s / ds.n() as f64).collect();
    let mut best_index = 0;
    for (i, e) in cv_error.iter().enumerate() {
        if *e < cv_error[best_index] {
            best_index = i;
        }
    }
    let full = lasso_path(ds, &lambdas[..=best_index], true, &SolverOptions { lipschitz: None, ..*opts })?;
    Ok(CvResult {
        lambdas: lambdas.to_vec(),
        cv_error,
        best_index,
        best_lambda: lambdas[best_index],
        beta: full.betas.last().cloned().expect("non-empty path"),
    })
}
