//! Early-stopping rules. Each rule scores the iterates on the recording grid
//! and picks the stopping time `T̃` from the resulting risk curve.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::{complement, kfold_indices, screen_by_correlation, Dataset};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::solver::{
    init_iterate, min_l2_solution, run_from, Control, FitResult, HyperParams, IterateState, RecordingPolicy,
    RunOptions, Schedule, StopReason,
};

/// Largest `n` for which the `n × n` SURE smoother is maintained.
pub const SURE_MAX_N: usize = 4000;

/// Relative magnitude below which a coordinate is left out of the SURE smoother update.
pub const SURE_DROP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    /// First grid point whose successor has strictly larger risk.
    FirstRise,
    /// Earliest minimizer of the risk.
    #[default]
    GlobalMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopKind {
    None,
    Holdout { mode: SelectMode },
    Kfold { k: usize, mode: SelectMode },
    /// `sigma = None` estimates the noise level by [`estimate_sigma`].
    Sure { sigma: Option<f64>, mode: SelectMode },
    Oracle { beta_star: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub kind: StopKind,
    pub t_max: usize,
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            StopKind::Kfold { k, .. } if *k < 2 => Err(Error::Config(format!("k = {k} folds; need k >= 2"))),
            StopKind::Sure { sigma: Some(s), .. } if !(*s > 0.0 && s.is_finite()) => {
                Err(Error::Config(format!("sigma = {s} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub t_grid: Vec<usize>,
    pub risk: Vec<f64>,
    pub argmin_t: usize,
    pub first_rise_t: Option<usize>,
}

impl RiskCurve {
    pub fn new(t_grid: Vec<usize>, risk: Vec<f64>) -> Result<Self> {
        if t_grid.len() != risk.len() || t_grid.is_empty() {
            return Err(Error::Dimension(format!(
                "risk curve with {} grid points and {} values",
                t_grid.len(),
                risk.len()
            )));
        }
        let argmin_t = t_grid[select_index(&risk, SelectMode::GlobalMin)];
        let first_rise_t = first_rise(&risk).map(|i| t_grid[i]);
        Ok(Self {
            t_grid,
            risk,
            argmin_t,
            first_rise_t,
        })
    }

    /// Grid index selected under `mode`.
    pub fn select(&self, mode: SelectMode) -> usize {
        select_index(&self.risk, mode)
    }

    pub fn selected_t(&self, mode: SelectMode) -> usize {
        self.t_grid[self.select(mode)]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,risk")?;
        for (t, r) in self.t_grid.iter().zip(&self.risk) {
            writeln!(out, "{t},{r}")?;
        }
        out.flush()?;
        Ok(())
    }
}

fn first_rise(risk: &[f64]) -> Option<usize> {
    risk.windows(2).position(|w| w[1] > w[0])
}

/// Index chosen from a risk sequence. With no rise, `FirstRise` picks the last point.
pub fn select_index(risk: &[f64], mode: SelectMode) -> usize {
    match mode {
        SelectMode::FirstRise => first_rise(risk).unwrap_or(risk.len().saturating_sub(1)),
        SelectMode::GlobalMin => {
            let mut best = 0;
            for (i, r) in risk.iter().enumerate() {
                if *r < risk[best] {
                    best = i;
                }
            }
            best
        }
    }
}

/// Runs the full budget, scoring each grid iterate, and returns the iterate
/// chosen by `mode`. Rule-driven runs ignore `stop_tol` so that every curve
/// covers the same grid.
fn scored_run(
    ds: &Dataset,
    hp: &HyperParams,
    seed: u64,
    record: &RecordingPolicy,
    mode: SelectMode,
    mut advance: impl FnMut(&IterateState),
    mut score: impl FnMut(&IterateState) -> f64,
) -> Result<(FitResult, RiskCurve)> {
    let hp = HyperParams {
        stop_tol: 0.0,
        ..hp.clone()
    };
    let mut t_grid = Vec::new();
    let mut risk = Vec::new();
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut prev: Option<(f64, Vec<f64>, usize)> = None;
    let mut chosen: Option<(Vec<f64>, usize)> = None;

    let mut observer = |state: &IterateState, on_grid: bool| {
        let mut control = Control::Continue;
        if on_grid {
            let r = score(state);
            t_grid.push(state.t());
            risk.push(r);
            if best.as_ref().is_none_or(|b| r < b.0) {
                best = Some((r, state.beta().iter().copied().collect(), state.t()));
            }
            if mode == SelectMode::FirstRise {
                if let Some((pr, pb, pt)) = prev.take() {
                    if r > pr {
                        chosen = Some((pb, pt));
                        control = Control::Stop;
                    }
                }
                prev = Some((r, state.beta().iter().copied().collect(), state.t()));
            }
        }
        advance(state);
        control
    };
    let opts = RunOptions {
        record: *record,
        truth: None,
    };
    let start = init_iterate(ds, &hp, seed)?;
    let mut fit = run_from(ds, &hp, start, &opts, &mut observer)?;
    let ran_to = fit.stopped_at;
    let (beta, t) = match mode {
        SelectMode::GlobalMin => best.map(|(_, b, t)| (b, t)),
        SelectMode::FirstRise => chosen.or(prev.map(|(_, b, t)| (b, t))),
    }
    .expect("the initial iterate is always scored");
    fit.beta_hat = beta;
    fit.stopped_at = t;
    fit.stop_reason = StopReason::Rule;
    fit.diagnostics.insert("iterations_run".into(), ran_to as f64);
    let curve = RiskCurve::new(t_grid, risk)?;
    Ok((fit, curve))
}

/// Validation stopping: `R(t) = ‖X'β_t − y'‖²` on held-out data.
pub fn holdout_stop(
    train: &Dataset,
    valid: &Dataset,
    hp: &HyperParams,
    mode: SelectMode,
    seed: u64,
    record: &RecordingPolicy,
) -> Result<(FitResult, RiskCurve)> {
    if valid.n() == 0 {
        return Err(Error::EmptyValidation);
    }
    if valid.p() != train.p() {
        return Err(Error::Dimension(format!(
            "validation p = {} but training p = {}",
            valid.p(),
            train.p()
        )));
    }
    let mut buf = DVector::zeros(valid.n());
    scored_run(train, hp, seed, record, mode, |_| {}, |state| {
        buf.copy_from(valid.y());
        buf.gemv(1.0, valid.x(), state.beta(), -1.0);
        buf.norm_squared()
    })
}

/// Per-fold validation curves for explicit folds. Each fold trains on the
/// complement with seed `derive_seed(seed, fold + 1)`.
pub fn kfold_curves(
    ds: &Dataset,
    folds: &[Vec<usize>],
    hp: &HyperParams,
    seed: u64,
    record: &RecordingPolicy,
) -> Result<Vec<RiskCurve>> {
    folds
        .iter()
        .enumerate()
        .map(|(i, held)| {
            if held.is_empty() {
                return Err(Error::EmptyValidation);
            }
            let train = ds.select_rows(&complement(ds.n(), held));
            let valid = ds.select_rows(held);
            let (_, curve) =
                holdout_stop(&train, &valid, hp, SelectMode::GlobalMin, derive_seed(seed, i as u64 + 1), record)?;
            Ok(curve)
        })
        .collect()
}

/// Pointwise sum of curves on a common grid.
pub fn sum_curves(curves: &[RiskCurve]) -> Result<RiskCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Config("no risk curves to combine".into()))?;
    let mut total = vec![0.0; first.risk.len()];
    for c in curves {
        if c.t_grid != first.t_grid {
            return Err(Error::Dimension("fold risk curves are on different grids".into()));
        }
        for (acc, r) in total.iter_mut().zip(&c.risk) {
            *acc += r;
        }
    }
    RiskCurve::new(first.t_grid.clone(), total)
}

/// K-fold cross-validated stopping time, then a refit on all of `ds` for
/// exactly `T̃` iterations with seed `derive_seed(seed, 0)`.
pub fn kfold_stop(
    ds: &Dataset,
    k: usize,
    hp: &HyperParams,
    mode: SelectMode,
    seed: u64,
    record: &RecordingPolicy,
) -> Result<(FitResult, RiskCurve)> {
    let folds = kfold_indices(ds.n(), k, true, seed)?;
    let curve = sum_curves(&kfold_curves(ds, &folds, hp, seed, record)?)?;
    let t_sel = curve.selected_t(mode);
    let refit = HyperParams {
        t_max: t_sel,
        stop_tol: 0.0,
        ..hp.clone()
    };
    let opts = RunOptions {
        record: *record,
        truth: None,
    };
    let start = init_iterate(ds, &refit, derive_seed(seed, 0))?;
    let mut fit = run_from(ds, &refit, start, &opts, &mut |_: &IterateState, _| Control::Continue)?;
    fit.stop_reason = StopReason::Rule;
    fit.diagnostics.insert("folds".into(), k as f64);
    Ok((fit, curve))
}

/// Running product `S_t = Π_{i<t} (I − 2ηn⁻¹ X D_i Xᵀ)` with
/// `D_i = diag(ω∘|β_i|)`, and the resulting `C_p`-type risk.
#[derive(Debug, Clone)]
pub struct SureState {
    s: DMatrix<f64>,
    pub sigma: f64,
    /// Coordinates with `|β_j| < drop_tol · max|β|` are skipped in the update.
    pub drop_tol: f64,
}

impl SureState {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n > SURE_MAX_N {
            return Err(Error::TooLarge {
                what: "SURE smoother dimension n",
                actual: n,
                limit: SURE_MAX_N,
                hint: "use holdout or k-fold stopping instead",
            });
        }
        Ok(Self {
            s: DMatrix::identity(n, n),
            sigma,
            drop_tol: SURE_DROP_TOL,
        })
    }

    pub fn trace_s(&self) -> f64 {
        self.s.trace()
    }

    pub fn smoother(&self) -> &DMatrix<f64> {
        &self.s
    }

    /// `‖r‖²/n + (2 − 2 trace(S)/n)σ²`.
    pub fn risk(&self, residual: &DVector<f64>) -> f64 {
        let n = residual.len() as f64;
        residual.norm_squared() / n + (2.0 - 2.0 * self.trace_s() / n) * self.sigma * self.sigma
    }

    /// `S ← S (I − 2ηn⁻¹ X D Xᵀ)` for the iterate `beta`.
    pub fn advance(&mut self, x: &DMatrix<f64>, beta: &DVector<f64>, eta: f64, weights: Option<&[f64]>) {
        let d: Vec<f64> = beta
            .iter()
            .enumerate()
            .map(|(j, b)| b.abs() * weights.map_or(1.0, |w| w[j]))
            .collect();
        let top = d.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return;
        }
        let active: Vec<usize> = (0..d.len()).filter(|&j| d[j] > 0.0 && d[j] >= self.drop_tol * top).collect();
        let xa = x.select_columns(active.iter());
        let mut m = &self.s * &xa;
        for (c, &j) in active.iter().enumerate() {
            m.column_mut(c).scale_mut(d[j]);
        }
        let n = x.nrows() as f64;
        self.s.gemm(-2.0 * eta / n, &m, &xa.transpose(), 1.0);
    }
}

/// Noise level from ordinary least squares on the `⌊n/2⌋` columns most
/// correlated with the response: `√(RSS / (n − k))`.
pub fn estimate_sigma(ds: &Dataset) -> Result<f64> {
    let n = ds.n();
    let keep = (n / 2).min(ds.p()).max(1);
    if n <= keep {
        return Err(Error::Config(format!("cannot estimate sigma with n = {n}")));
    }
    let (sub, _) = screen_by_correlation(ds, keep)?;
    let beta = min_l2_solution(&sub);
    let rss = (sub.x() * beta - sub.y()).norm_squared();
    Ok((rss / (n - keep) as f64).sqrt())
}

/// Stopping by the SURE / `C_p` risk of the linearized smoother.
pub fn sure_stop(
    ds: &Dataset,
    hp: &HyperParams,
    sigma: Option<f64>,
    mode: SelectMode,
    seed: u64,
    record: &RecordingPolicy,
) -> Result<(FitResult, RiskCurve)> {
    let sigma = match sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Config(format!("sigma = {s} must be positive"))),
        None => estimate_sigma(ds)?,
    };
    let mut sure = SureState::new(ds.n(), sigma)?;
    let eta = hp.resolve_eta(ds);
    let weights = hp.weights.clone();
    let sure_cell = std::cell::RefCell::new(&mut sure);
    let (mut fit, curve) = scored_run(
        ds,
        hp,
        seed,
        record,
        mode,
        |state| sure_cell.borrow_mut().advance(ds.x(), state.beta(), eta, weights.as_deref()),
        |state| sure_cell.borrow().risk(state.residual()),
    )?;
    fit.diagnostics.insert("sigma".into(), sigma);
    Ok((fit, curve))
}

/// Stops at the grid iterate closest to `beta_star`. For tests and benchmarks.
pub fn oracle_stop(
    ds: &Dataset,
    hp: &HyperParams,
    beta_star: &[f64],
    seed: u64,
    record: &RecordingPolicy,
) -> Result<(FitResult, RiskCurve)> {
    if beta_star.len() != ds.p() {
        return Err(Error::Dimension(format!(
            "beta_star has length {} for p = {}",
            beta_star.len(),
            ds.p()
        )));
    }
    scored_run(ds, hp, seed, record, SelectMode::GlobalMin, |_| {}, |state| {
        state
            .beta()
            .iter()
            .zip(beta_star)
            .map(|(b, s)| (b - s) * (b - s))
            .sum::<f64>()
            .sqrt()
    })
}

/// Inputs a rule may need beyond the training data.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleInputs<'a> {
    pub valid: Option<&'a Dataset>,
    pub record: RecordingPolicy,
}

/// Fits `ds` under `rule`. `StopKind::None` runs plain GD to `stop_tol` or `t_max`.
pub fn fit_with_rule(
    ds: &Dataset,
    hp: &HyperParams,
    rule: &StoppingRule,
    seed: u64,
    inputs: &RuleInputs<'_>,
) -> Result<(FitResult, Option<RiskCurve>)> {
    rule.validate()?;
    let hp = HyperParams {
        t_max: rule.t_max,
        ..hp.clone()
    };
    let record = &inputs.record;
    let with_curve = |r: Result<(FitResult, RiskCurve)>| r.map(|(f, c)| (f, Some(c)));
    match &rule.kind {
        StopKind::None => {
            let opts = RunOptions {
                record: *record,
                truth: None,
            };
            Ok((crate::solver::run(ds, &hp, seed, &opts)?, None))
        }
        StopKind::Holdout { mode } => {
            let valid = inputs
                .valid
                .ok_or_else(|| Error::Config("holdout stopping needs a validation set".into()))?;
            with_curve(holdout_stop(ds, valid, &hp, *mode, seed, record))
        }
        StopKind::Kfold { k, mode } => with_curve(kfold_stop(ds, *k, &hp, *mode, seed, record)),
        StopKind::Sure { sigma, mode } => with_curve(sure_stop(ds, &hp, *sigma, *mode, seed, record)),
        StopKind::Oracle { beta_star } => with_curve(oracle_stop(ds, &hp, beta_star, seed, record)),
    }
}

/// Recording policy used when a rule scores every iteration.
pub fn dense_record() -> RecordingPolicy {
    RecordingPolicy {
        schedule: Schedule::Every(1),
        keep_beta: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::InitMode;

    #[test]
    fn selection_modes_on_hand_curve() {
        let risk = [5.0, 3.0, 4.0, 2.0, 6.0];
        assert_eq!(select_index(&risk, SelectMode::FirstRise), 1);
        assert_eq!(select_index(&risk, SelectMode::GlobalMin), 3);
        let curve = RiskCurve::new((0..5).collect(), risk.to_vec()).unwrap();
        assert_eq!(curve.argmin_t, 3);
        assert_eq!(curve.first_rise_t, Some(1));
    }

    #[test]
    fn decreasing_curve_selects_last_point() {
        let risk = [4.0, 3.0, 2.0, 1.0];
        assert_eq!(select_index(&risk, SelectMode::FirstRise), 3);
        assert_eq!(select_index(&risk, SelectMode::GlobalMin), 3);
    }

    #[test]
    fn ties_pick_earliest_minimizer() {
        assert_eq!(select_index(&[2.0, 1.0, 1.0, 3.0], SelectMode::GlobalMin), 1);
        assert_eq!(select_index(&[1.0, 1.0], SelectMode::FirstRise), 1);
    }

    #[test]
    fn sure_trace_starts_at_n_and_sigma_term_vanishes() {
        let sure = SureState::new(7, 3.0).unwrap();
        assert_eq!(sure.trace_s(), 7.0);
        let r = DVector::from_element(7, 2.0);
        assert!((sure.risk(&r) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_sure_trace_is_closed_form_product() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let eta = 0.1;
        let betas = [0.3, -0.7, 1.1, 0.05];
        let mut sure = SureState::new(1, 1.0).unwrap();
        sure.drop_tol = 0.0;
        let mut expected = 1.0;
        for b in betas {
            sure.advance(&x, &DVector::from_element(1, b), eta, None);
            expected *= 1.0 - 2.0 * eta * f64::abs(b);
        }
        assert!((sure.trace_s() - expected).abs() < 1e-15);
    }

    #[test]
    fn sure_guard_rejects_large_n() {
        assert!(matches!(SureState::new(SURE_MAX_N + 1, 1.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn zero_design_gives_flat_sure_risk() {
        let ds = Dataset::new(DMatrix::zeros(6, 3), DVector::from_vec(vec![1.0, -1.0, 0.5, 2.0, 0.0, 1.0])).unwrap();
        let hp = HyperParams {
            eta: Some(0.1),
            t_max: 20,
            init: InitMode::DeterministicTheory,
            ..Default::default()
        };
        let (fit, curve) = sure_stop(&ds, &hp, Some(1.0), SelectMode::GlobalMin, 0, &dense_record()).unwrap();
        assert!(curve.risk.iter().all(|r| *r == curve.risk[0]));
        assert_eq!(fit.stopped_at, 0);
    }

    #[test]
    fn holdout_rejects_empty_validation() {
        let ds = Dataset::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let empty = ds.select_rows(&[]);
        let r = holdout_stop(&ds, &empty, &HyperParams::default(), SelectMode::GlobalMin, 0, &dense_record());
        assert!(matches!(r, Err(Error::EmptyValidation)));
    }

    #[test]
    fn rule_validation() {
        let bad = StoppingRule {
            kind: StopKind::Kfold {
                k: 1,
                mode: SelectMode::GlobalMin,
            },
            t_max: 10,
        };
        assert!(bad.validate().is_err());
        let bad = StoppingRule {
            kind: StopKind::Sure {
                sigma: Some(-1.0),
                mode: SelectMode::GlobalMin,
            },
            t_max: 10,
        };
        assert!(bad.validate().is_err());
    }
}
