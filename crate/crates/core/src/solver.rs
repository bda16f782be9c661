//! Gradient descent on the Hadamard-product parametrization `β = g∘l`.
//!
//! The loss is `f(g, l) = (2n)⁻¹‖X(g∘l) − y‖²`. Both factors are updated
//! simultaneously from the residual at time `t`:
//!
//! ```text
//! q       = ω ∘ [n⁻¹ Xᵀ (X(g_t∘l_t) − y)]
//! g_{t+1} = g_t − η l_t ∘ q
//! l_{t+1} = l_t − η g_t ∘ q
//! ```
//!
//! with `ω = 1` unless per-coordinate weights are supplied. Starting near the
//! origin, this drives the iterate toward small-ℓ1 interpolants; stopping
//! early regularizes.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::linalg::{gram_lambda_max_quick, l1_norm, max_abs};
use crate::seed::rng_from_seed;

/// Training RMSE growth (relative to the initial RMSE) treated as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Largest `p` for which the dense `2p × 2p` Hessian is formed.
pub const HESSIAN_MAX_P: usize = 2000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `g₀, l₀` i.i.d. `Unif(−α, α)`.
    #[default]
    UniformPmAlpha,
    /// `g₀ = α·1`, `l₀ = 0`.
    DeterministicTheory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    /// Step size; `None` selects `0.5 / λ_max(XᵀX/n)`.
    pub eta: Option<f64>,
    /// Stop once the training RMSE `‖Xβ − y‖/√n` is at most this value.
    pub stop_tol: f64,
    pub t_max: usize,
    pub init: InitMode,
    /// Per-coordinate step multipliers `ω`.
    pub weights: Option<Vec<f64>>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1e-5,
            eta: None,
            stop_tol: 0.0,
            t_max: 5000,
            init: InitMode::UniformPmAlpha,
            weights: None,
        }
    }
}

impl HyperParams {
    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha = {} must be positive", self.alpha)));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("eta = {eta} must be positive")));
            }
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config(format!("stop_tol = {} must be >= 0", self.stop_tol)));
        }
        if let Some(w) = &self.weights {
            if w.len() != p {
                return Err(Error::Dimension(format!("{} weights for p = {p}", w.len())));
            }
            if let Some(j) = w.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Config(format!("weight {j} = {} must be positive", w[j])));
            }
        }
        Ok(())
    }

    /// The step size actually used on `ds`.
    pub fn resolve_eta(&self, ds: &Dataset) -> f64 {
        self.eta.unwrap_or_else(|| default_eta(ds.x()))
    }
}

/// `0.5 / λ̂_max(XᵀX/n)` with a 30-step power iteration.
pub fn default_eta(x: &DMatrix<f64>) -> f64 {
    let lambda = gram_lambda_max_quick(x);
    if lambda > 0.0 {
        0.5 / lambda
    } else {
        1.0
    }
}

/// One point of the factor dynamics, with its derived quantities kept in sync.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    g: DVector<f64>,
    l: DVector<f64>,
    beta: DVector<f64>,
    residual: DVector<f64>,
    t: usize,
}

impl IterateState {
    /// Builds a state from explicit factors at time `t`.
    pub fn from_factors(ds: &Dataset, g: DVector<f64>, l: DVector<f64>, t: usize) -> Result<Self> {
        if g.len() != ds.p() || l.len() != ds.p() {
            return Err(Error::Dimension(format!(
                "factors of length {}/{} for p = {}",
                g.len(),
                l.len(),
                ds.p()
            )));
        }
        let beta = g.component_mul(&l);
        let residual = ds.x() * &beta - ds.y();
        Ok(Self { g, l, beta, residual, t })
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn l(&self) -> &DVector<f64> {
        &self.l
    }

    /// `g∘l`.
    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    /// `Xβ − y`.
    pub fn residual(&self) -> &DVector<f64> {
        &self.residual
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// `(g + l)/2`.
    pub fn a(&self) -> DVector<f64> {
        (&self.g + &self.l) * 0.5
    }

    /// `(g − l)/2`.
    pub fn b(&self) -> DVector<f64> {
        (&self.g - &self.l) * 0.5
    }

    pub fn train_rmse(&self) -> f64 {
        self.residual.norm() / (self.residual.len() as f64).sqrt()
    }

    /// `f(g, l)`.
    pub fn loss(&self) -> f64 {
        self.residual.norm_squared() / (2.0 * self.residual.len() as f64)
    }

    /// Advances one step in place. On divergence the state is left at time `t`.
    pub fn step(&mut self, ds: &Dataset, eta: f64, weights: Option<&[f64]>, ws: &mut Workspace) -> Result<()> {
        let n = ds.n() as f64;
        ws.grad.gemv_tr(1.0 / n, ds.x(), &self.residual, 0.0);
        if let Some(w) = weights {
            for (q, w) in ws.grad.iter_mut().zip(w) {
                *q *= w;
            }
        }
        let mut worst = 0.0_f64;
        let mut finite = true;
        for j in 0..self.g.len() {
            let q = ws.grad[j];
            let (g, l) = (self.g[j], self.l[j]);
            let g_next = g - eta * l * q;
            let l_next = l - eta * g * q;
            finite &= g_next.is_finite() && l_next.is_finite();
            worst = worst.max(g_next.abs()).max(l_next.abs());
            ws.g_next[j] = g_next;
            ws.l_next[j] = l_next;
        }
        if !finite {
            return Err(self.divergence(f64::INFINITY));
        }
        std::mem::swap(&mut self.g, &mut ws.g_next);
        std::mem::swap(&mut self.l, &mut ws.l_next);
        for j in 0..self.beta.len() {
            self.beta[j] = self.g[j] * self.l[j];
        }
        self.residual.copy_from(ds.y());
        self.residual.gemv(1.0, ds.x(), &self.beta, -1.0);
        self.t += 1;
        if self.residual.iter().any(|v| !v.is_finite()) {
            return Err(self.divergence(worst));
        }
        Ok(())
    }

    fn divergence(&self, max_abs: f64) -> Error {
        Error::Divergence {
            t: self.t + 1,
            max_abs,
            last_finite_beta: self.beta.iter().copied().collect(),
            last_finite_t: self.t,
        }
    }
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    grad: DVector<f64>,
    g_next: DVector<f64>,
    l_next: DVector<f64>,
}

impl Workspace {
    pub fn new(p: usize) -> Self {
        Self {
            grad: DVector::zeros(p),
            g_next: DVector::zeros(p),
            l_next: DVector::zeros(p),
        }
    }
}

/// Initial factors for `p` coordinates.
pub fn init_factors(p: usize, hp: &HyperParams, seed: u64) -> (DVector<f64>, DVector<f64>) {
    match hp.init {
        InitMode::DeterministicTheory => (DVector::from_element(p, hp.alpha), DVector::zeros(p)),
        InitMode::UniformPmAlpha => {
            let mut rng = rng_from_seed(seed);
            let g = DVector::from_fn(p, |_, _| rng.random_range(-hp.alpha..hp.alpha));
            let l = DVector::from_fn(p, |_, _| rng.random_range(-hp.alpha..hp.alpha));
            (g, l)
        }
    }
}

pub fn init_iterate(ds: &Dataset, hp: &HyperParams, seed: u64) -> Result<IterateState> {
    hp.validate(ds.p())?;
    let (g, l) = init_factors(ds.p(), hp, seed);
    IterateState::from_factors(ds, g, l, 0)
}

/// One simultaneous update of `(g, l)`; returns the new state.
pub fn gradient_step(state: &IterateState, ds: &Dataset, hp: &HyperParams) -> Result<IterateState> {
    let eta = hp.resolve_eta(ds);
    let mut next = state.clone();
    let mut ws = Workspace::new(ds.p());
    next.step(ds, eta, hp.weights.as_deref(), &mut ws)?;
    Ok(next)
}

/// State of the non-negative parametrization `β = u∘u`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegState {
    u: DVector<f64>,
    beta: DVector<f64>,
    residual: DVector<f64>,
    t: usize,
}

impl NonnegState {
    pub fn new(ds: &Dataset, u: DVector<f64>) -> Result<Self> {
        if u.len() != ds.p() {
            return Err(Error::Dimension(format!("u has length {} for p = {}", u.len(), ds.p())));
        }
        let beta = u.component_mul(&u);
        let residual = ds.x() * &beta - ds.y();
        Ok(Self { u, beta, residual, t: 0 })
    }

    /// `u₀ = α·1`.
    pub fn init(ds: &Dataset, alpha: f64) -> Result<Self> {
        Self::new(ds, DVector::from_element(ds.p(), alpha))
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn residual(&self) -> &DVector<f64> {
        &self.residual
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn train_rmse(&self) -> f64 {
        self.residual.norm() / (self.residual.len() as f64).sqrt()
    }

    /// `u ← u − 2η u∘ω∘[n⁻¹Xᵀ(Xu² − y)]`.
    pub fn step(&mut self, ds: &Dataset, eta: f64, weights: Option<&[f64]>) -> Result<()> {
        let mut q = ds.x().tr_mul(&self.residual) / ds.n() as f64;
        if let Some(w) = weights {
            for (q, w) in q.iter_mut().zip(w) {
                *q *= w;
            }
        }
        let next = self.u.zip_map(&q, |u, q| u - 2.0 * eta * u * q);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                t: self.t + 1,
                max_abs: f64::INFINITY,
                last_finite_beta: self.beta.iter().copied().collect(),
                last_finite_t: self.t,
            });
        }
        self.u = next;
        self.beta = self.u.component_mul(&self.u);
        self.residual = ds.x() * &self.beta - ds.y();
        self.t += 1;
        Ok(())
    }
}

pub fn gradient_step_nonneg(state: &NonnegState, ds: &Dataset, hp: &HyperParams) -> Result<NonnegState> {
    let mut next = state.clone();
    next.step(ds, hp.resolve_eta(ds), hp.weights.as_deref())?;
    Ok(next)
}

/// Which iterations are recorded (and scored by stopping rules).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Schedule {
    /// Every `k`-th iteration.
    Every(usize),
    /// `t = 0` and every `round(ratio^k)`.
    LogSpaced(f64),
    /// Only the first and last iterations.
    Endpoints,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::LogSpaced(1.2)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordingPolicy {
    pub schedule: Schedule,
    /// Store `β_t` at every recorded point.
    pub keep_beta: bool,
}

impl RecordingPolicy {
    pub fn every(k: usize) -> Self {
        Self {
            schedule: Schedule::Every(k.max(1)),
            keep_beta: false,
        }
    }

    pub fn with_betas(mut self) -> Self {
        self.keep_beta = true;
        self
    }
}

/// Walks the recording grid in increasing order.
#[derive(Debug, Clone)]
pub struct GridCursor {
    schedule: Schedule,
    next: usize,
    power: f64,
}

impl GridCursor {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            next: 0,
            power: 1.0,
        }
    }

    /// Whether `t` is on the grid. Must be queried with non-decreasing `t`.
    pub fn hits(&mut self, t: usize) -> bool {
        if t < self.next {
            return false;
        }
        match self.schedule {
            Schedule::Every(k) => {
                let hit = t % k.max(1) == 0;
                self.next = t + 1;
                hit
            }
            Schedule::Endpoints => {
                self.next = usize::MAX;
                t == 0
            }
            Schedule::LogSpaced(ratio) => {
                let hit = t == self.next;
                let ratio = if ratio > 1.0 { ratio } else { 1.2 };
                while self.next <= t {
                    if self.next == 0 {
                        self.next = 1;
                        continue;
                    }
                    self.power *= ratio;
                    let cand = self.power.round() as usize;
                    if cand > self.next {
                        self.next = cand;
                    }
                }
                hit
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    TMax,
    Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: usize,
    pub train_rmse: f64,
    pub l1_norm: f64,
    pub beta_snapshot: Option<Vec<f64>>,
    /// `θ_{s₁}` of the strong-support coordinates of `β_t`.
    pub theta_s1: Option<f64>,
    /// `min_{j∈S₁} sign(β*_j)·β_{t,j}`.
    pub signed_strong_min: Option<f64>,
    /// `max_{j∉S₁} max(|a_{t,j}|, |b_{t,j}|)` (`|u_{t,j}|` for the non-negative variant).
    pub offsupport_maxabs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub stopped_at: usize,
    pub stop_reason: StopReason,
    pub trajectory: Vec<TrajectorySample>,
    pub diagnostics: BTreeMap<String, f64>,
    /// Factors at the last iteration run (not necessarily the selected one).
    pub g_final: Vec<f64>,
    pub l_final: Vec<f64>,
}

impl FitResult {
    pub fn beta(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_hat)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Watches the iterates of a run. Called once per iteration, including `t = 0`
/// and the final iterate; `on_grid` marks recording-grid points.
pub trait Observer {
    fn observe(&mut self, state: &IterateState, on_grid: bool) -> Control;
}

impl<F: FnMut(&IterateState, bool) -> Control> Observer for F {
    fn observe(&mut self, state: &IterateState, on_grid: bool) -> Control {
        self(state, on_grid)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub record: RecordingPolicy,
    pub truth: Option<&'a GroundTruth>,
}

pub fn run(ds: &Dataset, hp: &HyperParams, seed: u64, opts: &RunOptions<'_>) -> Result<FitResult> {
    run_observed(ds, hp, seed, opts, &mut |_: &IterateState, _| Control::Continue)
}

/// Runs gradient descent until the training RMSE reaches `stop_tol`, `t_max`
/// iterations have been taken, or the observer asks to stop.
pub fn run_observed(
    ds: &Dataset,
    hp: &HyperParams,
    seed: u64,
    opts: &RunOptions<'_>,
    observer: &mut dyn Observer,
) -> Result<FitResult> {
    let state = init_iterate(ds, hp, seed)?;
    run_from(ds, hp, state, opts, observer)
}

/// Same as [`run_observed`] from an explicit starting state.
pub fn run_from(
    ds: &Dataset,
    hp: &HyperParams,
    mut state: IterateState,
    opts: &RunOptions<'_>,
    observer: &mut dyn Observer,
) -> Result<FitResult> {
    hp.validate(ds.p())?;
    if let Some(truth) = opts.truth {
        if truth.p() != ds.p() {
            return Err(Error::Dimension(format!(
                "ground truth has p = {} but design has p = {}",
                truth.p(),
                ds.p()
            )));
        }
    }
    let eta = hp.resolve_eta(ds);
    let weights = hp.weights.as_deref();
    let mut ws = Workspace::new(ds.p());
    let mut cursor = GridCursor::new(opts.record.schedule);
    let mut trajectory = Vec::new();
    let initial_rmse = state.train_rmse();
    let blowup = DIVERGENCE_FACTOR * initial_rmse.max(f64::MIN_POSITIVE);

    let reason = loop {
        let rmse = state.train_rmse();
        let stop_now = if rmse <= hp.stop_tol {
            Some(StopReason::Tolerance)
        } else if state.t >= hp.t_max {
            Some(StopReason::TMax)
        } else {
            None
        };
        let on_grid = cursor.hits(state.t) || stop_now.is_some();
        let control = observer.observe(&state, on_grid);
        if on_grid || control == Control::Stop {
            trajectory.push(sample(&state, rmse, opts));
        }
        if let Some(reason) = stop_now {
            break reason;
        }
        if control == Control::Stop {
            break StopReason::Rule;
        }
        state.step(ds, eta, weights, &mut ws)?;
        let rmse = state.train_rmse();
        if rmse > blowup {
            return Err(Error::Divergence {
                t: state.t,
                max_abs: max_abs(&state.beta),
                last_finite_beta: state.beta.iter().copied().collect(),
                last_finite_t: state.t,
            });
        }
    };

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("eta".to_owned(), eta);
    diagnostics.insert("alpha".to_owned(), hp.alpha);
    diagnostics.insert("initial_rmse".to_owned(), initial_rmse);
    diagnostics.insert("final_rmse".to_owned(), state.train_rmse());
    diagnostics.insert("final_l1_norm".to_owned(), l1_norm(&state.beta));
    Ok(FitResult {
        beta_hat: state.beta.iter().copied().collect(),
        stopped_at: state.t,
        stop_reason: reason,
        trajectory,
        diagnostics,
        g_final: state.g.iter().copied().collect(),
        l_final: state.l.iter().copied().collect(),
    })
}

fn sample(state: &IterateState, rmse: f64, opts: &RunOptions<'_>) -> TrajectorySample {
    let mut s = TrajectorySample {
        t: state.t,
        train_rmse: rmse,
        l1_norm: l1_norm(&state.beta),
        beta_snapshot: opts.record.keep_beta.then(|| state.beta.iter().copied().collect()),
        theta_s1: None,
        signed_strong_min: None,
        offsupport_maxabs: None,
    };
    if let Some(truth) = opts.truth {
        let (theta, signed, off) = strong_and_offsupport(truth, &state.beta, |j| {
            let (g, l) = (state.g[j], state.l[j]);
            (0.5 * (g + l)).abs().max((0.5 * (g - l)).abs())
        });
        s.theta_s1 = Some(theta);
        s.signed_strong_min = Some(signed);
        s.offsupport_maxabs = Some(off);
    }
    s
}

/// `(θ_{s₁}(β_{S₁}), min_{S₁} sign(β*)β, max_{j∉S₁} factor_mag(j))`.
pub(crate) fn strong_and_offsupport(
    truth: &GroundTruth,
    beta: &DVector<f64>,
    factor_mag: impl Fn(usize) -> f64,
) -> (f64, f64, f64) {
    let mut theta = f64::INFINITY;
    let mut signed = f64::INFINITY;
    for &j in &truth.strong_support {
        theta = theta.min(beta[j].abs());
        signed = signed.min(truth.beta_star[j].signum() * beta[j]);
    }
    if truth.strong_support.is_empty() {
        theta = 0.0;
        signed = 0.0;
    }
    let off = (0..beta.len())
        .filter(|&j| !truth.is_strong(j))
        .map(&factor_mag)
        .fold(0.0_f64, f64::max);
    (theta, signed, off)
}

/// Runs the non-negative parametrization from `u₀ = α·1`.
pub fn run_nonneg(ds: &Dataset, hp: &HyperParams, opts: &RunOptions<'_>) -> Result<FitResult> {
    hp.validate(ds.p())?;
    let eta = hp.resolve_eta(ds);
    let mut state = NonnegState::init(ds, hp.alpha)?;
    let mut cursor = GridCursor::new(opts.record.schedule);
    let mut trajectory = Vec::new();
    let reason = loop {
        let rmse = state.train_rmse();
        let stop_now = if rmse <= hp.stop_tol {
            Some(StopReason::Tolerance)
        } else if state.t >= hp.t_max {
            Some(StopReason::TMax)
        } else {
            None
        };
        if cursor.hits(state.t) || stop_now.is_some() {
            let mut s = TrajectorySample {
                t: state.t,
                train_rmse: rmse,
                l1_norm: l1_norm(&state.beta),
                beta_snapshot: opts.record.keep_beta.then(|| state.beta.iter().copied().collect()),
                theta_s1: None,
                signed_strong_min: None,
                offsupport_maxabs: None,
            };
            if let Some(truth) = opts.truth {
                let (theta, signed, off) = strong_and_offsupport(truth, &state.beta, |j| state.u[j].abs());
                s.theta_s1 = Some(theta);
                s.signed_strong_min = Some(signed);
                s.offsupport_maxabs = Some(off);
            }
            trajectory.push(s);
        }
        if let Some(reason) = stop_now {
            break reason;
        }
        state.step(ds, eta, hp.weights.as_deref())?;
    };
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("eta".to_owned(), eta);
    diagnostics.insert("alpha".to_owned(), hp.alpha);
    diagnostics.insert("final_rmse".to_owned(), state.train_rmse());
    Ok(FitResult {
        beta_hat: state.beta.iter().copied().collect(),
        stopped_at: state.t,
        stop_reason: reason,
        trajectory,
        diagnostics,
        g_final: state.u.iter().copied().collect(),
        l_final: state.u.iter().copied().collect(),
    })
}

/// Minimal ℓ2-norm least-squares solution `X⁺y` via the SVD.
pub fn min_l2_solution(ds: &Dataset) -> DVector<f64> {
    let (n, p) = (ds.n(), ds.p());
    let svd = ds.x().clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (n.max(p) as f64) * smax * f64::EPSILON;
    svd.solve(ds.y(), eps)
        .expect("SVD computed with both factors")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub grad_norm: f64,
    pub is_stationary: bool,
    pub min_hessian_eig: f64,
}

/// Gradient norm and smallest Hessian eigenvalue of `f` at `(g, l)`.
///
/// With `A = XᵀX/n` and `q = Xᵀ(X(g∘l) − y)/n` the Hessian is
/// `[[D_l A D_l, D_l A D_g + D_q], [D_g A D_l + D_q, D_g A D_g]]`.
pub fn landscape_probe(ds: &Dataset, g: &DVector<f64>, l: &DVector<f64>, stationary_tol: f64) -> Result<LandscapeReport> {
    let p = ds.p();
    if p > HESSIAN_MAX_P {
        return Err(Error::TooLarge {
            what: "Hessian dimension p",
            actual: p,
            limit: HESSIAN_MAX_P,
            hint: "landscape probes need a dense 2p x 2p matrix",
        });
    }
    if g.len() != p || l.len() != p {
        return Err(Error::Dimension(format!("factors of length {}/{} for p = {p}", g.len(), l.len())));
    }
    let n = ds.n() as f64;
    let beta = g.component_mul(l);
    let residual = ds.x() * &beta - ds.y();
    let q = ds.x().tr_mul(&residual) / n;
    let grad_g = l.component_mul(&q);
    let grad_l = g.component_mul(&q);
    let grad_norm = (grad_g.norm_squared() + grad_l.norm_squared()).sqrt();

    let a = ds.x().tr_mul(ds.x()) / n;
    let mut h = DMatrix::zeros(2 * p, 2 * p);
    for j in 0..p {
        for k in 0..p {
            let ajk = a[(j, k)];
            h[(j, k)] = l[j] * ajk * l[k];
            h[(p + j, p + k)] = g[j] * ajk * g[k];
            h[(j, p + k)] = l[j] * ajk * g[k];
            h[(p + k, j)] = l[j] * ajk * g[k];
        }
        h[(j, p + j)] += q[j];
        h[(p + j, j)] += q[j];
    }
    let min_eig = h.symmetric_eigenvalues().min();
    Ok(LandscapeReport {
        grad_norm,
        is_stationary: grad_norm <= stationary_tol,
        min_hessian_eig: min_eig,
    })
}
