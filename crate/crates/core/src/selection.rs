//! Variable selection from a fitted coefficient vector.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::design::GroundTruth;
use crate::error::{Error, Result};

/// `β_j·1{|β_j| ≥ λ}`; ties are kept.
pub fn hard_threshold(beta: &DVector<f64>, lambda: f64) -> DVector<f64> {
    beta.map(|b| if b.abs() >= lambda { b } else { 0.0 })
}

/// Indices of the nonzero entries, ascending.
pub fn selected_indices(beta: &DVector<f64>) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConstants {
    pub c_lo: f64,
    pub c_hi: f64,
}

impl Default for WindowConstants {
    fn default() -> Self {
        Self { c_lo: 10.0, c_hi: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdWindow {
    pub lo: f64,
    pub hi: f64,
    pub constants: WindowConstants,
}

impl ThresholdWindow {
    /// Lower end, midpoint and upper end.
    pub fn probe_points(&self) -> [f64; 3] {
        [self.lo, 0.5 * (self.lo + self.hi), self.hi]
    }
}

/// `(c_lo/p, c_hi·σ̂·√(log p / n))`.
pub fn threshold_window(n: usize, p: usize, sigma_hat: f64, constants: WindowConstants) -> Result<ThresholdWindow> {
    if !(sigma_hat >= 0.0 && sigma_hat.is_finite()) {
        return Err(Error::Config(format!("sigma_hat = {sigma_hat} must be >= 0")));
    }
    if n == 0 || p < 2 {
        return Err(Error::Config(format!("window needs n >= 1 and p >= 2, got n = {n}, p = {p}")));
    }
    let lo = constants.c_lo / p as f64;
    let hi = constants.c_hi * sigma_hat * ((p as f64).ln() / n as f64).sqrt();
    if lo > hi {
        return Err(Error::EmptyWindow { lo, hi });
    }
    Ok(ThresholdWindow { lo, hi, constants })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub window: ThresholdWindow,
    pub thresholds: [f64; 3],
    pub selections: Vec<Vec<usize>>,
    /// Same selected set at all three probe points.
    pub stable: bool,
}

pub fn window_stability(beta: &DVector<f64>, window: ThresholdWindow) -> StabilityReport {
    let thresholds = window.probe_points();
    let selections: Vec<Vec<usize>> = thresholds
        .iter()
        .map(|&l| selected_indices(&hard_threshold(beta, l)))
        .collect();
    let stable = selections.windows(2).all(|w| w[0] == w[1]);
    StabilityReport {
        window,
        thresholds,
        selections,
        stable,
    }
}

/// `ω_j = max(|pilot_j|, floor)^power`, scaled so that `max ω = 1`.
pub fn adaptive_weights(pilot: &DVector<f64>, power: f64, floor: f64) -> Result<Vec<f64>> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::Config(format!("power = {power} must be positive")));
    }
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::Config(format!("floor = {floor} must be positive")));
    }
    let raw: Vec<f64> = pilot.iter().map(|v| v.abs().max(floor).powf(power)).collect();
    let top = raw.iter().copied().fold(0.0, f64::max);
    Ok(raw.into_iter().map(|w| w / top).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selected: Vec<usize>,
    /// Selected but truly zero.
    pub false_positives: usize,
    /// Truly nonzero but not selected.
    pub true_negatives_missed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdedSelection {
    pub threshold: f64,
    #[serde(flatten)]
    pub report: SelectionReport,
}

pub fn score_selection(selected: &[usize], truth: &GroundTruth) -> SelectionReport {
    let mut selected = selected.to_vec();
    selected.sort_unstable();
    selected.dedup();
    let in_support = |j: &usize| truth.support.binary_search(j).is_ok();
    let hits = selected.iter().filter(|j| in_support(j)).count();
    SelectionReport {
        false_positives: selected.len() - hits,
        true_negatives_missed: truth.support.len() - hits,
        selected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hard_threshold_examples() {
        let b = DVector::from_vec(vec![0.5, -0.01, 2.0]);
        assert_eq!(hard_threshold(&b, 0.1).as_slice(), &[0.5, 0.0, 2.0]);
        assert_eq!(hard_threshold(&b, 0.0), b);
        assert_eq!(hard_threshold(&b, 0.5)[0], 0.5);
    }

    #[test]
    fn window_arithmetic() {
        let w = threshold_window(200, 500, 1.0, WindowConstants::default()).unwrap();
        assert!((w.lo - 0.02).abs() < 1e-15);
        assert!((w.hi - (500f64.ln() / 200.0).sqrt()).abs() < 1e-15);
        assert!((w.hi - 0.176).abs() < 1e-3);
        assert!(matches!(
            threshold_window(200, 500, 0.0, WindowConstants::default()),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn adaptive_weight_examples() {
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(adaptive_weights(&e1, 1.0, 1e-4).unwrap(), vec![1.0, 1e-4, 1e-4]);
        let c = DVector::from_element(4, -0.3);
        assert_eq!(adaptive_weights(&c, 2.0, 1e-4).unwrap(), vec![1.0; 4]);
        assert!(adaptive_weights(&c, 0.0, 1e-4).is_err());
    }

    #[test]
    fn scoring_examples() {
        let mut beta = vec![0.0; 30];
        for b in beta.iter_mut().take(20) {
            *b = 1.0;
        }
        let truth = GroundTruth::all_strong(beta, 1.0).unwrap();
        let all: Vec<usize> = (0..20).collect();
        let rep = score_selection(&all, &truth);
        assert_eq!((rep.false_positives, rep.true_negatives_missed), (0, 0));
        let rep = score_selection(&[], &truth);
        assert_eq!(rep.true_negatives_missed, 20);
        let rep = score_selection(&[0, 25, 26], &truth);
        assert_eq!((rep.false_positives, rep.true_negatives_missed), (2, 19));
    }
}
