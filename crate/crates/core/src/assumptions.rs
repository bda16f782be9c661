//! Checks of the conditions under which the recovery guarantees hold.
//!
//! The conditions are stated up to unspecified constants, so each check
//! reports a dimensionless ratio that should be `O(1)` or smaller. A ratio
//! above 1 is flagged but never treated as an error.

use serde::{Deserialize, Serialize};

use crate::design::GroundTruth;
use crate::rip::RipEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `κ·m`.
    pub signal_ratio: f64,
    /// `δ_{s+1}·κ·√s·log(p/α)`, when a RIP estimate of order `s + 1` is supplied.
    pub rip_ratio: Option<f64>,
    /// `α·p`.
    pub init_ratio: f64,
    /// `η·κ·log(p/α)`.
    pub step_ratio: f64,
}

impl AssumptionReport {
    /// Names of the checks whose ratio exceeds 1.
    pub fn flagged(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.signal_ratio > 1.0 {
            out.push("signal_ratio");
        }
        if self.rip_ratio.is_some_and(|r| r > 1.0) {
            out.push("rip_ratio");
        }
        if self.init_ratio > 1.0 {
            out.push("init_ratio");
        }
        if self.step_ratio > 1.0 {
            out.push("step_ratio");
        }
        out
    }
}

pub fn check_assumptions(truth: &GroundTruth, rip: Option<&RipEstimate>, alpha: f64, eta: f64) -> AssumptionReport {
    let p = truth.p() as f64;
    let s = truth.support.len() as f64;
    let log_term = (p / alpha).ln();
    AssumptionReport {
        signal_ratio: truth.kappa * truth.m,
        rip_ratio: rip
            .filter(|r| r.sparsity == truth.support.len() + 1)
            .map(|r| r.delta_lower * truth.kappa * s.sqrt() * log_term),
        init_ratio: alpha * p,
        step_ratio: eta * truth.kappa * log_term,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_by_hand() {
        let mut beta = vec![0.0; 100];
        beta[0] = 0.5;
        beta[1] = 1.0;
        let truth = GroundTruth::all_strong(beta, 0.1).unwrap();
        let rip = RipEstimate {
            sparsity: 3,
            delta_lower: 0.01,
            supports_tested: 1,
            exhaustive: false,
            worst_support: vec![0, 1, 2],
        };
        let rep = check_assumptions(&truth, Some(&rip), 1e-4, 0.01);
        let log_term = (100.0f64 / 1e-4).ln();
        assert!((rep.signal_ratio - 1.0).abs() < 1e-15);
        assert!((rep.init_ratio - 0.01).abs() < 1e-15);
        assert!((rep.step_ratio - 0.02 * log_term).abs() < 1e-12);
        assert!((rep.rip_ratio.unwrap() - 0.01 * 2.0 * 2f64.sqrt() * log_term).abs() < 1e-12);
        assert!(rep.flagged().is_empty());
    }

    #[test]
    fn wrong_rip_order_is_ignored() {
        let truth = GroundTruth::all_strong(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        let rip = RipEstimate {
            sparsity: 1,
            delta_lower: 0.9,
            supports_tested: 3,
            exhaustive: true,
            worst_support: vec![0],
        };
        let rep = check_assumptions(&truth, Some(&rip), 1.0, 1.0);
        assert!(rep.rip_ratio.is_none());
        assert_eq!(rep.flagged(), vec!["init_ratio", "step_ratio"]);
    }
}
