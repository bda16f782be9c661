//! Sparse linear regression by early-stopped gradient descent on the
//! Hadamard-product parametrization `β = g∘l`, with lasso baselines,
//! data-driven stopping rules and the simulation harness used to compare them.

pub mod assumptions;
pub mod baselines;
pub mod data_io;
pub mod design;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rip;
pub mod seed;
pub mod selection;
pub mod solver;
pub mod stopping;

pub use design::{Covariance, CovarianceSpec, Dataset, GroundTruth};
pub use error::{Error, Result};
pub use solver::{FitResult, HyperParams, InitMode, IterateState, RecordingPolicy, RunOptions, StopReason};
