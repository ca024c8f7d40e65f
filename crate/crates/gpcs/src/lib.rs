//! Experiment harness for prior-robust GP confidence sequences.
//!
//! Coverage studies, misspecified-noise studies, BO comparisons and the
//! Branin benchmark, with CSV/JSON persistence. The numerics live in
//! [`gpcs_core`].

pub mod benchmark;
pub mod config;
pub mod coverage;
pub mod error;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{ExperimentError, Result};

/// `git describe`-style version tag written into summaries.
pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
