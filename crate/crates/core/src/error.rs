use alloc::boxed::Box;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix of dimension {dim} is not positive definite even after jitter")]
    NotPositiveDefinite { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("widening factor must be nonnegative, got {0}")]
    NegativeGamma(f64),

    #[error("grid is empty")]
    EmptyGrid,

    #[error("posterior and widened prior are defined on different grids")]
    GridMismatch,

    /// The ratio density at its mode is already below the threshold; the
    /// value is the (negative) squared-radius bracket.
    #[error("confidence set is empty (radius bracket {bracket})")]
    EmptyConfidenceSet { bracket: f64 },

    #[error("acquisition value at index {index} is not finite")]
    NonFiniteAcquisition { index: usize },

    #[error("band failed at {} point(s); first at x = {:?}: {}", .0.len(), .0[0].0, .0[0].1)]
    PointFailures(Vec<(Vec<f64>, Error)>),

    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },
}
