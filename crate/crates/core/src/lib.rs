//! Anytime-valid confidence sequences for functions under a Gaussian-process
//! working model whose prior may be misspecified.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure numerics:
//! dense SPD linear algebra ([`linalg`]), the squared-exponential kernel
//! ([`kernel`]), finite-grid GP posteriors and the exact prior-posterior ratio
//! ([`gp`]), the regularized ratio Gaussian and its confidence bands
//! ([`ratio_cs`]), and LCB-style Bayesian optimization ([`bo`]).
//!
//! Points are plain `Vec<f64>` coordinates; a grid is a slice of points.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod bo;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod linalg;
pub mod ratio_cs;

pub use error::{Error, Result};

/// A point in the input space.
pub type Point = alloc::vec::Vec<f64>;
