//! Squared-exponential kernel, kernel matrices, and the widened prior kernel.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Point;

/// Isotropic squared-exponential kernel `σ² exp(-‖x - x'‖² / 2ℓ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SeKernelParams {
    pub lengthscale: f64,
    pub signal_variance: f64,
}

impl SeKernelParams {
    pub fn new(lengthscale: f64, signal_variance: f64) -> Result<Self> {
        let p = Self {
            lengthscale,
            signal_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lengthscale",
                value: self.lengthscale,
            });
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "signal_variance",
                value: self.signal_variance,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], x_prime: &[f64]) -> Result<f64> {
        if x.len() != x_prime.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: x_prime.len(),
            });
        }
        Ok(self.eval_unchecked(x, x_prime))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        let sq: f64 = x
            .iter()
            .zip(x_prime)
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum();
        self.signal_variance * libm::exp(-sq / (2.0 * self.lengthscale * self.lengthscale))
    }

    /// Same lengthscale, signal variance scaled by `1 + gamma`.
    pub fn widen(&self, gamma: f64) -> Result<Self> {
        if gamma < 0.0 || gamma.is_nan() {
            return Err(Error::NegativeGamma(gamma));
        }
        Ok(Self {
            lengthscale: self.lengthscale,
            signal_variance: self.signal_variance * (1.0 + gamma),
        })
    }
}

/// Observation noise variance `η²`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct NoiseModel {
    pub noise_variance: f64,
}

impl NoiseModel {
    pub fn new(noise_variance: f64) -> Result<Self> {
        let n = Self { noise_variance };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "noise_variance",
                value: self.noise_variance,
            });
        }
        Ok(())
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.noise_variance)
    }
}

pub fn se_eval(x: &[f64], x_prime: &[f64], p: &SeKernelParams) -> Result<f64> {
    p.eval(x, x_prime)
}

pub fn widen(p: &SeKernelParams, gamma: f64) -> Result<SeKernelParams> {
    p.widen(gamma)
}

fn common_dim(points: &[Point]) -> Result<usize> {
    let d = points.first().map_or(0, |p| p.len());
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
    }
    Ok(d)
}

/// Gram matrix `K[i, j] = κ(points[i], points[j])`.
pub fn kernel_matrix(points: &[Point], p: &SeKernelParams) -> Result<DMatrix<f64>> {
    common_dim(points)?;
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = p.eval_unchecked(&points[i], &points[i]);
        for j in 0..i {
            let v = p.eval_unchecked(&points[i], &points[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn cross_kernel(points_a: &[Point], points_b: &[Point], p: &SeKernelParams) -> Result<DMatrix<f64>> {
    let da = common_dim(points_a)?;
    let db = common_dim(points_b)?;
    if !points_a.is_empty() && !points_b.is_empty() && da != db {
        return Err(Error::DimensionMismatch {
            expected: da,
            found: db,
        });
    }
    Ok(DMatrix::from_fn(points_a.len(), points_b.len(), |i, j| {
        p.eval_unchecked(&points_a[i], &points_b[j])
    }))
}
