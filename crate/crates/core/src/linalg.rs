//! Dense symmetric-positive-definite kernels: Cholesky with a jitter ladder,
//! solves, log-determinants, Mahalanobis distances and multivariate normals.
//!
//! Every matrix inverse and determinant elsewhere in the crate goes through
//! [`SpdFactor`]. Densities are kept in log space throughout.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative jitter levels tried in order, as multiples of the mean diagonal.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Lower Cholesky factor `L` with `L Lᵀ = A + jitter·I`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    lower: DMatrix<f64>,
    jitter: f64,
}

/// Factor a symmetric matrix, escalating diagonal jitter on failure.
///
/// The input is symmetrized as `(A + Aᵀ)/2` first. Jitter starts at zero and
/// climbs through [`JITTER_LADDER`] scaled by the mean diagonal.
pub fn cholesky_with_jitter(a: &DMatrix<f64>) -> Result<SpdFactor> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyGrid);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { dim: n });
    }
    let sym = (a + a.transpose()) * 0.5;
    let mean_diag = sym.diagonal().iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };

    for eps in JITTER_LADDER {
        let jitter = eps * scale;
        let mut m = sym.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let lower = chol.unpack();
            if lower.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok(SpdFactor { lower, jitter });
            }
        }
    }
    Err(Error::NotPositiveDefinite { dim: n })
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Diagonal inflation that was actually needed to factor the input.
    pub fn jitter_applied(&self) -> f64 {
        self.jitter
    }

    /// `L Lᵀ`, i.e. the (jittered) matrix that was factored.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rows,
            });
        }
        Ok(())
    }

    /// `L⁻¹ b` by forward substitution.
    pub fn solve_lower(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(b.len())?;
        Ok(self
            .lower
            .solve_lower_triangular(b)
            .expect("cholesky diagonal is strictly positive"))
    }

    pub fn solve_lower_mat(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(b.nrows())?;
        Ok(self
            .lower
            .solve_lower_triangular(b)
            .expect("cholesky diagonal is strictly positive"))
    }

    /// Solve `(L Lᵀ) x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.solve_lower(b)?;
        Ok(self
            .lower
            .tr_solve_lower_triangular(&z)
            .expect("cholesky diagonal is strictly positive"))
    }

    /// Solve `(L Lᵀ) X = B` column by column.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let z = self.solve_lower_mat(b)?;
        Ok(self
            .lower
            .tr_solve_lower_triangular(&z)
            .expect("cholesky diagonal is strictly positive"))
    }

    /// `(L Lᵀ)⁻¹`, symmetrized.
    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self
            .solve_mat(&DMatrix::identity(self.dim(), self.dim()))
            .expect("square identity matches dimension");
        (&inv + inv.transpose()) * 0.5
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
    }

    /// `δᵀ (L Lᵀ)⁻¹ δ` via one triangular solve.
    pub fn mahalanobis_sq(&self, delta: &DVector<f64>) -> Result<f64> {
        let z = self.solve_lower(delta)?;
        Ok(z.norm_squared())
    }
}

/// Free-function form of [`SpdFactor::solve`].
pub fn solve_spd(f: &SpdFactor, b: &DVector<f64>) -> Result<DVector<f64>> {
    f.solve(b)
}

pub fn log_det_spd(f: &SpdFactor) -> f64 {
    f.log_det()
}

pub fn mahalanobis_sq(f: &SpdFactor, delta: &DVector<f64>) -> Result<f64> {
    f.mahalanobis_sq(delta)
}

/// Draw `mean + L z` with `z` standard normal from `rng`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    f: &SpdFactor,
    rng: &mut R,
) -> Result<DVector<f64>> {
    f.check_rows(mean.len())?;
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(mean + &f.lower * z)
}

/// Log density of `N(x | mean, L Lᵀ)`.
pub fn log_mvn_density(x: &DVector<f64>, mean: &DVector<f64>, f: &SpdFactor) -> Result<f64> {
    f.check_rows(x.len())?;
    f.check_rows(mean.len())?;
    let maha = f.mahalanobis_sq(&(x - mean))?;
    Ok(-0.5 * (x.len() as f64) * LN_2PI - 0.5 * f.log_det() - 0.5 * maha)
}
