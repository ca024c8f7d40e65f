//! Finite-grid GP prior and posterior, the Gaussian working likelihood, the
//! evidence, and the exact log prior-posterior ratio.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{cross_kernel, kernel_matrix, NoiseModel, SeKernelParams};
use crate::linalg::{cholesky_with_jitter, sample_mvn, SpdFactor};
use crate::Point;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Working model: constant-mean GP with an SE kernel and Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct GpPrior {
    pub kernel: SeKernelParams,
    pub noise: NoiseModel,
    #[cfg_attr(feature = "serde", serde(default))]
    pub mean_value: f64,
}

impl GpPrior {
    pub fn new(kernel: SeKernelParams, noise: NoiseModel) -> Self {
        Self {
            kernel,
            noise,
            mean_value: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.noise.validate()?;
        if !self.mean_value.is_finite() {
            return Err(Error::InvalidParameter {
                name: "mean_value",
                value: self.mean_value,
            });
        }
        Ok(())
    }

    pub fn with_kernel(self, kernel: SeKernelParams) -> Self {
        Self { kernel, ..self }
    }
}

/// Observations in filtration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    xs: Vec<Point>,
    ys: Vec<f64>,
}

impl Dataset {
    pub fn new(xs: Vec<Point>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len(),
                found: ys.len(),
            });
        }
        let d = xs.first().map_or(0, |p| p.len());
        if let Some(bad) = xs.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Ok(Self { xs, ys })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Point, y: f64) -> Result<()> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
        }
        self.xs.push(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Input dimension, or `None` when no data has been observed.
    pub fn dim(&self) -> Option<usize> {
        self.xs.first().map(|p| p.len())
    }

    pub fn xs(&self) -> &[Point] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// The first `t` observations, `D_t`.
    pub fn prefix(&self, t: usize) -> Self {
        let t = t.min(self.len());
        Self {
            xs: self.xs[..t].to_vec(),
            ys: self.ys[..t].to_vec(),
        }
    }
}

/// A multivariate normal over function values on a finite grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGaussian {
    pub grid: Vec<Point>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GridGaussian {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn factor(&self) -> Result<SpdFactor> {
        cholesky_with_jitter(&self.cov)
    }

    /// Pointwise standard deviations, with tiny negative variances clamped to zero.
    pub fn std_devs(&self) -> Vec<f64> {
        self.cov.diagonal().iter().map(|v| libm::sqrt(v.max(0.0))).collect()
    }
}

fn check_grid_dim(grid: &[Point], data: &Dataset) -> Result<()> {
    if let (Some(g), Some(d)) = (grid.first(), data.dim()) {
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.len(),
            });
        }
    }
    Ok(())
}

pub fn prior_on_grid(prior: &GpPrior, grid: &[Point]) -> Result<GridGaussian> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(GridGaussian {
        grid: grid.to_vec(),
        mean: DVector::from_element(grid.len(), prior.mean_value),
        cov: kernel_matrix(grid, &prior.kernel)?,
    })
}

/// A GP conditioned on a dataset, with `K + η²I` factored once.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    prior: GpPrior,
    xs: Vec<Point>,
    fit: Option<Fit>,
}

#[derive(Debug, Clone)]
struct Fit {
    factor: SpdFactor,
    // (K + η²I)⁻¹ (Y - μ₀)
    weights: DVector<f64>,
    residual: DVector<f64>,
}

impl GpPosterior {
    pub fn fit(prior: &GpPrior, data: &Dataset) -> Result<Self> {
        let fit = if data.is_empty() {
            None
        } else {
            let mut k = kernel_matrix(data.xs(), &prior.kernel)?;
            for i in 0..data.len() {
                k[(i, i)] += prior.noise.noise_variance;
            }
            let factor = cholesky_with_jitter(&k)?;
            let residual = DVector::from_iterator(data.len(), data.ys().iter().map(|y| y - prior.mean_value));
            let weights = factor.solve(&residual)?;
            Some(Fit {
                factor,
                weights,
                residual,
            })
        };
        Ok(Self {
            prior: *prior,
            xs: data.xs().to_vec(),
            fit,
        })
    }

    pub fn prior(&self) -> &GpPrior {
        &self.prior
    }

    pub fn num_observations(&self) -> usize {
        self.xs.len()
    }

    fn check_points(&self, points: &[Point]) -> Result<()> {
        let d = self.xs.first().map(|p| p.len()).or_else(|| points.first().map(|p| p.len()));
        if let Some(d) = d {
            if let Some(bad) = points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: bad.len(),
                });
            }
        }
        Ok(())
    }

    /// Joint posterior mean and covariance over `grid`.
    pub fn on_grid(&self, grid: &[Point]) -> Result<GridGaussian> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        self.check_points(grid)?;
        let mut g = prior_on_grid(&self.prior, grid)?;
        if let Some(fit) = &self.fit {
            let k_xg = cross_kernel(&self.xs, grid, &self.prior.kernel)?;
            g.mean += k_xg.tr_mul(&fit.weights);
            let v = fit.factor.solve_lower_mat(&k_xg)?;
            g.cov -= v.tr_mul(&v);
            g.cov = (&g.cov + g.cov.transpose()) * 0.5;
        }
        Ok(g)
    }

    /// Posterior means and variances at each point, without the joint covariance.
    pub fn marginals(&self, points: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_points(points)?;
        let prior_var = self.prior.kernel.signal_variance;
        match &self.fit {
            None => Ok((
                alloc::vec![self.prior.mean_value; points.len()],
                alloc::vec![prior_var; points.len()],
            )),
            Some(fit) => {
                if points.is_empty() {
                    return Ok((Vec::new(), Vec::new()));
                }
                let k_xg = cross_kernel(&self.xs, points, &self.prior.kernel)?;
                let mean = k_xg.tr_mul(&fit.weights);
                let v = fit.factor.solve_lower_mat(&k_xg)?;
                let means = mean.iter().map(|m| self.prior.mean_value + m).collect();
                let vars = v
                    .column_iter()
                    .map(|c| prior_var - c.norm_squared())
                    .collect();
                Ok((means, vars))
            }
        }
    }

    /// `log N(Y | μ₀1, K + η²I)`; zero with no data.
    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.fit {
            None => 0.0,
            Some(fit) => {
                let n = self.xs.len() as f64;
                -0.5 * n * LN_2PI - 0.5 * fit.factor.log_det() - 0.5 * fit.residual.dot(&fit.weights)
            }
        }
    }

    /// `log|K + η²I|` and `(Y - μ₀)ᵀ(K + η²I)⁻¹(Y - μ₀)`; both zero with no data.
    pub fn evidence_terms(&self) -> (f64, f64) {
        match &self.fit {
            None => (0.0, 0.0),
            Some(fit) => (fit.factor.log_det(), fit.residual.dot(&fit.weights)),
        }
    }
}

pub fn posterior_on_grid(prior: &GpPrior, data: &Dataset, grid: &[Point]) -> Result<GridGaussian> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    check_grid_dim(grid, data)?;
    GpPosterior::fit(prior, data)?.on_grid(grid)
}

/// Gaussian working log-likelihood `Σ log φ((Yᵢ - f(Xᵢ))/η)/η`.
pub fn log_likelihood(f_at_xs: &[f64], data: &Dataset, noise: &NoiseModel) -> Result<f64> {
    if f_at_xs.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            found: f_at_xs.len(),
        });
    }
    let var = noise.noise_variance;
    let norm = -0.5 * libm::log(2.0 * core::f64::consts::PI * var);
    Ok(f_at_xs
        .iter()
        .zip(data.ys())
        .map(|(f, y)| {
            let r = y - f;
            norm - r * r / (2.0 * var)
        })
        .sum())
}

pub fn log_marginal_likelihood(prior: &GpPrior, data: &Dataset) -> Result<f64> {
    Ok(GpPosterior::fit(prior, data)?.log_marginal_likelihood())
}

/// `log R_t(f)`: evidence over the likelihood of `f`, so `R_0 = 1`.
pub fn exact_log_ppr(prior: &GpPrior, data: &Dataset, f_at_xs: &[f64]) -> Result<f64> {
    let ll = log_likelihood(f_at_xs, data, &prior.noise)?;
    Ok(log_marginal_likelihood(prior, data)? - ll)
}

pub fn sample_function<R: Rng + ?Sized>(g: &GridGaussian, rng: &mut R) -> Result<DVector<f64>> {
    let f = g.factor()?;
    sample_mvn(&g.mean, &f, rng)
}
