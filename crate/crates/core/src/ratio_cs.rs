//! Regularized prior-posterior-ratio confidence sequences.
//!
//! With a widened prior `GP̃₀` (signal variance `σ²(1+γ)`), the ratio
//! `GP_t(f) / GP̃₀(f)` on a finite grid is `c·N(f | μ_c, Σ_c)`. The confidence
//! set `{f : c·N(f | μ_c, Σ_c) ≥ α^{1/β}}` is the ellipsoid
//! `(f - μ_c)ᵀ Σ_c⁻¹ (f - μ_c) ≤ k²`, and its projection on the coordinate of a
//! test point gives the band `μ_c[j] ± k·sqrt(Σ_c[j, j])`.
//!
//! Two routes compute the same band:
//!
//! * [`ratio_gaussian`] + [`cs_radius`] + [`band_at_dense`] work on explicit
//!   grid covariances, for any pair of grid Gaussians.
//! * [`CsBand`] uses that the grid `G = X ∪ {x'}` contains every observed
//!   input. Then `Σ_c⁻¹ = (γ/(1+γ))·K₀⁻¹ + P/η²` with `P` selecting observed
//!   coordinates, so `N(μ_c, Σ_c)` is the GP posterior under a prior with
//!   signal variance `σ²(1+γ)/γ`, and `k` depends on the data only through
//!   `n × n` observation-space quantities. This route never factors the
//!   (typically near-singular) grid prior covariance.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::{posterior_on_grid, prior_on_grid, Dataset, GpPosterior, GpPrior, GridGaussian};
use crate::linalg::cholesky_with_jitter;
use crate::Point;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Miscoverage level, belief parameter and likelihood power.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CsConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub beta_power: f64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            gamma: 1e-2,
            beta_power: 1.0,
        }
    }
}

impl CsConfig {
    pub fn new(alpha: f64, gamma: f64, beta_power: f64) -> Result<Self> {
        let c = Self {
            alpha,
            gamma,
            beta_power,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
            });
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: self.gamma,
            });
        }
        if !(self.beta_power > 0.0 && self.beta_power <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta_power",
                value: self.beta_power,
            });
        }
        Ok(())
    }

    /// `-log(α) / β`, the log of the (powered) ratio threshold.
    pub fn log_threshold(&self) -> f64 {
        -libm::log(self.alpha) / self.beta_power
    }
}

/// `GP_t(f) / GP̃₀(f) = exp(log_c) · N(f | mu_c, sigma_c)` on a grid.
#[derive(Debug, Clone)]
pub struct RatioGaussian {
    pub grid: Vec<Point>,
    pub mu_c: DVector<f64>,
    pub sigma_c: DMatrix<f64>,
    pub log_c: f64,
    pub log_det_sigma_c: f64,
}

impl RatioGaussian {
    pub fn dim(&self) -> usize {
        self.mu_c.len()
    }

    /// `log c + log N(f | μ_c, Σ_c)`, the log of `GP_t(f) / GP̃₀(f)`.
    pub fn log_ratio(&self, f: &DVector<f64>) -> Result<f64> {
        let factor = cholesky_with_jitter(&self.sigma_c)?;
        let maha = factor.mahalanobis_sq(&(f - &self.mu_c))?;
        Ok(self.log_c - 0.5 * self.dim() as f64 * LN_2PI - 0.5 * self.log_det_sigma_c - 0.5 * maha)
    }
}

/// Form the ratio Gaussian of a posterior and a widened prior on one grid.
///
/// Uses `Σ_c = K_t + K_t D⁻¹ K_t` and `μ_c = μ_t + K_t D⁻¹ (μ_t - μ̃₀)` with
/// `D = K̃₀ - K_t`, which avoids inverting `K_t` and `K̃₀` separately.
pub fn ratio_gaussian(posterior: &GridGaussian, widened_prior: &GridGaussian) -> Result<RatioGaussian> {
    if posterior.grid != widened_prior.grid || posterior.mean.len() != widened_prior.mean.len() {
        return Err(Error::GridMismatch);
    }
    if posterior.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let m = posterior.len();
    let k_t = &posterior.cov;
    let k_w = &widened_prior.cov;

    let f_t = cholesky_with_jitter(k_t)?;
    let f_w = cholesky_with_jitter(k_w)?;
    let f_d = cholesky_with_jitter(&(k_w - k_t))?;

    let dm = &posterior.mean - &widened_prior.mean;
    let mu_c = &posterior.mean + k_t * f_d.solve(&dm)?;
    let sigma_c = k_t + k_t * f_d.solve_mat(k_t)?;
    let sigma_c = (&sigma_c + sigma_c.transpose()) * 0.5;
    // Σ_c = K̃₀ D⁻¹ K_t
    let log_det_sigma_c = f_t.log_det() + f_w.log_det() - f_d.log_det();

    // c = 1 / N(μ_c | μ̃₀, Σ_c + K̃₀), where Σ_c + K̃₀ = K̃₀ D⁻¹ K̃₀ and
    // μ_c - μ̃₀ = K̃₀ D⁻¹ (μ_t - μ̃₀); no inverse of K_t is needed.
    let log_c = 0.5 * m as f64 * LN_2PI + f_w.log_det() - 0.5 * f_d.log_det() + 0.5 * f_d.mahalanobis_sq(&dm)?;

    Ok(RatioGaussian {
        grid: posterior.grid.clone(),
        mu_c,
        sigma_c,
        log_c,
        log_det_sigma_c,
    })
}

/// Squared radius from the log peak of the ratio density.
///
/// `log_peak` is `log(c·N(μ_c | μ_c, Σ_c))`; the boundary of the confidence
/// ellipsoid sits where the log density has dropped to `log α / β`.
fn radius_from_log_peak(log_peak: f64, cfg: &CsConfig) -> Result<f64> {
    let bracket = log_peak + cfg.log_threshold();
    if !(bracket >= 0.0) {
        return Err(Error::EmptyConfidenceSet { bracket });
    }
    Ok(libm::sqrt(2.0 * bracket))
}

/// Mahalanobis radius `k` of the isocontour `c·N(f | μ_c, Σ_c) = α^{1/β}`.
pub fn cs_radius(r: &RatioGaussian, cfg: &CsConfig) -> Result<f64> {
    cfg.validate()?;
    let log_peak = r.log_c - 0.5 * r.dim() as f64 * LN_2PI - 0.5 * r.log_det_sigma_c;
    radius_from_log_peak(log_peak, cfg)
}

/// Per-point interval: the projection of the confidence ellipsoid.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPoint {
    pub x: Point,
    pub lower: f64,
    pub upper: f64,
    pub radius_k: f64,
}

impl BandPoint {
    pub fn center(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Endpoints are members of the set.
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

fn interval(x: Point, center: f64, var: f64, k: f64) -> BandPoint {
    let half = k * libm::sqrt(var.max(0.0));
    BandPoint {
        x,
        lower: center - half,
        upper: center + half,
        radius_k: k,
    }
}

fn check_dim(data: &Dataset, x: &[f64]) -> Result<()> {
    match data.dim() {
        Some(d) if d != x.len() => Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        }),
        _ => Ok(()),
    }
}

/// Band at `x_test` through explicit grid covariances on `G = X ∪ {x_test}`.
///
/// Requires the grid to be well conditioned (distinct, well separated points);
/// [`band_at`] is the production route.
pub fn band_at_dense(prior: &GpPrior, data: &Dataset, x_test: &[f64], cfg: &CsConfig) -> Result<BandPoint> {
    cfg.validate()?;
    check_dim(data, x_test)?;
    let mut grid = data.xs().to_vec();
    grid.push(x_test.to_vec());
    let posterior = posterior_on_grid(prior, data, &grid)?;
    let widened = prior.with_kernel(prior.kernel.widen(cfg.gamma)?);
    let widened_prior = prior_on_grid(&widened, &grid)?;
    let r = ratio_gaussian(&posterior, &widened_prior)?;
    let k = cs_radius(&r, cfg)?;
    let j = grid.len() - 1;
    Ok(interval(x_test.to_vec(), r.mu_c[j], r.sigma_c[(j, j)], k))
}

/// Confidence bands for one dataset, prepared once and queried per point.
#[derive(Debug, Clone)]
pub struct CsBand {
    center: GpPosterior,
    radius_k: f64,
}

impl CsBand {
    pub fn new(prior: &GpPrior, data: &Dataset, cfg: &CsConfig) -> Result<Self> {
        cfg.validate()?;
        prior.validate()?;
        let gamma = cfg.gamma;
        let n = data.len();
        let m = (n + 1) as f64;
        let eta2 = prior.noise.noise_variance;

        let working = GpPosterior::fit(prior, data)?;
        let inflated_kernel = prior.kernel.widen(gamma)?;
        let inflated_kernel = crate::kernel::SeKernelParams {
            signal_variance: inflated_kernel.signal_variance / gamma,
            ..inflated_kernel
        };
        let center = GpPosterior::fit(&prior.with_kernel(inflated_kernel), data)?;

        // log peak of GP_t/GP̃₀ on an (n+1)-point grid:
        //   ½ m log(1+γ) + ½ log|I + K/η²| + ½ bᵀ(S_c - S_t) b,  b = (Y - μ₀)/η²
        // where S are posterior covariances at X; the quadratic term reduces to
        // rᵀ(K+η²I)⁻¹r - rᵀ(K_c+η²I)⁻¹r.
        let (log_det_t, quad_t) = working.evidence_terms();
        let (_, quad_c) = center.evidence_terms();
        let log_det_ratio = log_det_t - n as f64 * libm::log(eta2);
        let log_peak = 0.5 * m * libm::log1p(gamma) + 0.5 * log_det_ratio + 0.5 * (quad_t - quad_c);
        let radius_k = radius_from_log_peak(log_peak, cfg)?;
        Ok(Self { center, radius_k })
    }

    pub fn radius_k(&self) -> f64 {
        self.radius_k
    }

    /// Center `μ_c` and variance `Σ_c[j, j]` at each point.
    pub fn center_and_variance(&self, points: &[Point]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.center.marginals(points)
    }

    pub fn at(&self, x: &[f64]) -> Result<BandPoint> {
        let pts = [x.to_vec()];
        let (m, v) = self.center.marginals(&pts)?;
        Ok(interval(x.to_vec(), m[0], v[0], self.radius_k))
    }

    pub fn on_points(&self, points: &[Point]) -> Result<Vec<BandPoint>> {
        let (m, v) = self.center.marginals(points)?;
        Ok(points
            .iter()
            .zip(m.into_iter().zip(v))
            .map(|(x, (c, var))| interval(x.clone(), c, var, self.radius_k))
            .collect())
    }
}

/// Band at one test point on its own grid `G = X ∪ {x_test}`.
pub fn band_at(prior: &GpPrior, data: &Dataset, x_test: &[f64], cfg: &CsConfig) -> Result<BandPoint> {
    check_dim(data, x_test)?;
    CsBand::new(prior, data, cfg)?.at(x_test)
}

/// [`band_at`] mapped over a plot grid, one grid `X ∪ {x'}` per point.
pub fn band_on_grid(
    prior: &GpPrior,
    data: &Dataset,
    plot_grid: &[Point],
    cfg: &CsConfig,
) -> Result<Vec<BandPoint>> {
    if plot_grid.is_empty() {
        return Ok(Vec::new());
    }
    let band = CsBand::new(prior, data, cfg)?;
    let mut out = Vec::with_capacity(plot_grid.len());
    let mut failures = Vec::new();
    for x in plot_grid {
        match check_dim(data, x).and_then(|_| band.at(x)) {
            Ok(b) => out.push(b),
            Err(e) => failures.push((x.clone(), e)),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::PointFailures(failures))
    }
}
