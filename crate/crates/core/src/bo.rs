//! LCB acquisitions and the sequential Bayesian-optimization loop.
//!
//! Acquisitions are minimized by exhaustive search over a fixed candidate
//! grid. The acquisition at step `t` only sees `D_{t-1}`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gp::{Dataset, GpPosterior, GpPrior, GridGaussian};
use crate::kernel::NoiseModel;
use crate::ratio_cs::{band_on_grid, CsConfig};
use crate::Point;

fn lcb(means: &[f64], vars: &[f64], beta_t: f64) -> Vec<f64> {
    let scale = libm::sqrt(beta_t);
    means
        .iter()
        .zip(vars)
        .map(|(m, v)| m - scale * libm::sqrt(v.max(0.0)))
        .collect()
}

/// `μ_t - β_t^{1/2} σ_t` at every grid point.
pub fn gp_lcb(posterior: &GridGaussian, beta_t: f64) -> Vec<f64> {
    let vars: Vec<f64> = posterior.cov.diagonal().iter().copied().collect();
    lcb(posterior.mean.as_slice(), &vars, beta_t)
}

/// Lower envelope of the confidence-sequence band.
pub fn cs_lcb(prior: &GpPrior, data: &Dataset, candidate_grid: &[Point], cfg: &CsConfig) -> Result<Vec<f64>> {
    Ok(band_on_grid(prior, data, candidate_grid, cfg)?
        .into_iter()
        .map(|b| b.lower)
        .collect())
}

/// Smallest index attaining the minimum.
pub fn argmin_grid<'a>(values: &[f64], grid: &'a [Point]) -> Result<(usize, &'a Point)> {
    if values.is_empty() || grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if values.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: values.len(),
        });
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteAcquisition { index: i });
        }
        if *v < values[best] {
            best = i;
        }
    }
    Ok((best, &grid[best]))
}

/// Which acquisition drives a run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Acquisition {
    GpLcb { beta_t: f64 },
    CsLcb { cfg: CsConfig },
}

impl Acquisition {
    pub fn name(&self) -> &'static str {
        match self {
            Acquisition::GpLcb { .. } => "gp_lcb",
            Acquisition::CsLcb { .. } => "cs_lcb",
        }
    }

    /// Acquisition values over the candidate grid given the current data.
    pub fn evaluate(&self, prior: &GpPrior, data: &Dataset, grid: &[Point]) -> Result<Vec<f64>> {
        match self {
            Acquisition::GpLcb { beta_t } => {
                if !(*beta_t >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "beta_t",
                        value: *beta_t,
                    });
                }
                let (m, v) = GpPosterior::fit(prior, data)?.marginals(grid)?;
                Ok(lcb(&m, &v, *beta_t))
            }
            Acquisition::CsLcb { cfg } => cs_lcb(prior, data, grid, cfg),
        }
    }
}

pub type Objective<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;

/// The true objective with its observation noise and box domain.
pub struct BlackBox<'a> {
    pub objective: Objective<'a>,
    pub noise: NoiseModel,
    pub domain_bounds: Vec<(f64, f64)>,
}

impl<'a> BlackBox<'a> {
    pub fn new(
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'a,
        noise: NoiseModel,
        domain_bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if let Some((lo, hi)) = domain_bounds.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidParameter {
                name: "domain_bounds",
                value: hi - lo,
            });
        }
        Ok(Self {
            objective: Box::new(objective),
            noise,
            domain_bounds,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.domain_bounds.len()
            && x.iter().zip(&self.domain_bounds).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoStep {
    pub t: usize,
    pub x_chosen: Point,
    pub y_observed: f64,
    /// Noise-free objective at `x_chosen`.
    pub f_value: f64,
    pub acquisition_value: f64,
    /// Smallest noise-free objective value queried so far.
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoRun {
    pub seed: u64,
    pub acquisition: Acquisition,
    pub steps: Vec<BoStep>,
    /// Set when the run stopped before its budget.
    pub error: Option<Error>,
}

impl BoRun {
    pub fn final_best(&self) -> Option<f64> {
        self.steps.last().map(|s| s.best_so_far)
    }

    pub fn dataset(&self) -> Dataset {
        let mut d = Dataset::empty();
        for s in &self.steps {
            d.push(s.x_chosen.clone(), s.y_observed)
                .expect("steps share one dimension");
        }
        d
    }
}

/// Run `budget` steps of LCB-style BO on `black_box`.
///
/// Observation noise is drawn from a ChaCha8 stream seeded with `seed`, so two
/// runs with the same seed see the same noise sequence whatever they query.
/// An acquisition failure ends the run early and is recorded in
/// [`BoRun::error`]; invalid inputs are returned as errors.
pub fn bo_run(
    black_box: &BlackBox<'_>,
    prior: &GpPrior,
    acquisition: Acquisition,
    budget: usize,
    candidate_grid: &[Point],
    seed: u64,
) -> Result<BoRun> {
    if budget == 0 {
        return Err(Error::InvalidParameter {
            name: "budget",
            value: 0.0,
        });
    }
    if candidate_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(bad) = candidate_grid.iter().find(|x| !black_box.contains(x)) {
        return Err(Error::DimensionMismatch {
            expected: black_box.domain_bounds.len(),
            found: bad.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_sd = black_box.noise.std_dev();
    let mut data = Dataset::empty();
    let mut steps = Vec::with_capacity(budget);
    let mut best = f64::INFINITY;
    let mut error = None;

    for t in 1..=budget {
        let chosen = acquisition
            .evaluate(prior, &data, candidate_grid)
            .and_then(|values| argmin_grid(&values, candidate_grid).map(|(i, _)| (i, values[i])));
        let (idx, acq) = match chosen {
            Ok(c) => c,
            Err(e) => {
                error = Some(Error::Step {
                    step: t,
                    source: Box::new(e),
                });
                break;
            }
        };
        let x = candidate_grid[idx].clone();
        let f = (black_box.objective)(&x);
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = f + noise_sd * z;
        best = best.min(f);
        data.push(x.clone(), y)?;
        steps.push(BoStep {
            t,
            x_chosen: x,
            y_observed: y,
            f_value: f,
            acquisition_value: acq,
            best_so_far: best,
        });
    }
    Ok(BoRun {
        seed,
        acquisition,
        steps,
        error,
    })
}
