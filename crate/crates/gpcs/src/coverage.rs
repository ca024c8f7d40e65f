//! Time-uniform coverage of GP posterior bands versus confidence-sequence
//! bands, with the true function drawn from one prior and inference run
//! under another.

use gpcs_core::gp::{Dataset, GpPosterior};
use gpcs_core::linalg::{cholesky_with_jitter, sample_mvn};
use gpcs_core::kernel::kernel_matrix;
use gpcs_core::ratio_cs::CsBand;
use gpcs_core::Point;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{ExperimentError, Result};
use crate::linspace;

pub const DOMAIN: (f64, f64) = (-10.0, 10.0);

/// Two-sided 95% normal quantile used for the GP posterior band.
pub const GP_BAND_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub replication: usize,
    pub t: usize,
    pub x: f64,
    pub f_true: f64,
    pub gp_mean: f64,
    pub gp_lo: f64,
    pub gp_hi: f64,
    pub cs_lo: f64,
    pub cs_hi: f64,
}

impl CoverageRecord {
    pub fn cs_covers(&self) -> bool {
        self.cs_lo <= self.f_true && self.f_true <= self.cs_hi
    }

    pub fn gp_covers(&self) -> bool {
        self.gp_lo <= self.f_true && self.f_true <= self.gp_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub true_noise_scale: f64,
    pub beta_power: f64,
    pub miscoverage_cs: f64,
    pub miscoverage_gp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub error: String,
}

/// Time-uniform miscoverage: the fraction of successful replications in which
/// the band missed `f*` at some checkpoint and some grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub miscoverage_cs: f64,
    pub miscoverage_gp: f64,
    pub n_replications: usize,
    pub n_failed: usize,
    pub failures: Vec<ReplicationFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_cell: Option<NoiseCell>,
}

#[derive(Debug, Clone)]
pub struct CoverageOutput {
    pub records: Vec<CoverageRecord>,
    pub summary: CoverageSummary,
}

/// Per-replication RNG: the master seed with the replication index as the
/// ChaCha stream id, so results do not depend on scheduling.
pub fn replication_rng(master_seed: u64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication as u64);
    rng
}

pub fn plot_grid(size: usize) -> Vec<Point> {
    linspace(DOMAIN.0, DOMAIN.1, size).into_iter().map(|x| vec![x]).collect()
}

/// One replication: draw inputs, then `f*` jointly on grid ∪ inputs, then noise.
fn run_replication(cfg: &ExperimentConfig, grid: &[Point], replication: usize) -> Result<Vec<CoverageRecord>> {
    let mut rng = replication_rng(cfg.master_seed(), replication);
    let horizon = cfg.times.last().copied().unwrap_or(0);
    let xs: Vec<Point> = (0..horizon)
        .map(|_| vec![rng.random_range(DOMAIN.0..DOMAIN.1)])
        .collect();

    let mut joint: Vec<Point> = grid.to_vec();
    joint.extend(xs.iter().cloned());
    let cov = kernel_matrix(&joint, &cfg.true_prior.kernel)?;
    let factor = cholesky_with_jitter(&cov)?;
    let mean = DVector::from_element(joint.len(), cfg.true_prior.mean_value);
    let f_star = sample_mvn(&mean, &factor, &mut rng)?;

    let noise_sd = cfg.true_noise_sd();
    let ys: Vec<f64> = (0..horizon)
        .map(|i| f_star[grid.len() + i] + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let full = Dataset::new(xs, ys)?;

    let mut records = Vec::with_capacity(cfg.times.len() * grid.len());
    for &t in &cfg.times {
        let data = full.prefix(t);
        let (gp_mean, gp_var) = GpPosterior::fit(&cfg.working_prior, &data)?.marginals(grid)?;
        let cs = CsBand::new(&cfg.working_prior, &data, &cfg.cs)?.on_points(grid)?;
        for (j, band) in cs.iter().enumerate() {
            let half = GP_BAND_Z * gp_var[j].max(0.0).sqrt();
            records.push(CoverageRecord {
                replication,
                t,
                x: grid[j][0],
                f_true: f_star[j],
                gp_mean: gp_mean[j],
                gp_lo: gp_mean[j] - half,
                gp_hi: gp_mean[j] + half,
                cs_lo: band.lower,
                cs_hi: band.upper,
            });
        }
    }
    Ok(records)
}

/// Miscoverage statistics from raw records alone.
pub fn summarize_records(records: &[CoverageRecord]) -> (f64, f64, usize) {
    let mut reps: Vec<(usize, bool, bool)> = Vec::new();
    for r in records {
        match reps.last_mut() {
            Some(last) if last.0 == r.replication => {
                last.1 |= !r.cs_covers();
                last.2 |= !r.gp_covers();
            }
            _ => reps.push((r.replication, !r.cs_covers(), !r.gp_covers())),
        }
    }
    let n = reps.len();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let cs = reps.iter().filter(|r| r.1).count() as f64 / n as f64;
    let gp = reps.iter().filter(|r| r.2).count() as f64 / n as f64;
    (cs, gp, n)
}

fn run_pipeline(cfg: &ExperimentConfig) -> Result<CoverageOutput> {
    cfg.validate()?;
    let grid = plot_grid(cfg.plot_grid_size);
    let results: Vec<Result<Vec<CoverageRecord>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, &grid, r))
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (replication, res) in results.into_iter().enumerate() {
        match res {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(ReplicationFailure {
                replication,
                error: e.to_string(),
            }),
        }
    }
    let (miscoverage_cs, miscoverage_gp, n_replications) = summarize_records(&records);
    Ok(CoverageOutput {
        records,
        summary: CoverageSummary {
            miscoverage_cs,
            miscoverage_gp,
            n_replications,
            n_failed: failures.len(),
            failures,
            noise_cell: None,
        },
    })
}

pub fn run_coverage(cfg: &ExperimentConfig) -> Result<CoverageOutput> {
    if cfg.kind != ExperimentKind::Coverage {
        return Err(ExperimentError::Config(format!("expected coverage config, got {:?}", cfg.kind)));
    }
    run_pipeline(cfg)
}

/// Coverage pipeline with the observation noise scaled by `true_noise_scale`.
pub fn run_noise_misspec(cfg: &ExperimentConfig) -> Result<CoverageOutput> {
    if cfg.kind != ExperimentKind::NoiseMisspec {
        return Err(ExperimentError::Config(format!("expected noise_misspec config, got {:?}", cfg.kind)));
    }
    let mut out = run_pipeline(cfg)?;
    out.summary.noise_cell = Some(NoiseCell {
        true_noise_scale: cfg.true_noise_scale,
        beta_power: cfg.cs.beta_power,
        miscoverage_cs: out.summary.miscoverage_cs,
        miscoverage_gp: out.summary.miscoverage_gp,
    });
    Ok(out)
}
