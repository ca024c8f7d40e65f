//! GP-LCB versus CS-LCB: sampled 1-D objectives and the Branin function.

use std::f64::consts::PI;

use gpcs_core::bo::{bo_run, Acquisition, BlackBox, BoRun};
use gpcs_core::gp::{prior_on_grid, sample_function};
use gpcs_core::kernel::NoiseModel;
use gpcs_core::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::coverage::DOMAIN;
use crate::error::{ExperimentError, Result};
use crate::linspace;

pub const BRANIN_MIN: f64 = 0.397_887_357_729_738_2;
pub const BRANIN_DOMAIN: [(f64, f64); 2] = [(-5.0, 10.0), (0.0, 15.0)];

/// Standard Branin–Hoo function on `[-5, 10] × [0, 15]`.
pub fn branin(x: &[f64]) -> Result<f64> {
    if x.len() != 2
        || !x
            .iter()
            .zip(BRANIN_DOMAIN)
            .all(|(v, (lo, hi))| lo <= *v && *v <= hi)
    {
        return Err(ExperimentError::OutOfDomain(x.to_vec()));
    }
    Ok(branin_unchecked(x[0], x[1]))
}

fn branin_unchecked(x1: f64, x2: f64) -> f64 {
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    let q = x2 - b * x1 * x1 + c * x1 - r;
    a * q * q + s * (1.0 - t) * x1.cos() + s
}

pub fn branin_lattice(per_dim: usize) -> Vec<Point> {
    let xs = linspace(BRANIN_DOMAIN[0].0, BRANIN_DOMAIN[0].1, per_dim);
    let ys = linspace(BRANIN_DOMAIN[1].0, BRANIN_DOMAIN[1].1, per_dim);
    let mut out = Vec::with_capacity(per_dim * per_dim);
    for x in &xs {
        for y in &ys {
            out.push(vec![*x, *y]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepQuantiles {
    pub q25: Vec<f64>,
    pub median: Vec<f64>,
    pub q75: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub best_so_far: StepQuantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoSummary {
    pub steps: Vec<usize>,
    pub methods: Vec<MethodSummary>,
    /// Known optimum (Branin only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<f64>,
    pub n_failed: usize,
    pub failures: Vec<String>,
}

/// One seed's pair of runs on a shared objective and noise stream.
#[derive(Debug, Clone)]
pub struct BoPair {
    pub seed: u64,
    pub gp_lcb: BoRun,
    pub cs_lcb: BoRun,
    /// Grid minimum of the objective over the candidate set.
    pub grid_min: f64,
}

#[derive(Debug, Clone)]
pub struct BoOutput {
    pub pairs: Vec<BoPair>,
    pub summary: BoSummary,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn method_summary(method: &str, runs: &[&BoRun], budget: usize) -> MethodSummary {
    let mut q25 = Vec::with_capacity(budget);
    let mut median = Vec::with_capacity(budget);
    let mut q75 = Vec::with_capacity(budget);
    for step in 0..budget {
        let vals: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.steps.get(step).map(|s| s.best_so_far))
            .collect();
        q25.push(quantile(&vals, 0.25));
        median.push(quantile(&vals, 0.5));
        q75.push(quantile(&vals, 0.75));
    }
    MethodSummary {
        method: method.to_string(),
        best_so_far: StepQuantiles { q25, median, q75 },
    }
}

pub fn summarize_pairs(pairs: &[BoPair], budget: usize, optimum: Option<f64>) -> BoSummary {
    let gp: Vec<&BoRun> = pairs.iter().map(|p| &p.gp_lcb).collect();
    let cs: Vec<&BoRun> = pairs.iter().map(|p| &p.cs_lcb).collect();
    let failures: Vec<String> = pairs
        .iter()
        .flat_map(|p| [&p.gp_lcb, &p.cs_lcb])
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("seed {} {}: {e}", r.seed, r.acquisition.name()))
        })
        .collect();
    BoSummary {
        steps: (1..=budget).collect(),
        methods: vec![method_summary("gp_lcb", &gp, budget), method_summary("cs_lcb", &cs, budget)],
        optimum,
        n_failed: failures.len(),
        failures,
    }
}

fn acquisitions(cfg: &ExperimentConfig) -> (Acquisition, Acquisition) {
    (
        Acquisition::GpLcb {
            beta_t: cfg.gp_lcb_beta,
        },
        Acquisition::CsLcb { cfg: cfg.cs },
    )
}

fn true_noise(cfg: &ExperimentConfig) -> Result<NoiseModel> {
    let sd = cfg.true_noise_sd();
    Ok(NoiseModel::new(sd * sd)?)
}

/// Seed of the objective draw for a BO seed; the noise stream uses the seed itself.
fn objective_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn run_pair(
    cfg: &ExperimentConfig,
    black_box: &BlackBox<'_>,
    grid: &[Point],
    seed: u64,
    grid_min: f64,
) -> Result<BoPair> {
    let (gp, cs) = acquisitions(cfg);
    Ok(BoPair {
        seed,
        gp_lcb: bo_run(black_box, &cfg.working_prior, gp, cfg.budget, grid, seed)?,
        cs_lcb: bo_run(black_box, &cfg.working_prior, cs, cfg.budget, grid, seed)?,
        grid_min,
    })
}

/// Per seed: draw `f*` from the true prior on the candidate grid, then run
/// GP-LCB and CS-LCB against it with the same noise stream.
pub fn run_bo_compare(cfg: &ExperimentConfig) -> Result<BoOutput> {
    if cfg.kind != ExperimentKind::BoCompare {
        return Err(ExperimentError::Config(format!("expected bo_compare config, got {:?}", cfg.kind)));
    }
    cfg.validate()?;
    let grid: Vec<Point> = linspace(DOMAIN.0, DOMAIN.1, cfg.plot_grid_size)
        .into_iter()
        .map(|x| vec![x])
        .collect();
    let noise = true_noise(cfg)?;
    let prior_grid = prior_on_grid(&cfg.true_prior, &grid)?;

    let pairs = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<BoPair> {
            let f_star = sample_function(&prior_grid, &mut objective_rng(seed))?;
            let values: Vec<f64> = f_star.iter().copied().collect();
            let grid_min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let lookup_grid = grid.clone();
            let black_box = BlackBox::new(
                move |x: &[f64]| {
                    let i = lookup_grid
                        .iter()
                        .position(|g| g.as_slice() == x)
                        .expect("queries come from the candidate grid");
                    values[i]
                },
                noise,
                vec![DOMAIN],
            )?;
            run_pair(cfg, &black_box, &grid, seed, grid_min)
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize_pairs(&pairs, cfg.budget, None);
    Ok(BoOutput { pairs, summary })
}

pub fn run_branin(cfg: &ExperimentConfig) -> Result<BoOutput> {
    if cfg.kind != ExperimentKind::Branin {
        return Err(ExperimentError::Config(format!("expected branin config, got {:?}", cfg.kind)));
    }
    cfg.validate()?;
    let grid = branin_lattice(cfg.plot_grid_size);
    let noise = true_noise(cfg)?;
    let grid_min = grid
        .iter()
        .map(|x| branin_unchecked(x[0], x[1]))
        .fold(f64::INFINITY, f64::min);
    let black_box = BlackBox::new(|x: &[f64]| branin_unchecked(x[0], x[1]), noise, BRANIN_DOMAIN.to_vec())?;

    let pairs = cfg
        .seeds
        .par_iter()
        .map(|&seed| run_pair(cfg, &black_box, &grid, seed, grid_min))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize_pairs(&pairs, cfg.budget, Some(BRANIN_MIN));
    Ok(BoOutput { pairs, summary })
}
