use std::path::{Path, PathBuf};

use gpcs_core::gp::GpPrior;
use gpcs_core::kernel::{NoiseModel, SeKernelParams};
use gpcs_core::ratio_cs::CsConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Coverage,
    NoiseMisspec,
    BoCompare,
    Branin,
}

impl ExperimentKind {
    pub fn is_bo(self) -> bool {
        matches!(self, ExperimentKind::BoCompare | ExperimentKind::Branin)
    }
}

/// Everything needed to rerun an experiment bit-for-bit.
///
/// For coverage kinds `seeds[0]` is the master seed and each replication gets
/// its own ChaCha stream. For BO kinds every seed is one run per method, and
/// `plot_grid_size` is the candidate grid size per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub true_prior: GpPrior,
    pub working_prior: GpPrior,
    pub cs: CsConfig,
    pub times: Vec<usize>,
    pub plot_grid_size: usize,
    pub replications: usize,
    pub seeds: Vec<u64>,
    /// Ratio of the true noise standard deviation to the working one.
    pub true_noise_scale: f64,
    pub output_dir: PathBuf,
    /// BO step budget (ignored by coverage kinds).
    pub budget: usize,
    /// Constant GP-LCB exploration weight `β_t` (so `β_t^{1/2} = 2` by default).
    pub gp_lcb_beta: f64,
}

pub fn prior_a() -> GpPrior {
    GpPrior::new(
        SeKernelParams {
            lengthscale: 1.0,
            signal_variance: 1.5,
        },
        NoiseModel { noise_variance: 0.1 },
    )
}

pub fn prior_b() -> GpPrior {
    GpPrior::new(
        SeKernelParams {
            lengthscale: 3.0,
            signal_variance: 1.0,
        },
        NoiseModel { noise_variance: 0.1 },
    )
}

pub fn branin_prior() -> GpPrior {
    GpPrior::new(
        SeKernelParams {
            lengthscale: 7.0,
            signal_variance: 0.1,
        },
        NoiseModel { noise_variance: 0.1 },
    )
}

pub const FIGURE_ONE_TIMES: [usize; 6] = [3, 5, 10, 20, 30, 60];
pub const BO_CHECKPOINTS: [usize; 4] = [3, 7, 18, 25];

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            true_prior: prior_a(),
            working_prior: prior_b(),
            cs: CsConfig::default(),
            times: FIGURE_ONE_TIMES.to_vec(),
            plot_grid_size: 200,
            replications: 500,
            seeds: vec![0],
            true_noise_scale: 1.0,
            output_dir: PathBuf::from("results").join(kind_dir(kind)),
            budget: 25,
            gp_lcb_beta: 4.0,
        };
        match kind {
            ExperimentKind::Coverage => base,
            ExperimentKind::NoiseMisspec => Self {
                replications: 300,
                true_noise_scale: 4.0,
                cs: CsConfig {
                    beta_power: 0.75,
                    ..CsConfig::default()
                },
                ..base
            },
            ExperimentKind::BoCompare => Self {
                times: BO_CHECKPOINTS.to_vec(),
                replications: 10,
                seeds: (0..10).collect(),
                ..base
            },
            ExperimentKind::Branin => Self {
                true_prior: branin_prior(),
                working_prior: branin_prior(),
                times: vec![10, 25, 50],
                plot_grid_size: 50,
                replications: 10,
                seeds: (0..10).collect(),
                budget: 50,
                ..base
            },
        }
    }

    /// Defaults for `kind` overlaid with a JSON object (deep merge).
    ///
    /// Unknown keys anywhere are rejected, as is a `kind` that disagrees with
    /// the requested one.
    pub fn from_json_overlay(kind: ExperimentKind, overlay: &str) -> Result<Self> {
        let overlay: Value =
            serde_json::from_str(overlay).map_err(|e| ExperimentError::Config(format!("invalid JSON: {e}")))?;
        if !overlay.is_object() {
            return Err(ExperimentError::Config("config file must hold a JSON object".into()));
        }
        let mut base = serde_json::to_value(Self::defaults(kind))?;
        merge(&mut base, &overlay, "")?;
        let cfg: Self = serde_json::from_value(base).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if cfg.kind != kind {
            return Err(ExperimentError::Config(format!(
                "config kind {:?} does not match subcommand {:?}",
                cfg.kind, kind
            )));
        }
        Ok(cfg)
    }

    pub fn from_file(kind: ExperimentKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_overlay(kind, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.true_prior.validate().or_else(|e| bad(format!("true_prior: {e}")))?;
        self.working_prior
            .validate()
            .or_else(|e| bad(format!("working_prior: {e}")))?;
        self.cs.validate().or_else(|e| bad(format!("cs: {e}")))?;
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return bad("times must be strictly increasing".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.plot_grid_size < 2 {
            return bad("plot_grid_size must be at least 2".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if !(self.true_noise_scale > 0.0 && self.true_noise_scale.is_finite()) {
            return bad(format!("true_noise_scale must be positive, got {}", self.true_noise_scale));
        }
        if self.kind.is_bo() {
            if self.budget == 0 {
                return bad("budget must be at least 1".into());
            }
            if !(self.gp_lcb_beta >= 0.0 && self.gp_lcb_beta.is_finite()) {
                return bad(format!("gp_lcb_beta must be nonnegative, got {}", self.gp_lcb_beta));
            }
        } else if self.times.is_empty() {
            return bad("times must not be empty".into());
        }
        Ok(())
    }

    /// Master seed for coverage kinds.
    pub fn master_seed(&self) -> u64 {
        self.seeds[0]
    }

    /// Standard deviation of the noise that generates observations.
    pub fn true_noise_sd(&self) -> f64 {
        self.true_noise_scale * self.working_prior.noise.std_dev()
    }
}

fn kind_dir(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Coverage => "coverage",
        ExperimentKind::NoiseMisspec => "noise",
        ExperimentKind::BoCompare => "bo_compare",
        ExperimentKind::Branin => "branin",
    }
}

fn merge(base: &mut Value, overlay: &Value, path: &str) -> Result<()> {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (key, value) in o {
                let here = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                match b.get_mut(key) {
                    Some(slot) => merge(slot, value, &here)?,
                    None => return Err(ExperimentError::Config(format!("unknown key `{here}`"))),
                }
            }
            Ok(())
        }
        (slot, value) => {
            *slot = value.clone();
            Ok(())
        }
    }
}
