use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gpcs::benchmark::{run_bo_compare, run_branin};
use gpcs::coverage::{run_coverage, run_noise_misspec};
use gpcs::output::{emit_bo, emit_coverage};
use gpcs::{ExperimentConfig, ExperimentError, ExperimentKind};

#[derive(Parser, Debug)]
#[command(name = "gpcs", version, about = "Prior-robust GP confidence sequences: experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time-uniform coverage of GP and CS bands under a misspecified prior.
    Coverage(Overrides),
    /// Coverage with misspecified observation noise, optionally with a powered likelihood.
    Noise(Overrides),
    /// GP-LCB versus CS-LCB on objectives drawn from the true prior.
    BoCompare(Overrides),
    /// GP-LCB versus CS-LCB on the Branin function.
    Branin(Overrides),
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// JSON config file; keys mirror the experiment config, unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Likelihood power in (0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated checkpoint times, e.g. 3,5,15,17,25,40.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<usize>>,
    /// Replications (coverage kinds) or number of seeds (BO kinds).
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed (coverage kinds) or first seed (BO kinds).
    #[arg(long)]
    seed: Option<u64>,
    /// True noise standard deviation as a multiple of the working one.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Plot grid size (coverage) or candidate points per dimension (BO).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(kind: ExperimentKind, o: &Overrides) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::from_file(kind, path)?,
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(v) = o.alpha {
        cfg.cs.alpha = v;
    }
    if let Some(v) = o.gamma {
        cfg.cs.gamma = v;
    }
    if let Some(v) = o.beta {
        cfg.cs.beta_power = v;
    }
    if let Some(v) = &o.times {
        cfg.times = v.clone();
    }
    if let Some(v) = o.reps {
        cfg.replications = v;
    }
    if let Some(v) = o.noise_scale {
        cfg.true_noise_scale = v;
    }
    if let Some(v) = o.grid {
        cfg.plot_grid_size = v;
    }
    if let Some(v) = &o.out {
        cfg.output_dir = v.clone();
    }
    if kind.is_bo() {
        if o.seed.is_some() || o.reps.is_some() {
            let first = o.seed.unwrap_or_else(|| cfg.seeds.first().copied().unwrap_or(0));
            cfg.seeds = (first..first + cfg.replications as u64).collect();
        }
    } else if let Some(s) = o.seed {
        cfg.seeds = vec![s];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(kind: ExperimentKind, o: &Overrides) -> ExitCode {
    let cfg = match build_config(kind, o) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gpcs: {e}");
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let result = match kind {
        ExperimentKind::Coverage | ExperimentKind::NoiseMisspec => {
            let out = if kind == ExperimentKind::Coverage {
                run_coverage(&cfg)
            } else {
                run_noise_misspec(&cfg)
            };
            out.and_then(|out| {
                let files = emit_coverage(&cfg.output_dir, &cfg, &out, start.elapsed())?;
                println!(
                    "miscoverage: cs = {:.4}, gp = {:.4} over {} replications ({} failed)",
                    out.summary.miscoverage_cs, out.summary.miscoverage_gp, out.summary.n_replications, out.summary.n_failed
                );
                Ok((files, out.summary.n_failed))
            })
        }
        ExperimentKind::BoCompare | ExperimentKind::Branin => {
            let (out, dim) = if kind == ExperimentKind::BoCompare {
                (run_bo_compare(&cfg), 1)
            } else {
                (run_branin(&cfg), 2)
            };
            out.and_then(|out| {
                let files = emit_bo(&cfg.output_dir, &cfg, &out, dim, start.elapsed())?;
                for m in &out.summary.methods {
                    println!(
                        "{}: final median best_so_far = {:.6}",
                        m.method,
                        m.best_so_far.median.last().copied().unwrap_or(f64::NAN)
                    );
                }
                Ok((files, out.summary.n_failed))
            })
        }
    };
    match result {
        Ok((files, n_failed)) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            if n_failed > 0 {
                eprintln!("gpcs: {n_failed} replication(s) failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(ExperimentError::Config(msg)) => {
            eprintln!("gpcs: config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("gpcs: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Coverage(o) => run(ExperimentKind::Coverage, o),
        Command::Noise(o) => run(ExperimentKind::NoiseMisspec, o),
        Command::BoCompare(o) => run(ExperimentKind::BoCompare, o),
        Command::Branin(o) => run(ExperimentKind::Branin, o),
    }
}
