//! CSV record streams and JSON summaries.
//!
//! Floats are written with 17 significant digits so the CSV round-trips
//! exactly. Reruns with the same config are byte-identical apart from
//! `duration_s` in the summary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::benchmark::{BoOutput, BoSummary};
use crate::config::ExperimentConfig;
use crate::coverage::{CoverageOutput, CoverageRecord, CoverageSummary};
use crate::error::{ExperimentError, Result};
use crate::version_string;

pub const COVERAGE_HEADER: [&str; 9] = [
    "replication",
    "t",
    "x",
    "f_true",
    "gp_mean",
    "gp_lo",
    "gp_hi",
    "cs_lo",
    "cs_hi",
];

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_coverage_csv(path: &Path, records: &[CoverageRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(COVERAGE_HEADER).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.replication.to_string(),
            r.t.to_string(),
            fmt_float(r.x),
            fmt_float(r.f_true),
            fmt_float(r.gp_mean),
            fmt_float(r.gp_lo),
            fmt_float(r.gp_hi),
            fmt_float(r.cs_lo),
            fmt_float(r.cs_hi),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_coverage_csv(path: &Path) -> Result<Vec<CoverageRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != COVERAGE_HEADER {
        return Err(ExperimentError::Config(format!("unexpected coverage header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

fn bo_header(dim: usize) -> Vec<String> {
    let mut h = vec!["seed".to_string(), "method".to_string(), "t".to_string()];
    if dim == 1 {
        h.push("x".into());
    } else {
        h.extend((1..=dim).map(|i| format!("x{i}")));
    }
    h.push("y".into());
    h.push("best_so_far".into());
    h
}

pub fn write_bo_csv(path: &Path, output: &BoOutput, dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(bo_header(dim)).map_err(csv_err(path))?;
    for pair in &output.pairs {
        for run in [&pair.gp_lcb, &pair.cs_lcb] {
            for s in &run.steps {
                let mut row = vec![run.seed.to_string(), run.acquisition.name().to_string(), s.t.to_string()];
                row.extend(s.x_chosen.iter().map(|v| fmt_float(*v)));
                row.push(fmt_float(s.y_observed));
                row.push(fmt_float(s.best_so_far));
                w.write_record(&row).map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct Envelope<'a, S: Serialize> {
    version: String,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    summary: &'a S,
    duration_s: f64,
}

fn write_summary<S: Serialize>(dir: &Path, cfg: &ExperimentConfig, summary: &S, duration: Duration) -> Result<PathBuf> {
    let path = dir.join("summary.json");
    let env = Envelope {
        version: version_string(),
        config: cfg,
        summary,
        duration_s: duration.as_secs_f64(),
    };
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    serde_json::to_writer_pretty(&mut f, &env)?;
    writeln!(f).map_err(io_err(&path))?;
    Ok(path)
}

/// Write `coverage.csv` and `summary.json` under `dir`.
pub fn emit_coverage(dir: &Path, cfg: &ExperimentConfig, out: &CoverageOutput, duration: Duration) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let csv_path = dir.join("coverage.csv");
    write_coverage_csv(&csv_path, &out.records)?;
    let summary_path = write_summary::<CoverageSummary>(dir, cfg, &out.summary, duration)?;
    Ok(vec![csv_path, summary_path])
}

/// Write `bo_runs.csv` and `summary.json` under `dir`.
pub fn emit_bo(dir: &Path, cfg: &ExperimentConfig, out: &BoOutput, dim: usize, duration: Duration) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let csv_path = dir.join("bo_runs.csv");
    write_bo_csv(&csv_path, out, dim)?;
    let summary_path = write_summary::<BoSummary>(dir, cfg, &out.summary, duration)?;
    Ok(vec![csv_path, summary_path])
}
