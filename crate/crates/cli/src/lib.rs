//! Driver behind the `scb-dyn` command: configuration loading, experiment
//! dispatch, parameter sweeps and reproducible file output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig, Kind, RawConfig};
use output::{config_json, to_json_text, write_file, Manifest, Scalars, WrittenFile};
use sweep::Axis;

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Numerical { context: String, source: scb_core::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Numerical { source: scb_core::Error::InvalidParameter { .. } | scb_core::Error::CompletePositivity { .. }, .. } => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io { .. } => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<WrittenFile>,
    pub scalars: Scalars,
}

/// Writes the data files and summary, then the manifest, which is written
/// even when the computation fails.
fn with_manifest<F>(out_dir: &Path, command: String, echo: Vec<(String, String)>, body: F) -> Result<RunReport, RunError>
where
    F: FnOnce(&Path) -> Result<(Vec<WrittenFile>, Scalars), RunError>,
{
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let start = Instant::now();
    let result = body(out_dir);
    let (files, error, exit_code) = match &result {
        Ok((files, _)) => (files.clone(), None, 0),
        Err(e) => (Vec::new(), Some(e.to_string()), e.exit_code()),
    };
    let manifest = Manifest { command, config: echo, duration_seconds: start.elapsed().as_secs_f64(), files, error, exit_code };
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, to_json_text(&manifest.to_json())).map_err(io_err(&path))?;
    let (files, scalars) = result?;
    Ok(RunReport { out_dir: out_dir.to_path_buf(), files, scalars })
}

/// Runs one experiment and writes its tables, `summary.json` and
/// `manifest.json` into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let echo = cfg.raw.echo();
    with_manifest(out_dir, "run".into(), echo.clone(), |dir| {
        let outcome = experiment::run(cfg).map_err(|source| RunError::Numerical { context: cfg.kind.name().into(), source })?;
        let mut files = Vec::new();
        for table in &outcome.tables {
            let path = dir.join(&table.file_name);
            files.push(write_file(dir, &table.file_name, &table.to_csv()).map_err(io_err(&path))?);
        }
        let summary = json!({
            "kind": cfg.kind.name(),
            "config": config_json(&echo),
            "results": outcome.scalars.to_json(),
        });
        let path = dir.join(SUMMARY_FILE);
        files.push(write_file(dir, SUMMARY_FILE, &to_json_text(&summary)).map_err(io_err(&path))?);
        Ok((files, outcome.scalars))
    })
}

/// Runs a sweep and writes `sweep.csv`, `summary.json` and `manifest.json`.
pub fn sweep_to_dir(base: &RawConfig, axes: &[Axis], cap: Option<usize>, out_dir: &Path) -> Result<RunReport, RunError> {
    let kind = ExperimentConfig::from_raw(base.clone())?.kind;
    let command = std::iter::once("sweep".to_string()).chain(axes.iter().map(|a| format!("--axis {}", a.spec))).collect::<Vec<_>>().join(" ");
    let echo = base.echo();
    with_manifest(out_dir, command, echo.clone(), |dir| {
        let result = sweep::run_sweep(base, axes, cap)?;
        let path = dir.join(&result.table.file_name);
        let mut files = vec![write_file(dir, &result.table.file_name, &result.table.to_csv()).map_err(io_err(&path))?];
        let axes_json: Vec<_> = axes.iter().map(|a| json!({ "key": a.key, "values": a.values })).collect();
        let summary = json!({
            "kind": kind.name(),
            "config": config_json(&echo),
            "axes": axes_json,
            "points": result.points,
        });
        let path = dir.join(SUMMARY_FILE);
        files.push(write_file(dir, SUMMARY_FILE, &to_json_text(&summary)).map_err(io_err(&path))?);
        let mut scalars = Scalars::default();
        scalars.insert("points", result.points as u64);
        Ok((files, scalars))
    })
}
