//! Parameter sweeps over numeric configuration keys.
//!
//! An axis is written `key=start:stop:count[:log]` on the command line. The
//! grid is the Cartesian product of all axes with the last axis varying
//! fastest; points run in parallel but rows always come back in grid order.

use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, Origin, RawConfig, NUMERIC_KEYS};
use crate::experiment::{self, Outcome};
use crate::output::{Cell, Table};
use crate::RunError;

/// Default cap on grid points for closed-form kinds.
pub const ANALYTIC_CAP: usize = 1_000_000;
/// Default cap on grid points for kinds that integrate in time.
pub const EVOLUTION_CAP: usize = 1_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<f64>,
    /// The text the axis was parsed from.
    pub spec: String,
}

impl Axis {
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (key, range) = spec.split_once('=').ok_or_else(|| format!("axis '{spec}': expected key=start:stop:count[:log]"))?;
        let key = key.trim();
        if !NUMERIC_KEYS.contains(&key) {
            return Err(format!("axis '{spec}': '{key}' is not a numeric configuration key"));
        }
        if !range.contains(':') {
            return Err(format!("axis '{spec}': expected start:stop:count[:log]"));
        }
        let values = parse_values(range).map_err(|e| format!("axis '{key}': {e}"))?;
        Ok(Self { key: key.to_string(), values, spec: spec.trim().to_string() })
    }
}

/// A comma-separated list (`1, 2.5, 4`) or a range `start:stop:count[:log]`.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    if text.contains(':') {
        return parse_range(text);
    }
    text.split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("expected a number, got '{item}'")),
            }
        })
        .collect()
}

fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3] == "log" => true,
        4 => return Err(format!("unknown spacing '{}' (only 'log' is supported)", parts[3])),
        _ => return Err(format!("expected start:stop:count[:log], got '{text}'")),
    };
    let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| format!("expected a number, got '{s}'"));
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[2].parse().map_err(|_| format!("expected a positive count, got '{}'", parts[2]))?;
    if count == 0 {
        return Err("count must be at least 1".into());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    if log && (start <= 0.0 || stop <= 0.0) {
        return Err("log spacing needs positive endpoints".into());
    }
    let last = count - 1;
    Ok((0..count)
        .map(|i| {
            // Endpoints are reproduced exactly.
            if i == 0 {
                return start;
            }
            if i == last {
                return stop;
            }
            let f = i as f64 / last as f64;
            if log {
                10f64.powf(start.log10() + f * (stop.log10() - start.log10()))
            } else {
                start + f * (stop - start)
            }
        })
        .collect())
}

/// All grid points in lexicographic order, last axis fastest.
pub fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

pub fn grid_size(axes: &[Axis]) -> usize {
    axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.values.len())).unwrap_or(usize::MAX)
}

/// Shortest text that parses back to `v`; integral values print without a
/// fractional part so integer keys accept them.
fn value_text(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Applies one grid point to the base configuration and validates it.
pub fn point_config(base: &RawConfig, axes: &[Axis], point: &[f64]) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = base.clone();
    for (axis, &v) in axes.iter().zip(point) {
        raw.set(&axis.key, value_text(v), Origin::Override(format!("--axis {}={}", axis.key, value_text(v))));
    }
    ExperimentConfig::from_raw(raw)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub table: Table,
    pub points: usize,
}

/// Runs every grid point on the current rayon pool.
///
/// All points are validated before any computation starts, so a bad axis
/// value fails fast without partial output.
pub fn run_sweep(base: &RawConfig, axes: &[Axis], cap: Option<usize>) -> Result<SweepResult, RunError> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.key == a.key) {
            return Err(RunError::Usage(format!("axis '{}' given twice", a.key)));
        }
    }
    let base_cfg = ExperimentConfig::from_raw(base.clone())?;
    let cap = cap.unwrap_or(if base_cfg.kind.is_analytic() { ANALYTIC_CAP } else { EVOLUTION_CAP });
    let size = grid_size(axes);
    if size > cap {
        return Err(RunError::Usage(format!("sweep has {size} points, above the cap of {cap}")));
    }

    let points = grid_points(axes);
    let configs = points.iter().map(|p| point_config(base, axes, p)).collect::<Result<Vec<_>, _>>()?;
    let outcomes: Vec<Outcome> = configs
        .par_iter()
        .zip(points.par_iter())
        .map(|(cfg, point)| {
            experiment::run(cfg).map_err(|source| RunError::Numerical { context: describe(axes, point), source })
        })
        .collect::<Result<_, _>>()?;

    let mut header: Vec<String> = axes.iter().map(|a| a.key.clone()).collect();
    let scalar_names: Vec<String> = outcomes.first().map(|o| o.scalars.0.iter().map(|(k, _)| k.clone()).collect()).unwrap_or_default();
    header.extend(scalar_names.iter().cloned());
    let mut table = Table { file_name: "sweep.csv".into(), header, rows: Vec::with_capacity(points.len()) };
    for (point, outcome) in points.iter().zip(&outcomes) {
        let mut row: Vec<Cell> = point.iter().map(|&v| Cell::Float(v)).collect();
        for name in &scalar_names {
            row.push(outcome.scalars.get(name).cloned().unwrap_or(Cell::Empty));
        }
        table.rows.push(row);
    }
    Ok(SweepResult { table, points: points.len() })
}

fn describe(axes: &[Axis], point: &[f64]) -> String {
    if axes.is_empty() {
        return "sweep point".into();
    }
    let parts: Vec<String> = axes.iter().zip(point).map(|(a, v)| format!("{}={}", a.key, value_text(*v))).collect();
    format!("sweep point {}", parts.join(", "))
}
