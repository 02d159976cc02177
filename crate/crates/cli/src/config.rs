//! Experiment configuration: a flat `key = value` file with `#` comments and
//! dotted section prefixes.
//!
//! ```text
//! kind = decay-compare
//! decay.n_bar1 = 100
//! decay.N = 10000
//! noise.gamma = 1
//! noise.delta = 1
//! ```
//!
//! Parsing happens in two passes. [`RawConfig`] records every assignment with
//! its position; [`ExperimentConfig::from_raw`] then reads the keys relevant
//! to the chosen kind, applies defaults and validates the physics parameters.
//! Keys left unread are rejected, so typos never go unnoticed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use scb_core::fock::{ChargeParams, TwoModeParams};
use scb_core::lindblad::{check_complete_positivity, NoiseParams};
use scb_core::meanfield::{small_oscillation_frequency, OrderParameter, PhaseNumberState, MAX_EXACT_PAIRS};
use scb_core::unitary::{TimeGrid, TOL_RANGE};
use thiserror::Error;

use crate::sweep::parse_values;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SAMPLES: usize = 1001;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Largest sector for `master-evolution`; the density matrix is dense.
pub const MAX_MASTER_PAIRS: usize = 200;
/// Largest `N` for the numeric decay constants, which build an `N + 1` vector.
pub const MAX_NUMERIC_PAIRS: u64 = 10_000_000;
/// Largest grid accepted by `decay-sweep`.
pub const MAX_DECAY_GRID: usize = 1_000_000;

/// Every key the tool understands, for telling typos from misplaced keys.
pub const KNOWN_KEYS: &[&str] = &[
    "kind",
    "seed",
    "output.dir",
    "solver.tol",
    "time.t_start",
    "time.t_end",
    "time.n_samples",
    "charge.E_C",
    "charge.E_J",
    "charge.n_g",
    "charge.n_bar1",
    "charge.check_regime",
    "phase.E",
    "phase.E_J",
    "model.E",
    "model.U1",
    "model.U2",
    "model.K",
    "model.N",
    "noise.gamma",
    "noise.delta",
    "noise.beta_re",
    "noise.beta_im",
    "initial.phi0",
    "initial.n0",
    "initial.theta0",
    "initial.psi1_abs2",
    "initial.theta",
    "initial.state",
    "initial.n1",
    "decay.n_bar1",
    "decay.N",
    "decay.N_factor",
    "decay.theta",
    "decay.numeric",
    "sweep.n_bar1",
    "sweep.N",
    "sweep.N_factor",
    "sweep.gamma",
    "sweep.delta",
    "sweep.beta_abs",
    "sweep.beta_phase",
    "sweep.theta",
];

/// Keys holding a single number, i.e. the ones a sweep axis may vary.
pub const NUMERIC_KEYS: &[&str] = &[
    "seed",
    "solver.tol",
    "time.t_start",
    "time.t_end",
    "time.n_samples",
    "charge.E_C",
    "charge.E_J",
    "charge.n_g",
    "charge.n_bar1",
    "phase.E",
    "phase.E_J",
    "model.E",
    "model.U1",
    "model.U2",
    "model.K",
    "model.N",
    "noise.gamma",
    "noise.delta",
    "noise.beta_re",
    "noise.beta_im",
    "initial.n0",
    "initial.theta0",
    "initial.psi1_abs2",
    "initial.theta",
    "initial.n1",
    "decay.n_bar1",
    "decay.N",
    "decay.N_factor",
    "decay.theta",
];

/// Where a value came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line { line: usize, column: usize },
    /// Set on the command line, e.g. by a sweep axis.
    Override(String),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { line, column } => write!(f, "line {line}, column {column}"),
            Origin::Override(what) => write!(f, "{what}"),
            Origin::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {second}: duplicate key '{key}' (first set on line {first})")]
    Duplicate { key: String, first: usize, second: usize },
    #[error("{origin}: unknown key '{key}'")]
    Unknown { key: String, origin: Origin },
    #[error("{origin}: key '{key}' is not used by kind '{kind}'")]
    Unused { key: String, kind: &'static str, origin: Origin },
    #[error("missing required key '{key}' for kind '{kind}'")]
    Missing { key: String, kind: &'static str },
    #[error("{origin}: {key}: {message}")]
    Invalid { key: String, origin: Origin, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: Origin,
}

/// Assignments in file order, before any interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
    order: Vec<String>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let column = column_of(raw_line, content.len() - content.trim_start().len());
                return Err(ConfigError::Syntax { line, column, message: "expected 'key = value'".into() });
            };
            let key_part = &content[..eq];
            let key = key_part.trim();
            let key_col = column_of(raw_line, key_part.len() - key_part.trim_start().len());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, column: column_of(raw_line, eq), message: "missing key before '='".into() });
            }
            if let Some(bad) = key.char_indices().find(|(_, c)| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))) {
                return Err(ConfigError::Syntax {
                    line,
                    column: key_col + key[..bad.0].chars().count(),
                    message: format!("invalid character '{}' in key", bad.1),
                });
            }
            let value_part = &content[eq + 1..];
            let value = value_part.trim();
            let value_col = column_of(raw_line, eq + 1 + (value_part.len() - value_part.trim_start().len()));
            if value.is_empty() {
                return Err(ConfigError::Syntax { line, column: value_col, message: format!("missing value for '{key}'") });
            }
            if let Some(prev) = cfg.entries.get(key) {
                let first = match prev.origin {
                    Origin::Line { line, .. } => line,
                    _ => 0,
                };
                return Err(ConfigError::Duplicate { key: key.to_string(), first, second: line });
            }
            cfg.order.push(key.to_string());
            cfg.entries.insert(key.to_string(), Entry { value: value.to_string(), origin: Origin::Line { line, column: value_col } });
        }
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Replaces (or adds) a value, remembering `origin` for error messages.
    pub fn set(&mut self, key: &str, value: String, origin: Origin) {
        if !self.entries.contains_key(key) {
            self.order.push(key.to_string());
        }
        self.entries.insert(key.to_string(), Entry { value, origin });
    }

    /// `(key, value)` pairs in the order they were first assigned.
    pub fn echo(&self) -> Vec<(String, String)> {
        self.order.iter().map(|k| (k.clone(), self.entries[k].value.clone())).collect()
    }
}

fn column_of(line: &str, byte_offset: usize) -> usize {
    line[..byte_offset.min(line.len())].chars().count() + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    QubitOscillation,
    GpOscillation,
    GpVsExact,
    MasterEvolution,
    DecayCompare,
    DecaySweep,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::QubitOscillation, Kind::GpOscillation, Kind::GpVsExact, Kind::MasterEvolution, Kind::DecayCompare, Kind::DecaySweep];

    pub fn name(self) -> &'static str {
        match self {
            Kind::QubitOscillation => "qubit-oscillation",
            Kind::GpOscillation => "gp-oscillation",
            Kind::GpVsExact => "gp-vs-exact",
            Kind::MasterEvolution => "master-evolution",
            Kind::DecayCompare => "decay-compare",
            Kind::DecaySweep => "decay-sweep",
        }
    }

    /// Closed-form kinds, which get the larger sweep cap.
    pub fn is_analytic(self) -> bool {
        matches!(self, Kind::DecayCompare | Kind::DecaySweep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitState {
    Zero,
    One,
    Plus,
    Minus,
}

impl QubitState {
    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64| Complex64::new(re, 0.0);
        match self {
            QubitState::Zero => [c(1.0), c(0.0)],
            QubitState::One => [c(0.0), c(1.0)],
            QubitState::Plus => [c(h), c(h)],
            QubitState::Minus => [c(h), c(-h)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialDensity {
    Fock(usize),
    Condensate(OrderParameter),
    /// Random mixed state drawn from the configured seed.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub n_bar1: u64,
    pub total_pairs: u64,
    pub noise: NoiseParams,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    QubitOscillation { charge: ChargeParams, phi0: QubitState, grid: TimeGrid },
    GpOscillation { charging: f64, josephson: f64, initial: PhaseNumberState, grid: TimeGrid },
    GpVsExact { model: TwoModeParams, initial: OrderParameter, grid: TimeGrid },
    MasterEvolution { model: TwoModeParams, noise: NoiseParams, initial: InitialDensity, grid: TimeGrid },
    DecayCompare { point: DecayPoint, numeric: bool },
    DecaySweep { points: Vec<DecayPoint>, numeric: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: u64,
    pub tol: f64,
    pub output_dir: PathBuf,
    pub experiment: Experiment,
    pub raw: RawConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader { raw: &raw, used: BTreeSet::new(), kind: "?" };
        let kind_name = r.string("kind")?.ok_or(ConfigError::Missing { key: "kind".into(), kind: "any" })?;
        let kind = Kind::ALL.into_iter().find(|k| k.name() == kind_name).ok_or_else(|| {
            let names: Vec<_> = Kind::ALL.iter().map(|k| k.name()).collect();
            r.invalid("kind", format!("unknown kind '{kind_name}' (expected one of {})", names.join(", ")))
        })?;
        r.kind = kind.name();
        let seed = r.u64("seed")?.unwrap_or(0);
        let tol = r.f64("solver.tol")?.unwrap_or(DEFAULT_TOL);
        if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
            return Err(r.invalid("solver.tol", format!("{tol:e} outside [{:e}, {:e}]", TOL_RANGE.0, TOL_RANGE.1)));
        }
        let output_dir = PathBuf::from(r.string("output.dir")?.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string()));

        let experiment = match kind {
            Kind::QubitOscillation => r.qubit_oscillation()?,
            Kind::GpOscillation => r.gp_oscillation()?,
            Kind::GpVsExact => r.gp_vs_exact()?,
            Kind::MasterEvolution => r.master_evolution()?,
            Kind::DecayCompare => r.decay_compare()?,
            Kind::DecaySweep => r.decay_sweep()?,
        };
        r.finish()?;
        Ok(Self { kind, seed, tol, output_dir, experiment, raw })
    }
}

/// Typed access to a [`RawConfig`] that remembers which keys were read.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<&'static str>,
    kind: &'static str,
}

impl Reader<'_> {
    fn origin(&self, key: &str) -> Origin {
        self.raw.get(key).map(|e| e.origin.clone()).unwrap_or(Origin::Default)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), origin: self.origin(key), message: message.into() }
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::Missing { key: key.to_string(), kind: self.kind }
    }

    fn string(&mut self, key: &'static str) -> Result<Option<String>, ConfigError> {
        self.used.insert(key);
        Ok(self.raw.get(key).map(|e| e.value.clone()))
    }

    fn f64(&mut self, key: &'static str) -> Result<Option<f64>, ConfigError> {
        let Some(text) = self.string(key)? else {
            return Ok(None);
        };
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.invalid(key, format!("expected a finite number, got '{text}'"))),
        }
    }

    fn u64(&mut self, key: &'static str) -> Result<Option<u64>, ConfigError> {
        let Some(text) = self.string(key)? else {
            return Ok(None);
        };
        parse_u64(&text).map(Some).ok_or_else(|| self.invalid(key, format!("expected a non-negative integer, got '{text}'")))
    }

    fn usize(&mut self, key: &'static str) -> Result<Option<usize>, ConfigError> {
        match self.u64(key)? {
            None => Ok(None),
            Some(v) => usize::try_from(v).map(Some).map_err(|_| self.invalid(key, "value too large")),
        }
    }

    fn bool(&mut self, key: &'static str) -> Result<Option<bool>, ConfigError> {
        let Some(text) = self.string(key)? else {
            return Ok(None);
        };
        match text.as_str() {
            "true" | "yes" | "1" => Ok(Some(true)),
            "false" | "no" | "0" => Ok(Some(false)),
            _ => Err(self.invalid(key, format!("expected true or false, got '{text}'"))),
        }
    }

    fn list(&mut self, key: &'static str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(text) = self.string(key)? else {
            return Ok(None);
        };
        parse_values(&text).map(Some).map_err(|msg| self.invalid(key, msg))
    }

    fn int_list(&mut self, key: &'static str) -> Result<Option<Vec<u64>>, ConfigError> {
        let Some(values) = self.list(key)? else {
            return Ok(None);
        };
        values
            .iter()
            .map(|&v| integral(v).ok_or_else(|| self.invalid(key, format!("{v} is not a non-negative integer"))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    fn req_f64(&mut self, key: &'static str) -> Result<f64, ConfigError> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn req_usize(&mut self, key: &'static str) -> Result<usize, ConfigError> {
        self.usize(key)?.ok_or_else(|| self.missing(key))
    }

    fn grid(&mut self) -> Result<TimeGrid, ConfigError> {
        let t_start = self.f64("time.t_start")?.unwrap_or(0.0);
        let t_end = self.req_f64("time.t_end")?;
        let n_samples = self.usize("time.n_samples")?.unwrap_or(DEFAULT_SAMPLES);
        if n_samples < 2 {
            return Err(self.invalid("time.n_samples", "need at least 2 samples"));
        }
        TimeGrid::new(t_start, t_end, n_samples).map_err(|_| self.invalid("time.t_end", format!("must exceed time.t_start = {t_start}")))
    }

    fn model(&mut self) -> Result<TwoModeParams, ConfigError> {
        let charging = self.req_f64("model.E")?;
        let u1 = self.f64("model.U1")?.unwrap_or(0.0);
        let u2 = self.f64("model.U2")?.unwrap_or(0.0);
        let k = self.req_f64("model.K")?;
        let total = self.req_usize("model.N")?;
        if total == 0 {
            return Err(self.invalid("model.N", "need at least one pair"));
        }
        TwoModeParams::new(charging, u1, u2, k, total).map_err(|e| self.invalid("model", e.to_string()))
    }

    fn noise(&mut self) -> Result<NoiseParams, ConfigError> {
        let gamma = self.req_f64("noise.gamma")?;
        let delta = self.req_f64("noise.delta")?;
        let beta = Complex64::new(self.f64("noise.beta_re")?.unwrap_or(0.0), self.f64("noise.beta_im")?.unwrap_or(0.0));
        for (key, v) in [("noise.gamma", gamma), ("noise.delta", delta)] {
            if v < 0.0 {
                return Err(self.invalid(key, format!("must be non-negative, got {v}")));
            }
        }
        let key = if self.raw.get("noise.beta_re").is_some() { "noise.beta_re" } else { "noise.beta_im" };
        self.checked_noise(gamma, delta, beta, key)
    }

    fn checked_noise(&self, gamma: f64, delta: f64, beta: Complex64, key: &str) -> Result<NoiseParams, ConfigError> {
        let noise = NoiseParams::new_unchecked(gamma, delta, beta);
        let cp = check_complete_positivity(&noise);
        if !cp.valid {
            return Err(self.invalid(key, format!("complete positivity violated (margin {})", tidy(cp.margin))));
        }
        Ok(noise)
    }

    fn weight_phase(&mut self) -> Result<OrderParameter, ConfigError> {
        let weight = self.req_f64("initial.psi1_abs2")?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(self.invalid("initial.psi1_abs2", format!("{weight} outside [0, 1]")));
        }
        let theta = self.f64("initial.theta")?.unwrap_or(0.0);
        OrderParameter::from_weight_phase(weight, theta).map_err(|e| self.invalid("initial.psi1_abs2", e.to_string()))
    }

    fn qubit_oscillation(&mut self) -> Result<Experiment, ConfigError> {
        let e_c = self.req_f64("charge.E_C")?;
        let e_j = self.req_f64("charge.E_J")?;
        let n_g = self.req_f64("charge.n_g")?;
        let n_bar = self.u64("charge.n_bar1")?.unwrap_or(0);
        let charge = ChargeParams::new(e_c, e_j, n_g, n_bar).map_err(|e| self.invalid("charge", e.to_string()))?;
        if self.bool("charge.check_regime")?.unwrap_or(false) {
            charge.require_qubit_regime().map_err(|e| self.invalid("charge.check_regime", e.to_string()))?;
        }
        let phi0 = match self.string("initial.phi0")?.as_deref() {
            None | Some("0") => QubitState::Zero,
            Some("1") => QubitState::One,
            Some("plus") => QubitState::Plus,
            Some("minus") => QubitState::Minus,
            Some(other) => return Err(self.invalid("initial.phi0", format!("expected 0, 1, plus or minus, got '{other}'"))),
        };
        Ok(Experiment::QubitOscillation { charge, phi0, grid: self.grid()? })
    }

    fn gp_oscillation(&mut self) -> Result<Experiment, ConfigError> {
        let charging = self.req_f64("phase.E")?;
        let josephson = self.req_f64("phase.E_J")?;
        small_oscillation_frequency(charging, josephson).map_err(|e| self.invalid("phase", e.to_string()))?;
        let n = self.f64("initial.n0")?.unwrap_or(0.0);
        let theta = self.req_f64("initial.theta0")?;
        Ok(Experiment::GpOscillation { charging, josephson, initial: PhaseNumberState { n, theta }, grid: self.grid()? })
    }

    fn gp_vs_exact(&mut self) -> Result<Experiment, ConfigError> {
        let model = self.model()?;
        if model.total_pairs > MAX_EXACT_PAIRS {
            return Err(self.invalid("model.N", format!("exact comparison limited to N <= {MAX_EXACT_PAIRS}")));
        }
        let initial = self.weight_phase()?;
        Ok(Experiment::GpVsExact { model, initial, grid: self.grid()? })
    }

    fn master_evolution(&mut self) -> Result<Experiment, ConfigError> {
        let model = self.model()?;
        if model.total_pairs > MAX_MASTER_PAIRS {
            return Err(self.invalid("model.N", format!("master evolution limited to N <= {MAX_MASTER_PAIRS}")));
        }
        let noise = self.noise()?;
        let initial = match self.string("initial.state")?.as_deref() {
            Some("fock") => {
                let n1 = self.req_usize("initial.n1")?;
                if n1 > model.total_pairs {
                    return Err(self.invalid("initial.n1", format!("{n1} exceeds model.N = {}", model.total_pairs)));
                }
                InitialDensity::Fock(n1)
            }
            Some("condensate") => InitialDensity::Condensate(self.weight_phase()?),
            Some("random") => InitialDensity::Random,
            None => return Err(self.missing("initial.state")),
            Some(other) => return Err(self.invalid("initial.state", format!("expected fock, condensate or random, got '{other}'"))),
        };
        Ok(Experiment::MasterEvolution { model, noise, initial, grid: self.grid()? })
    }

    fn decay_compare(&mut self) -> Result<Experiment, ConfigError> {
        let n_bar1 = self.u64("decay.n_bar1")?.ok_or_else(|| self.missing("decay.n_bar1"))?;
        let total_pairs = match (self.u64("decay.N")?, self.f64("decay.N_factor")?) {
            (Some(n), None) => n,
            (None, Some(factor)) => scaled_total(n_bar1, factor).ok_or_else(|| self.invalid("decay.N_factor", "N = factor * n_bar1 must be a positive integer"))?,
            (Some(_), Some(_)) => return Err(self.invalid("decay.N_factor", "set either decay.N or decay.N_factor, not both")),
            (None, None) => return Err(self.missing("decay.N")),
        };
        if n_bar1 == 0 || n_bar1 >= total_pairs {
            return Err(self.invalid("decay.n_bar1", format!("need 0 < n_bar1 < N (n_bar1 = {n_bar1}, N = {total_pairs})")));
        }
        let noise = self.noise()?;
        let theta = self.f64("decay.theta")?.unwrap_or(0.0);
        let numeric = match self.bool("decay.numeric")? {
            Some(true) if total_pairs > MAX_NUMERIC_PAIRS => {
                return Err(self.invalid("decay.numeric", format!("numeric decay constants limited to N <= {MAX_NUMERIC_PAIRS}")))
            }
            Some(v) => v,
            None => total_pairs <= MAX_NUMERIC_PAIRS,
        };
        Ok(Experiment::DecayCompare { point: DecayPoint { n_bar1, total_pairs, noise, theta }, numeric })
    }

    fn decay_sweep(&mut self) -> Result<Experiment, ConfigError> {
        let n_bars = self.int_list("sweep.n_bar1")?.ok_or_else(|| self.missing("sweep.n_bar1"))?;
        let totals = self.int_list("sweep.N")?;
        let factors = self.list("sweep.N_factor")?;
        let sizes: Vec<Size> = match (totals, factors) {
            (Some(t), None) => t.into_iter().map(Size::Absolute).collect(),
            (None, Some(f)) => f.into_iter().map(Size::Factor).collect(),
            (Some(_), Some(_)) => return Err(self.invalid("sweep.N_factor", "set either sweep.N or sweep.N_factor, not both")),
            (None, None) => return Err(self.missing("sweep.N")),
        };
        let gammas = self.list("sweep.gamma")?.unwrap_or_else(|| vec![1.0]);
        let deltas = self.list("sweep.delta")?.unwrap_or_else(|| vec![1.0]);
        let beta_abs = self.list("sweep.beta_abs")?.unwrap_or_else(|| vec![0.0]);
        let beta_phase = self.list("sweep.beta_phase")?.unwrap_or_else(|| vec![0.0]);
        let thetas = self.list("sweep.theta")?.unwrap_or_else(|| vec![0.0]);
        let numeric = self.bool("decay.numeric")?.unwrap_or(false);

        let count = [n_bars.len(), sizes.len(), gammas.len(), deltas.len(), beta_abs.len(), beta_phase.len(), thetas.len()]
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if count > MAX_DECAY_GRID {
            return Err(self.invalid("sweep", format!("{count} grid points exceed the cap of {MAX_DECAY_GRID}")));
        }

        let mut points = Vec::with_capacity(count);
        for &n_bar1 in &n_bars {
            for size in &sizes {
                let total_pairs = match *size {
                    Size::Absolute(n) => n,
                    Size::Factor(f) => scaled_total(n_bar1, f)
                        .ok_or_else(|| self.invalid("sweep.N_factor", format!("N = {f} * {n_bar1} is not a positive integer")))?,
                };
                if n_bar1 == 0 || n_bar1 >= total_pairs {
                    return Err(self.invalid("sweep.n_bar1", format!("need 0 < n_bar1 < N (n_bar1 = {n_bar1}, N = {total_pairs})")));
                }
                if numeric && total_pairs > MAX_NUMERIC_PAIRS {
                    return Err(self.invalid("decay.numeric", format!("numeric decay constants limited to N <= {MAX_NUMERIC_PAIRS}")));
                }
                for &gamma in &gammas {
                    for &delta in &deltas {
                        if gamma < 0.0 || delta < 0.0 {
                            return Err(self.invalid("sweep.gamma", "gamma and delta must be non-negative"));
                        }
                        for &r in &beta_abs {
                            for &phase in &beta_phase {
                                let noise = self.checked_noise(gamma, delta, Complex64::from_polar(r, phase), "sweep.beta_abs")?;
                                for &theta in &thetas {
                                    points.push(DecayPoint { n_bar1, total_pairs, noise, theta });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(Experiment::DecaySweep { points, numeric })
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (key, _) in self.raw.echo() {
            if self.used.contains(key.as_str()) {
                continue;
            }
            let origin = self.origin(&key);
            return Err(if KNOWN_KEYS.contains(&key.as_str()) {
                ConfigError::Unused { key, kind: self.kind, origin }
            } else {
                ConfigError::Unknown { key, origin }
            });
        }
        Ok(())
    }
}

enum Size {
    Absolute(u64),
    Factor(f64),
}

fn scaled_total(n_bar1: u64, factor: f64) -> Option<u64> {
    integral(factor * n_bar1 as f64).filter(|&n| n > 0)
}

/// Integers may be written as `10000`, `1e4` or `1.0e4`; float values within
/// `1e-9` relative of an integer are rounded, which absorbs the error of
/// log-spaced sweep axes.
pub fn parse_u64(text: &str) -> Option<u64> {
    text.parse::<u64>().ok().or_else(|| text.parse::<f64>().ok().and_then(integral))
}

fn integral(v: f64) -> Option<u64> {
    let r = v.round();
    if !v.is_finite() || r < 0.0 || r > u64::MAX as f64 || (v - r).abs() > 1e-9 * r.abs().max(1.0) {
        return None;
    }
    Some(r as u64)
}

/// Rounds to 12 significant digits so `0 − 0.1²` reads as `-0.01`.
fn tidy(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 11 - x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits);
    format!("{}", (x * scale).round() / scale)
}
