//! One function per experiment kind, each turning a validated configuration
//! into tables and scalar results. Nothing here touches the filesystem.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use scb_core::fock::{condensate_state, number_state, two_mode_hamiltonian, ChargeParams, SectorState};
use scb_core::lindblad::{decay_constant, decay_ratio, evolve_master, DensityMatrix, NoiseParams};
use scb_core::meanfield::{compare_gp_to_exact_with_tol, integrate_phase_number, small_oscillation_frequency, OrderParameter, PhaseNumberState};
use scb_core::unitary::{evolve_exact, extract_frequency, qubit_probability, TimeGrid};
use scb_core::{Error, Result};

use crate::config::{DecayPoint, Experiment, ExperimentConfig, InitialDensity, QubitState};
use crate::output::{Cell, Scalars, Table};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub scalars: Scalars,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match &cfg.experiment {
        Experiment::QubitOscillation { charge, phi0, grid } => qubit_oscillation(charge, *phi0, grid),
        Experiment::GpOscillation { charging, josephson, initial, grid } => gp_oscillation(*charging, *josephson, *initial, grid, cfg.tol),
        Experiment::GpVsExact { model, initial, grid } => {
            let r = compare_gp_to_exact_with_tol(model, *initial, grid, cfg.tol)?;
            let mut table = Table::new("gp_vs_exact.csv", &["t", "exact", "meanfield", "deviation"]);
            for i in 0..r.times.len() {
                let (e, m) = (r.exact[i], r.meanfield[i]);
                table.push(vec![r.times[i].into(), e.into(), m.into(), (m - e).abs().into()]);
            }
            let mut s = Scalars::default();
            s.insert("N", model.total_pairs as u64);
            s.insert("max_deviation", r.max_deviation);
            s.insert("rms_deviation", r.rms_deviation);
            Ok(Outcome { tables: vec![table], scalars: s })
        }
        Experiment::MasterEvolution { model, noise, initial, grid } => {
            let h = two_mode_hamiltonian(model)?;
            master_evolution(&h, noise, initial, grid, cfg.tol, cfg.seed)
        }
        Experiment::DecayCompare { point, numeric } => {
            let row = decay_row(point, *numeric)?;
            let mut table = Table::new("decay.csv", &DECAY_COLUMNS);
            let mut s = Scalars::default();
            for (name, cell) in DECAY_COLUMNS.iter().zip(&row) {
                s.0.push((name.to_string(), cell.clone()));
            }
            table.push(row);
            Ok(Outcome { tables: vec![table], scalars: s })
        }
        Experiment::DecaySweep { points, numeric } => {
            let rows = points.par_iter().map(|p| decay_row(p, *numeric)).collect::<Result<Vec<_>>>()?;
            let mut table = Table::new("decay_sweep.csv", &DECAY_COLUMNS);
            let agreement: Vec<f64> = rows
                .iter()
                .filter_map(|r| match r[AGREEMENT_COLUMN] {
                    Cell::Float(x) => Some(x),
                    _ => None,
                })
                .collect();
            table.rows = rows;
            let mut s = Scalars::default();
            s.insert("points", points.len() as u64);
            s.insert("agreement_min", agreement.iter().copied().fold(f64::INFINITY, f64::min));
            s.insert("agreement_max", agreement.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            Ok(Outcome { tables: vec![table], scalars: s })
        }
    }
}

const DECAY_COLUMNS: [&str; 13] = [
    "n_bar1",
    "N",
    "gamma",
    "delta",
    "beta_re",
    "beta_im",
    "theta",
    "gamma_qubit",
    "gamma_mf",
    "ratio",
    "agreement",
    "gamma_qubit_numeric",
    "gamma_mf_numeric",
];
const AGREEMENT_COLUMN: usize = 10;

fn decay_row(p: &DecayPoint, numeric: bool) -> Result<Vec<Cell>> {
    let r = decay_ratio(p.n_bar1, p.total_pairs, &p.noise, p.theta)?;
    let (fock_rate, condensate_rate) = if numeric {
        let n = p.total_pairs as usize;
        let fock = decay_constant(&number_state(p.n_bar1 as usize, n)?, &p.noise)?;
        let psi = OrderParameter::from_weight_phase(p.n_bar1 as f64 / p.total_pairs as f64, p.theta)?;
        let cond = decay_constant(&condensate_state(psi.psi1, psi.psi2, n)?, &p.noise)?;
        (Some(fock), Some(cond))
    } else {
        (None, None)
    };
    Ok(vec![
        p.n_bar1.into(),
        p.total_pairs.into(),
        p.noise.gamma.into(),
        p.noise.delta.into(),
        p.noise.beta.re.into(),
        p.noise.beta.im.into(),
        p.theta.into(),
        r.qubit.into(),
        r.meanfield.into(),
        r.ratio.into(),
        r.agreement.into(),
        fock_rate.into(),
        condensate_rate.into(),
    ])
}

/// Angular frequency of `|⟨0|φ(t)⟩|²` under the two-level Hamiltonian:
/// twice the half-splitting `√((2E_C(1−2n_g))² + E_J²/4)`.
pub fn qubit_frequency(c: &ChargeParams) -> f64 {
    let bias = 4.0 * c.charging_energy * (1.0 - 2.0 * c.gate_charge);
    bias.hypot(c.josephson_energy)
}

fn qubit_oscillation(c: &ChargeParams, phi0: QubitState, grid: &TimeGrid) -> Result<Outcome> {
    let amps = phi0.amplitudes();
    let mut table = Table::new("oscillation.csv", &["t", "p0"]);
    let mut signal = Vec::with_capacity(grid.n_samples);
    for t in grid.times() {
        let p = qubit_probability(c, amps, t - grid.t_start)?;
        signal.push((t, p));
        table.push(vec![t.into(), p.into()]);
    }

    let predicted = qubit_frequency(c);
    let mut s = Scalars::default();
    s.text("qubit_regime", c.is_qubit_regime().to_string());
    s.insert("predicted_frequency", predicted);
    frequency_scalars(&mut s, &signal, predicted)?;
    Ok(Outcome { tables: vec![table], scalars: s })
}

/// Adds the measured frequency and its relative error, or a note when the
/// signal is too short or flat to measure.
fn frequency_scalars(s: &mut Scalars, signal: &[(f64, f64)], predicted: f64) -> Result<()> {
    match extract_frequency(signal) {
        Ok(w) => {
            s.insert("measured_frequency", w);
            s.insert("relative_frequency_error", if predicted != 0.0 { (w - predicted).abs() / predicted } else { f64::NAN });
            s.text("frequency_note", "");
        }
        Err(e @ (Error::TooFewOscillations { .. } | Error::ConstantSignal)) => {
            s.insert("measured_frequency", None);
            s.insert("relative_frequency_error", None);
            s.text("frequency_note", e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn gp_oscillation(charging: f64, josephson: f64, initial: PhaseNumberState, grid: &TimeGrid, tol: f64) -> Result<Outcome> {
    let traj = integrate_phase_number(charging, josephson, initial, grid, tol)?;
    let e0 = initial.energy(charging, josephson);
    let mut table = Table::new("phase_number.csv", &["t", "n", "theta", "energy"]);
    let mut drift = 0.0f64;
    for (t, st) in traj.times.iter().zip(&traj.states) {
        let e = st.energy(charging, josephson);
        drift = drift.max((e - e0).abs());
        table.push(vec![(*t).into(), st.n.into(), st.theta.into(), e.into()]);
    }
    let n_signal: Vec<(f64, f64)> = traj.times.iter().zip(&traj.states).map(|(t, s)| (*t, s.n)).collect();
    let predicted = small_oscillation_frequency(charging, josephson)?;

    let mut s = Scalars::default();
    s.text("regime", if e0 < josephson.abs() { "libration" } else { "rotation" });
    s.insert("predicted_frequency", predicted);
    frequency_scalars(&mut s, &n_signal, predicted)?;
    s.insert("energy", e0);
    s.insert("max_energy_drift", drift);
    Ok(Outcome { tables: vec![table], scalars: s })
}

/// `A A† / tr(A A†)` for `A` with independent uniform entries.
fn random_density(dim: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut rho = &a * a.adjoint();
    let tr = rho.trace().re;
    rho /= Complex64::new(tr, 0.0);
    // Exact Hermitian symmetry, independent of summation order.
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    DensityMatrix::from_matrix(rho)
}

fn master_evolution(
    h: &scb_core::fock::SectorOperator,
    noise: &NoiseParams,
    initial: &InitialDensity,
    grid: &TimeGrid,
    tol: f64,
    seed: u64,
) -> Result<Outcome> {
    let total = h.total_pairs();
    let pure: Option<SectorState> = match initial {
        InitialDensity::Fock(n1) => Some(number_state(*n1, total)?),
        InitialDensity::Condensate(psi) => Some(condensate_state(psi.psi1, psi.psi2, total)?),
        InitialDensity::Random => None,
    };
    let rho0 = match &pure {
        Some(phi) => DensityMatrix::pure(phi),
        None => random_density(total + 1, seed)?,
    };
    let traj = evolve_master(h, noise, &rho0, grid, tol)?;
    let closed = match &pure {
        Some(phi) => Some(evolve_exact(h, phi, grid)?.states.iter().map(|s| s.overlap(phi).norm_sqr()).collect::<Vec<_>>()),
        None => None,
    };

    let mut table =
        Table::new("master.csv", &["t", "fidelity", "closed_fidelity", "trace", "min_eigenvalue", "hermiticity_error", "occupation"]);
    for i in 0..traj.times.len() {
        table.push(vec![
            traj.times[i].into(),
            traj.fidelity[i].into(),
            closed.as_ref().map(|c| c[i]).into(),
            traj.trace[i].into(),
            traj.min_eigenvalue[i].into(),
            traj.hermiticity_error[i].into(),
            traj.occupation[i].into(),
        ]);
    }

    let max_abs = |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|&x| f(x)).fold(0.0f64, f64::max);
    let mut s = Scalars::default();
    s.insert("N", total as u64);
    s.insert("decay_constant", pure.as_ref().map(|phi| decay_constant(phi, noise)).transpose()?);
    s.insert("max_trace_deviation", max_abs(&traj.trace, &|x| (x - 1.0).abs()));
    s.insert("max_hermiticity_error", max_abs(&traj.hermiticity_error, &|x| x));
    s.insert("min_eigenvalue", traj.min_eigenvalue.iter().copied().fold(f64::INFINITY, f64::min));
    s.insert("final_fidelity", *traj.fidelity.last().expect("grid has at least two samples"));
    s.insert("final_purity", traj.states.last().expect("grid has at least two samples").purity());
    Ok(Outcome { tables: vec![table], scalars: s })
}
