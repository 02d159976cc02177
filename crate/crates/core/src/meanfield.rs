//! Mean-field dynamics of the two-island condensate.
//!
//! The order parameter `(ψ₁, ψ₂)` is kept at unit norm, so the occupation of
//! island 1 is `n₁ = N|ψ₁|²`. Replacing `a₁†a₁` by its mean value in the
//! two-mode Hamiltonian yields the Gross-Pitaevskii pair
//!
//! ```text
//! i ψ̇₁ = E n₁ ψ₁ + U₁ ψ₁ − K ψ₂
//! i ψ̇₂ = U₂ ψ₂ − K ψ₁
//! ```
//!
//! The reduced phase-number system `ṅ = −E_J sin θ`, `θ̇ = (E/2) n` is
//! integrated as an independent model; [`gp_to_phase_number`] converts
//! between the two descriptions with `θ = θ₁ − θ₂`.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{condensate_state, two_mode_hamiltonian, TwoModeParams, CONDENSATE_NORM_SLACK};
use crate::ode::{Integrator, DEFAULT_TOL};
use crate::unitary::{check_tol, evolve_schrodinger, TimeGrid};

/// Largest `N` for which [`compare_gp_to_exact`] runs the exact evolution.
pub const MAX_EXACT_PAIRS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameter {
    pub psi1: Complex64,
    pub psi2: Complex64,
}

impl OrderParameter {
    /// Accepts amplitudes with `|ψ₁|² + |ψ₂|²` within
    /// [`CONDENSATE_NORM_SLACK`] of one and renormalizes them.
    pub fn new(psi1: Complex64, psi2: Complex64) -> Result<Self> {
        let w = psi1.norm_sqr() + psi2.norm_sqr();
        if !w.is_finite() || (w - 1.0).abs() > CONDENSATE_NORM_SLACK {
            return Err(invalid("psi", format!("|psi1|^2 + |psi2|^2 = {w} is not 1")));
        }
        let s = w.sqrt();
        Ok(Self { psi1: psi1 / s, psi2: psi2 / s })
    }

    /// `ψ = (√p, √(1−p) e^{−iθ})`, i.e. island-1 weight `p` and relative
    /// phase `θ₁ − θ₂ = θ`.
    pub fn from_weight_phase(weight1: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight1) {
            return Err(invalid("weight1", format!("{weight1} outside [0, 1]")));
        }
        Self::new(Complex64::new(weight1.sqrt(), 0.0), Complex64::from_polar((1.0 - weight1).sqrt(), -theta))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi1.norm_sqr() + self.psi2.norm_sqr()
    }

    fn to_array(self) -> [f64; 4] {
        [self.psi1.re, self.psi1.im, self.psi2.re, self.psi2.im]
    }

    fn from_array(y: &[f64; 4]) -> Self {
        Self { psi1: Complex64::new(y[0], y[1]), psi2: Complex64::new(y[2], y[3]) }
    }
}

/// Excess pair number `n = n₁ − n̄₁` and relative phase `θ`, unwrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseNumberState {
    pub n: f64,
    pub theta: f64,
}

impl PhaseNumberState {
    /// `θ` reduced to `(−π, π]`.
    pub fn wrapped_theta(&self) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        let r = self.theta.rem_euclid(two_pi);
        if r > std::f64::consts::PI {
            r - two_pi
        } else {
            r
        }
    }

    /// First integral `(E/4) n² − E_J cos θ` of the phase-number equations.
    pub fn energy(&self, charging: f64, josephson: f64) -> f64 {
        0.25 * charging * self.n * self.n - josephson * self.theta.cos()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

/// Integrates the Gross-Pitaevskii equations for the order parameter.
pub fn integrate_gp(p: &TwoModeParams, psi0: OrderParameter, grid: &TimeGrid, tol: f64) -> Result<Trajectory<OrderParameter>> {
    check_tol(tol)?;
    p.validate()?;
    let psi0 = OrderParameter::new(psi0.psi1, psi0.psi2)?;
    let nonlinear = p.charging * p.total_pairs as f64;
    let (u1, u2, k) = (p.potential1, p.potential2, p.tunneling);
    let rhs = |y: &[f64; 4], dy: &mut [f64; 4]| {
        let psi = OrderParameter::from_array(y);
        let mi = Complex64::new(0.0, -1.0);
        let d1 = mi * ((nonlinear * psi.psi1.norm_sqr() + u1) * psi.psi1 - k * psi.psi2);
        let d2 = mi * (u2 * psi.psi2 - k * psi.psi1);
        *dy = [d1.re, d1.im, d2.re, d2.im];
    };
    let times = grid.times();
    let raw = Integrator::new(tol).integrate(rhs, psi0.to_array(), &times)?;
    Ok(Trajectory { times, states: raw.iter().map(OrderParameter::from_array).collect() })
}

/// Integrates `ṅ = −E_J sin θ`, `θ̇ = (E/2) n`.
pub fn integrate_phase_number(
    charging: f64,
    josephson: f64,
    s0: PhaseNumberState,
    grid: &TimeGrid,
    tol: f64,
) -> Result<Trajectory<PhaseNumberState>> {
    check_tol(tol)?;
    if !charging.is_finite() || !josephson.is_finite() {
        return Err(invalid("energies", "E and E_J must be finite"));
    }
    let rhs = |y: &[f64; 2], dy: &mut [f64; 2]| {
        dy[0] = -josephson * y[1].sin();
        dy[1] = 0.5 * charging * y[0];
    };
    let times = grid.times();
    let raw = Integrator::new(tol).integrate(rhs, [s0.n, s0.theta], &times)?;
    Ok(Trajectory { times, states: raw.iter().map(|y| PhaseNumberState { n: y[0], theta: y[1] }).collect() })
}

/// Linearized angular frequency `√(E_J E / 2)` of the phase-number system.
pub fn small_oscillation_frequency(charging: f64, josephson: f64) -> Result<f64> {
    let prod = charging * josephson;
    if !prod.is_finite() || prod < 0.0 {
        return Err(invalid(
            "energies",
            format!("E * E_J = {prod} < 0: the equilibrium is unstable, outside the oscillation model"),
        ));
    }
    Ok((0.5 * prod).sqrt())
}

/// The same frequency in charge-model units, `E = 4E_C`: `√(2 E_J E_C)`.
pub fn small_oscillation_frequency_charge(charging_energy: f64, josephson: f64) -> Result<f64> {
    small_oscillation_frequency(4.0 * charging_energy, josephson)
}

/// `n = N|ψ₁|² − n̄₁`, `θ = θ₁ − θ₂`.
pub fn gp_to_phase_number(psi: &OrderParameter, total_pairs: usize, reference_occupation: u64) -> Result<PhaseNumberState> {
    if psi.psi1.norm() == 0.0 {
        return Err(Error::UndefinedPhase { which: "psi1" });
    }
    if psi.psi2.norm() == 0.0 {
        return Err(Error::UndefinedPhase { which: "psi2" });
    }
    let n = total_pairs as f64 * psi.psi1.norm_sqr() / psi.norm_sqr() - reference_occupation as f64;
    // arg(ψ₁ ψ₂*) stays continuous across the branch cut of each phase.
    let theta = (psi.psi1 * psi.psi2.conj()).arg();
    Ok(PhaseNumberState { n, theta })
}

/// Inverse of [`gp_to_phase_number`], choosing `ψ₂` real and positive.
pub fn phase_number_to_gp(s: &PhaseNumberState, total_pairs: usize, reference_occupation: u64) -> Result<OrderParameter> {
    let weight = (s.n + reference_occupation as f64) / total_pairs as f64;
    if !(0.0..=1.0).contains(&weight) {
        return Err(invalid("n", format!("n1 = n + n_bar1 must lie in [0, N] (weight {weight})")));
    }
    Ok(OrderParameter { psi1: Complex64::from_polar(weight.sqrt(), s.theta), psi2: Complex64::new((1.0 - weight).sqrt(), 0.0) })
}

#[derive(Debug, Clone)]
pub struct GpComparison {
    pub times: Vec<f64>,
    /// `⟨n̂₁⟩/N` from the exact sector evolution.
    pub exact: Vec<f64>,
    /// `|ψ₁|²` from the Gross-Pitaevskii trajectory.
    pub meanfield: Vec<f64>,
    pub max_deviation: f64,
    pub rms_deviation: f64,
}

/// Runs the exact evolution of the condensate built from `psi0` next to the
/// mean-field trajectory and compares the normalized island-1 occupation.
pub fn compare_gp_to_exact(p: &TwoModeParams, psi0: OrderParameter, grid: &TimeGrid) -> Result<GpComparison> {
    compare_gp_to_exact_with_tol(p, psi0, grid, DEFAULT_TOL)
}

pub fn compare_gp_to_exact_with_tol(p: &TwoModeParams, psi0: OrderParameter, grid: &TimeGrid, tol: f64) -> Result<GpComparison> {
    p.validate()?;
    if p.total_pairs > MAX_EXACT_PAIRS {
        return Err(invalid("total_pairs", format!("N = {} exceeds the exact-evolution limit {MAX_EXACT_PAIRS}", p.total_pairs)));
    }
    let psi0 = OrderParameter::new(psi0.psi1, psi0.psi2)?;
    let n = p.total_pairs as f64;
    let h = two_mode_hamiltonian(p)?;
    let start = condensate_state(psi0.psi1, psi0.psi2, p.total_pairs)?;
    let exact_traj = evolve_schrodinger(&h, &start, grid, tol)?;
    let gp_traj = integrate_gp(p, psi0, grid, tol)?;

    let exact: Vec<f64> = exact_traj.occupation.iter().map(|o| o / n).collect();
    let meanfield: Vec<f64> = gp_traj.states.iter().map(|s| s.psi1.norm_sqr() / s.norm_sqr()).collect();
    let devs: Vec<f64> = exact.iter().zip(&meanfield).map(|(a, b)| (a - b).abs()).collect();
    let max_deviation = devs.iter().copied().fold(0.0, f64::max);
    let rms_deviation = (devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64).sqrt();
    Ok(GpComparison { times: exact_traj.times, exact, meanfield, max_deviation, rms_deviation })
}
