//! Closed-system propagation on the sector and charge-oscillation observables.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{qubit_hamiltonian, CMatrix, CVector, ChargeParams, SectorOperator, SectorState};
use crate::ode::Integrator;

/// Accepted range for integrator tolerances.
pub const TOL_RANGE: (f64, f64) = (1e-13, 1e-3);

/// Hermiticity slack (max-abs, relative to the largest entry) for Hamiltonians.
const HAMILTONIAN_HERMITIAN_TOL: f64 = 1e-12;

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&tol) {
        return Err(invalid("tol", format!("{tol:e} outside [{:e}, {:e}]", TOL_RANGE.0, TOL_RANGE.1)));
    }
    Ok(())
}

pub(crate) fn check_hamiltonian(h: &SectorOperator) -> Result<()> {
    let scale = h.matrix().iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let err = h.hermiticity_error();
    if err > HAMILTONIAN_HERMITIAN_TOL * scale {
        return Err(invalid("hamiltonian", format!("not Hermitian (max |H - H†| = {err:e})")));
    }
    Ok(())
}

/// Uniform samples on `[t_start, t_end]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(invalid("t_end", format!("need t_end > t_start (got {t_start} .. {t_end})")));
        }
        if n_samples < 2 {
            return Err(invalid("n_samples", "need at least 2 samples"));
        }
        Ok(Self { t_start, t_end, n_samples })
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_samples - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.step();
        let last = self.n_samples - 1;
        (0..self.n_samples)
            .map(|i| if i == last { self.t_end } else { self.t_start + i as f64 * dt })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SectorState>,
    /// `⟨n̂₁⟩` at each sample.
    pub occupation: Vec<f64>,
    /// `‖ψ‖` at each sample.
    pub norms: Vec<f64>,
}

impl StateTrajectory {
    fn from_states(times: Vec<f64>, states: Vec<SectorState>) -> Self {
        let occupation = states.iter().map(|s| s.occupation_expectation() / s.norm().powi(2)).collect();
        let norms = states.iter().map(SectorState::norm).collect();
        Self { times, states, occupation, norms }
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Tridiagonal view of a matrix, used to speed up `H ψ` for the banded
/// Hamiltonians built in [`crate::fock`].
struct Banded {
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
    lower: Vec<Complex64>,
}

impl Banded {
    fn try_from(m: &CMatrix) -> Option<Self> {
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                if i.abs_diff(j) > 1 && m[(i, j)] != Complex64::new(0.0, 0.0) {
                    return None;
                }
            }
        }
        Some(Self {
            diag: (0..n).map(|i| m[(i, i)]).collect(),
            upper: (1..n).map(|i| m[(i - 1, i)]).collect(),
            lower: (1..n).map(|i| m[(i, i - 1)]).collect(),
        })
    }

    /// `out = -i M y`
    fn schrodinger_rhs(&self, y: &CVector, out: &mut CVector) {
        let n = self.diag.len();
        let mi = Complex64::new(0.0, -1.0);
        for i in 0..n {
            let mut acc = self.diag[i] * y[i];
            if i + 1 < n {
                acc += self.upper[i] * y[i + 1];
            }
            if i > 0 {
                acc += self.lower[i - 1] * y[i - 1];
            }
            out[i] = mi * acc;
        }
    }
}

/// Integrates `i dψ/dt = Hψ` with adaptive Dormand-Prince steps.
pub fn evolve_schrodinger(h: &SectorOperator, psi0: &SectorState, grid: &TimeGrid, tol: f64) -> Result<StateTrajectory> {
    check_tol(tol)?;
    check_hamiltonian(h)?;
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.dim() });
    }
    let times = grid.times();
    let mut solver = Integrator::new(tol);
    let y0 = psi0.amplitudes().clone();
    let raw = match Banded::try_from(h.matrix()) {
        Some(band) => solver.integrate(|y, dy| band.schrodinger_rhs(y, dy), y0, &times)?,
        None => {
            let mut minus_i_h = h.matrix().clone();
            minus_i_h *= Complex64::new(0.0, -1.0);
            solver.integrate(
                |y: &CVector, dy: &mut CVector| dy.gemv(Complex64::new(1.0, 0.0), &minus_i_h, y, Complex64::new(0.0, 0.0)),
                y0,
                &times,
            )?
        }
    };
    let states = raw.into_iter().map(SectorState::from_raw).collect();
    Ok(StateTrajectory::from_states(times, states))
}

/// Exact propagator `e^{-itH}` from the eigendecomposition of a Hermitian `H`.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralPropagator {
    pub fn new(h: &SectorOperator) -> Result<Self> {
        check_hamiltonian(h)?;
        let eig = SymmetricEigen::new(h.matrix().clone());
        Ok(Self { eigenvalues: eig.eigenvalues.iter().copied().collect(), eigenvectors: eig.eigenvectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `e^{-itH} v`
    pub fn apply(&self, v: &CVector, t: f64) -> CVector {
        let mut coeffs = self.eigenvectors.ad_mul(v);
        for (c, e) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        &self.eigenvectors * coeffs
    }

    /// The full unitary `e^{-itH}`.
    pub fn unitary(&self, t: f64) -> CMatrix {
        let phases = CVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|e| Complex64::from_polar(1.0, -e * t)));
        let scaled = CMatrix::from_fn(self.eigenvectors.nrows(), self.eigenvectors.ncols(), |i, j| self.eigenvectors[(i, j)] * phases[j]);
        scaled * self.eigenvectors.adjoint()
    }
}

/// Closed-system trajectory from the spectral propagator; no time stepping.
pub fn evolve_exact(h: &SectorOperator, psi0: &SectorState, grid: &TimeGrid) -> Result<StateTrajectory> {
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.dim() });
    }
    let prop = SpectralPropagator::new(h)?;
    let times = grid.times();
    let states = times
        .iter()
        .map(|&t| SectorState::from_raw(prop.apply(psi0.amplitudes(), t - grid.t_start)))
        .collect();
    Ok(StateTrajectory::from_states(times, states))
}

/// `p(t) = |⟨0| e^{-itH_qubit} |φ₀⟩|²`, evaluated in closed form.
///
/// Writing `H = ω (n̂·σ)` the propagator is `cos(ωt) − i sin(ωt) n̂·σ`.
pub fn qubit_probability(params: &ChargeParams, phi0: [Complex64; 2], t: f64) -> Result<f64> {
    let norm = (phi0[0].norm_sqr() + phi0[1].norm_sqr()).sqrt();
    if (norm - 1.0).abs() > crate::fock::STATE_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    let h = qubit_hamiltonian(params);
    let z = h.matrix()[(0, 0)].re;
    let x = h.matrix()[(0, 1)].re;
    let omega = z.hypot(x);
    let amp = if omega == 0.0 {
        phi0[0]
    } else {
        let (s, co) = (omega * t).sin_cos();
        let mi_s = Complex64::new(0.0, -s);
        phi0[0] * co + mi_s * ((z / omega) * phi0[0] + (x / omega) * phi0[1])
    };
    Ok(amp.norm_sqr().min(1.0))
}

/// `⟨n̂₁⟩` of a normalized state.
pub fn occupation_expectation(psi: &SectorState) -> f64 {
    psi.occupation_expectation()
}

/// Dominant angular frequency of a uniformly sampled signal, from the mean
/// spacing of same-direction zero crossings of the mean-subtracted signal.
///
/// Crossing times are linearly interpolated between samples. Rising and
/// falling crossings are timed separately and averaged, which cancels the
/// offset left by a mean taken over a non-integer number of periods.
pub fn extract_frequency(signal: &[(f64, f64)]) -> Result<f64> {
    if signal.len() < 3 {
        return Err(Error::TooFewOscillations { sign_changes: 0 });
    }
    let dt = signal[1].0 - signal[0].0;
    if !(dt > 0.0) {
        return Err(invalid("signal", "times must increase"));
    }
    for w in signal.windows(2) {
        if ((w[1].0 - w[0].0) - dt).abs() > 1e-6 * dt {
            return Err(invalid("signal", "sampling is not uniform"));
        }
    }
    let (lo, hi) = signal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    if !(hi - lo > 1e-14 * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE)) {
        return Err(Error::ConstantSignal);
    }
    let mean = signal.iter().map(|&(_, v)| v).sum::<f64>() / signal.len() as f64;

    let mut rising = Vec::new();
    let mut falling = Vec::new();
    for w in signal.windows(2) {
        let (t0, v0) = (w[0].0, w[0].1 - mean);
        let (t1, v1) = (w[1].0, w[1].1 - mean);
        let (pos0, pos1) = (v0 >= 0.0, v1 >= 0.0);
        if pos0 != pos1 {
            let tc = t0 + (t1 - t0) * v0 / (v0 - v1);
            if pos1 {
                rising.push(tc);
            } else {
                falling.push(tc);
            }
        }
    }
    let sign_changes = rising.len() + falling.len();
    if sign_changes < 4 {
        return Err(Error::TooFewOscillations { sign_changes });
    }
    let mut estimates = Vec::with_capacity(2);
    for crossings in [&rising, &falling] {
        if crossings.len() >= 2 {
            let span = crossings[crossings.len() - 1] - crossings[0];
            estimates.push(2.0 * std::f64::consts::PI * (crossings.len() - 1) as f64 / span);
        }
    }
    Ok(estimates.iter().sum::<f64>() / estimates.len() as f64)
}
