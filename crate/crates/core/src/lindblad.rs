//! Open-system dynamics with the channel `b = a₁a₂†`.
//!
//! The generator is
//!
//! ```text
//! ∂ₜρ = −i[H + H⁽²⁾, ρ] + D[ρ]
//! D[ρ] = γ (bρb† − ½{b†b, ρ}) + δ (b†ρb − ½{bb†, ρ})
//!      + β (bρb − ½{b², ρ}) + β* (b†ρb† − ½{b†², ρ})
//! ```
//!
//! with `γ, δ ≥ 0` and `γδ ≥ |β|²` for complete positivity. `H⁽²⁾` defaults
//! to zero. Superoperators are never materialized: the generator acts on the
//! `(N+1) × (N+1)` density matrix directly, using banded products when the
//! operators allow it.
//!
//! The decay constant of a pure state is `Γ_φ = −⟨φ|D[|φ⟩⟨φ|]|φ⟩`, which
//! expands to
//!
//! ```text
//! Γ_φ = γ (⟨b†b⟩ − |⟨b⟩|²) + δ (⟨bb†⟩ − |⟨b⟩|²) + 2 Re(β (⟨b²⟩ − ⟨b⟩²))
//! ```
//!
//! For Fock states this is `γ n₁(N−n₁+1) + δ (n₁+1)(N−n₁)`; for condensates
//! with `θ = θ₁ − θ₂` it is
//! `γ n₁²/N + δ (N−n₁)(1 − n₁/N) − 2 Re(β e^{2iθ}) n₁(N−n₁)/N`.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{op_b, CMatrix, LadderMoments, SectorOperator, SectorState};
use crate::ode::Integrator;
use crate::unitary::{check_hamiltonian, check_tol, TimeGrid};

/// Slack on the density-matrix invariants (Hermiticity and trace).
pub const DENSITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted as numerical noise.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Relative agreement required between the two routes in
/// [`decay_constant_numeric`].
pub const DECAY_CROSS_CHECK_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dissipator coefficients `γ`, `δ`, `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub gamma: f64,
    pub delta: f64,
    pub beta: Complex64,
}

/// Outcome of [`check_complete_positivity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpCheck {
    pub valid: bool,
    /// `γδ − |β|²`
    pub margin: f64,
}

impl NoiseParams {
    /// Rejects negative rates and coefficient sets that are not completely
    /// positive.
    pub fn new(gamma: f64, delta: f64, beta: Complex64) -> Result<Self> {
        let n = Self::new_unchecked(gamma, delta, beta);
        for (name, v) in [("gamma", gamma), ("delta", delta), ("beta", beta.re), ("beta", beta.im)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if gamma < 0.0 {
            return Err(invalid("gamma", format!("{gamma} < 0")));
        }
        if delta < 0.0 {
            return Err(invalid("delta", format!("{delta} < 0")));
        }
        let cp = check_complete_positivity(&n);
        if !cp.valid {
            return Err(Error::CompletePositivity { margin: cp.margin });
        }
        Ok(n)
    }

    /// No validation; for exercising the failure paths.
    pub fn new_unchecked(gamma: f64, delta: f64, beta: Complex64) -> Self {
        Self { gamma, delta, beta }
    }

    pub fn zero() -> Self {
        Self::new_unchecked(0.0, 0.0, ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.gamma == 0.0 && self.delta == 0.0 && self.beta == ZERO
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new_unchecked(self.gamma * factor, self.delta * factor, self.beta * factor)
    }

    fn require_cp(&self) -> Result<()> {
        let cp = check_complete_positivity(self);
        if cp.valid && self.gamma >= 0.0 && self.delta >= 0.0 {
            Ok(())
        } else {
            Err(Error::CompletePositivity { margin: cp.margin })
        }
    }
}

/// `γδ ≥ |β|²`, with round-off slack of `1e-12` relative to the larger side.
pub fn check_complete_positivity(n: &NoiseParams) -> CpCheck {
    let lhs = n.gamma * n.delta;
    let rhs = n.beta.norm_sqr();
    let margin = lhs - rhs;
    let slack = 1e-12 * lhs.abs().max(rhs);
    CpCheck { valid: margin >= -slack, margin }
}

/// Hermitian, unit-trace, positive semidefinite matrix on a sector.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() < 2 {
            return Err(invalid("rho", "dimension must be at least 2"));
        }
        let rho = Self { matrix };
        let herm = rho.hermiticity_error();
        if herm > DENSITY_TOL {
            return Err(invalid("rho", format!("not Hermitian (max |rho - rho†| = {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(invalid("rho", format!("trace {tr} is not 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            return Err(invalid("rho", format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub fn pure(state: &SectorState) -> Self {
        Self { matrix: state.projector() }
    }

    pub(crate) fn from_raw(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn total_pairs(&self) -> usize {
        self.dim() - 1
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `tr(ρ²)`
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr(n̂₁ ρ)`
    pub fn occupation_expectation(&self) -> f64 {
        (0..self.dim()).map(|k| k as f64 * self.matrix[(k, k)].re).sum()
    }

    /// `⟨φ|ρ|φ⟩`
    pub fn fidelity_to_pure(&self, phi: &SectorState) -> Result<f64> {
        if phi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: phi.dim() });
        }
        Ok(phi.amplitudes().dotc(&(&self.matrix * phi.amplitudes())).re)
    }

    /// Uhlmann fidelity `(tr √(√σ ρ √σ))²` with `σ = reference`. Reduces to
    /// `tr(σρ)` when the reference is pure, which is evaluated directly.
    pub fn fidelity(&self, reference: &DensityMatrix) -> Result<f64> {
        if reference.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: reference.dim() });
        }
        if (reference.purity() - 1.0).abs() < 1e-12 {
            return Ok((reference.matrix.adjoint() * &self.matrix).trace().re);
        }
        let sqrt_ref = hermitian_sqrt(&reference.matrix);
        let inner = &sqrt_ref * &self.matrix * &sqrt_ref;
        let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
        let s: f64 = inner.symmetric_eigenvalues().iter().map(|l| l.max(0.0).sqrt()).sum();
        Ok(s * s)
    }
}

fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new((m + m.adjoint()) * Complex64::new(0.5, 0.0));
    let v = &eig.eigenvectors;
    let scaled = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt());
    scaled * v.adjoint()
}

/// Operator stored either densely or as a handful of nonzero diagonals.
#[derive(Debug, Clone)]
enum Operator {
    Dense(CMatrix),
    /// `(offset, values)` with `offset = col − row` and `values[r] = A[r, r + offset]`
    /// over the rows where that entry exists.
    Banded { dim: usize, diagonals: Vec<(isize, Vec<Complex64>)> },
}

const MAX_BANDED_DIAGONALS: usize = 7;

impl Operator {
    fn new(m: &CMatrix) -> Self {
        let n = m.nrows() as isize;
        let mut diagonals = Vec::new();
        for d in -(n - 1)..n {
            let rows = (0.max(-d))..(n.min(n - d));
            let vals: Vec<Complex64> = rows.map(|r| m[(r as usize, (r + d) as usize)]).collect();
            if vals.iter().any(|z| *z != ZERO) {
                diagonals.push((d, vals));
                if diagonals.len() > MAX_BANDED_DIAGONALS {
                    return Operator::Dense(m.clone());
                }
            }
        }
        Operator::Banded { dim: n as usize, diagonals }
    }

    /// `out += alpha * A x`
    fn add_left(&self, alpha: Complex64, x: &CMatrix, out: &mut CMatrix) {
        match self {
            Operator::Dense(a) => out.gemm(alpha, a, x, ONE),
            Operator::Banded { dim, diagonals } => {
                let n = *dim as isize;
                let cols = x.ncols();
                for (d, vals) in diagonals {
                    let r0 = 0.max(-d);
                    for (idx, v) in vals.iter().enumerate() {
                        let r = r0 + idx as isize;
                        let src = (r + d) as usize;
                        let coef = alpha * v;
                        debug_assert!(src < n as usize);
                        for j in 0..cols {
                            out[(r as usize, j)] += coef * x[(src, j)];
                        }
                    }
                }
            }
        }
    }

    /// `out += alpha * x A`
    fn add_right(&self, alpha: Complex64, x: &CMatrix, out: &mut CMatrix) {
        match self {
            Operator::Dense(a) => out.gemm(alpha, x, a, ONE),
            Operator::Banded { diagonals, .. } => {
                let rows = x.nrows();
                for (d, vals) in diagonals {
                    let r0 = 0.max(-d);
                    // A[r, r + d] feeds column c = r + d of the product from column r of x.
                    for (idx, v) in vals.iter().enumerate() {
                        let r = (r0 + idx as isize) as usize;
                        let c = (r as isize + d) as usize;
                        let coef = alpha * v;
                        for i in 0..rows {
                            out[(i, c)] += coef * x[(i, r)];
                        }
                    }
                }
            }
        }
    }
}

/// `D[ρ]`, evaluated literally from dense products.
pub fn dissipator(rho: &CMatrix, noise: &NoiseParams, b: &SectorOperator) -> Result<CMatrix> {
    if rho.nrows() != b.dim() || rho.ncols() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), found: rho.nrows() });
    }
    let b = b.matrix();
    let bd = b.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let term = |l: &CMatrix, r: &CMatrix, k: &CMatrix| l * rho * r - (k * rho + rho * k) * half;
    let g = Complex64::new(noise.gamma, 0.0);
    let d = Complex64::new(noise.delta, 0.0);
    Ok(term(b, &bd, &(&bd * b)) * g
        + term(&bd, b, &(b * &bd)) * d
        + term(b, b, &(b * b)) * noise.beta
        + term(&bd, &bd, &(&bd * &bd)) * noise.beta.conj())
}

/// The full generator `ρ ↦ −i[H + H⁽²⁾, ρ] + D[ρ]`.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    dim: usize,
    noise: NoiseParams,
    /// `−iH − ½K` with `K = γ b†b + δ bb† + β b² + β* b†²`
    left: Operator,
    /// `iH − ½K`
    right: Operator,
    b: Operator,
    b_dag: Operator,
}

impl MasterEquation {
    pub fn new(h: &SectorOperator, noise: &NoiseParams) -> Result<Self> {
        noise.require_cp()?;
        Self::new_unchecked(h, None, noise)
    }

    /// With a bath-induced Hermitian correction `H⁽²⁾` added to `H`.
    pub fn with_correction(h: &SectorOperator, correction: &SectorOperator, noise: &NoiseParams) -> Result<Self> {
        noise.require_cp()?;
        Self::new_unchecked(h, Some(correction), noise)
    }

    /// Skips the complete-positivity check.
    pub fn new_unchecked(h: &SectorOperator, correction: Option<&SectorOperator>, noise: &NoiseParams) -> Result<Self> {
        check_hamiltonian(h)?;
        let mut h_total = h.matrix().clone();
        if let Some(h2) = correction {
            check_hamiltonian(h2)?;
            if h2.dim() != h.dim() {
                return Err(Error::DimensionMismatch { expected: h.dim(), found: h2.dim() });
            }
            h_total += h2.matrix();
        }
        let dim = h.dim();
        let b = op_b(dim - 1)?.into_matrix();
        let bd = b.adjoint();
        let k = (&bd * &b) * Complex64::new(noise.gamma, 0.0)
            + (&b * &bd) * Complex64::new(noise.delta, 0.0)
            + (&b * &b) * noise.beta
            + (&bd * &bd) * noise.beta.conj();
        let i = Complex64::new(0.0, 1.0);
        let half = Complex64::new(0.5, 0.0);
        let left = &h_total * (-i) - &k * half;
        let right = &h_total * i - &k * half;
        Ok(Self {
            dim,
            noise: *noise,
            left: Operator::new(&left),
            right: Operator::new(&right),
            b: Operator::new(&b),
            b_dag: Operator::new(&bd),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = L[ρ]`; `scratch` must have the shape of `rho`.
    pub fn apply(&self, rho: &CMatrix, out: &mut CMatrix, scratch: &mut CMatrix) {
        out.fill(ZERO);
        self.left.add_left(ONE, rho, out);
        self.right.add_right(ONE, rho, out);
        let n = &self.noise;
        if n.gamma != 0.0 || n.beta != ZERO {
            scratch.fill(ZERO);
            self.b.add_left(ONE, rho, scratch);
            if n.gamma != 0.0 {
                self.b_dag.add_right(Complex64::new(n.gamma, 0.0), scratch, out);
            }
            if n.beta != ZERO {
                self.b.add_right(n.beta, scratch, out);
            }
        }
        if n.delta != 0.0 || n.beta != ZERO {
            scratch.fill(ZERO);
            self.b_dag.add_left(ONE, rho, scratch);
            if n.delta != 0.0 {
                self.b.add_right(Complex64::new(n.delta, 0.0), scratch, out);
            }
            if n.beta != ZERO {
                self.b_dag.add_right(n.beta.conj(), scratch, out);
            }
        }
    }

    /// Integrates the master equation, re-Hermitizing after every accepted
    /// step. Observables are recorded at every sample.
    pub fn evolve(&self, rho0: &DensityMatrix, grid: &TimeGrid, tol: f64) -> Result<MasterTrajectory> {
        check_tol(tol)?;
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rho0.dim() });
        }
        let times = grid.times();
        let mut scratch = CMatrix::zeros(self.dim, self.dim);
        let raw = Integrator::new(tol).integrate_with(
            |rho: &CMatrix, out: &mut CMatrix| self.apply(rho, out, &mut scratch),
            rho0.matrix.clone(),
            &times,
            |rho: &mut CMatrix| {
                let herm = (&*rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
                *rho = herm;
            },
        )?;
        let states: Vec<DensityMatrix> = raw.into_iter().map(DensityMatrix::from_raw).collect();
        MasterTrajectory::observe(times, states, rho0)
    }
}

#[derive(Debug, Clone)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub trace: Vec<f64>,
    pub occupation: Vec<f64>,
    /// Fidelity to the initial state.
    pub fidelity: Vec<f64>,
    pub min_eigenvalue: Vec<f64>,
    pub hermiticity_error: Vec<f64>,
}

impl MasterTrajectory {
    fn observe(times: Vec<f64>, states: Vec<DensityMatrix>, rho0: &DensityMatrix) -> Result<Self> {
        let trace = states.iter().map(DensityMatrix::trace).collect();
        let occupation = states.iter().map(DensityMatrix::occupation_expectation).collect();
        let fidelity = states.iter().map(|s| s.fidelity(rho0)).collect::<Result<_>>()?;
        let min_eigenvalue = states.iter().map(DensityMatrix::min_eigenvalue).collect();
        let hermiticity_error = states.iter().map(DensityMatrix::hermiticity_error).collect();
        Ok(Self { times, states, trace, occupation, fidelity, min_eigenvalue, hermiticity_error })
    }
}

/// Evolves `rho0` under `H` and the dissipator with coefficients `noise`.
pub fn evolve_master(
    h: &SectorOperator,
    noise: &NoiseParams,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    tol: f64,
) -> Result<MasterTrajectory> {
    MasterEquation::new(h, noise)?.evolve(rho0, grid, tol)
}

fn decay_from_moments(m: &LadderMoments, noise: &NoiseParams) -> f64 {
    let b_abs2 = m.b.norm_sqr();
    noise.gamma * (m.b_dag_b - b_abs2) + noise.delta * (m.b_b_dag - b_abs2) + 2.0 * (noise.beta * (m.b_sq - m.b * m.b)).re
}

fn check_normalized(phi: &SectorState) -> Result<()> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > crate::fock::STATE_NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Initial decay rate `Γ_φ` of `|φ⟩⟨φ|`, from the expectation values of the
/// supplied channel operator, cross-checked against
/// `−⟨φ|D[|φ⟩⟨φ|]|φ⟩` evaluated with [`dissipator`].
pub fn decay_constant_numeric(phi: &SectorState, noise: &NoiseParams, b: &SectorOperator) -> Result<f64> {
    check_normalized(phi)?;
    let bd = b.adjoint();
    let moments = LadderMoments {
        b: phi.expectation(b)?,
        b_dag_b: phi.expectation(&bd.compose(b)?)?.re,
        b_b_dag: phi.expectation(&b.compose(&bd)?)?.re,
        b_sq: phi.expectation(&b.compose(b)?)?,
    };
    let gamma = decay_from_moments(&moments, noise);

    let d = dissipator(&phi.projector(), noise, b)?;
    let direct = -phi.amplitudes().dotc(&(d * phi.amplitudes())).re;
    let scale = (noise.gamma.abs() + noise.delta.abs() + noise.beta.norm())
        * moments.b_dag_b.max(moments.b_b_dag).max(1.0);
    if (gamma - direct).abs() > DECAY_CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheck { what: "decay constant: moments vs dissipator", lhs: gamma, rhs: direct });
    }
    Ok(gamma)
}

/// `Γ_φ` from the banded structure of `b`, in `O(N)` work. Suitable for
/// sectors far too large for dense matrices.
pub fn decay_constant(phi: &SectorState, noise: &NoiseParams) -> Result<f64> {
    check_normalized(phi)?;
    Ok(decay_from_moments(&LadderMoments::of(phi), noise))
}

/// `Γ_qubit = γ n₁(N − n₁ + 1) + δ (n₁ + 1)(N − n₁)` for the Fock state
/// `|1_(n₁) 2_(N−n₁)⟩`.
pub fn decay_constant_qubit_analytic(n1: u64, total_pairs: u64, noise: &NoiseParams) -> Result<f64> {
    if total_pairs == 0 {
        return Err(invalid("total_pairs", "N must be at least 1"));
    }
    if n1 > total_pairs {
        return Err(invalid("n1", format!("{n1} outside 0..={total_pairs}")));
    }
    let (k, n) = (n1 as f64, total_pairs as f64);
    Ok(noise.gamma * k * (n - k + 1.0) + noise.delta * (k + 1.0) * (n - k))
}

/// `Γ_mf = γ n₁²/N + δ (N − n₁)(1 − n₁/N) − 2 Re(β e^{2iθ}) n₁(N − n₁)/N`
/// for a condensate with `n₁ = N|ψ₁|²` and `θ = θ₁ − θ₂`.
pub fn decay_constant_meanfield_analytic(n1: f64, total_pairs: u64, theta: f64, noise: &NoiseParams) -> Result<f64> {
    if total_pairs == 0 {
        return Err(invalid("total_pairs", "N must be at least 1"));
    }
    let n = total_pairs as f64;
    if !(0.0..=n).contains(&n1) {
        return Err(invalid("n1", format!("{n1} outside [0, {n}]")));
    }
    noise.require_cp()?;
    let phase = Complex64::from_polar(1.0, 2.0 * theta);
    Ok(noise.gamma * n1 * n1 / n + noise.delta * (n - n1) * (1.0 - n1 / n) - 2.0 * (noise.beta * phase).re * n1 * (n - n1) / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRatio {
    pub qubit: f64,
    pub meanfield: f64,
    /// `Γ_qubit / Γ_mf`
    pub ratio: f64,
    /// `ratio / n̄₁`
    pub agreement: f64,
}

/// Compares the Fock-state and condensate decay constants at the same
/// island-1 occupation `n̄₁`.
pub fn decay_ratio(reference_occupation: u64, total_pairs: u64, noise: &NoiseParams, theta: f64) -> Result<DecayRatio> {
    if reference_occupation == 0 || reference_occupation >= total_pairs {
        return Err(invalid(
            "reference_occupation",
            format!("n_bar1 = {reference_occupation} must satisfy 0 < n_bar1 < N = {total_pairs}"),
        ));
    }
    let qubit = decay_constant_qubit_analytic(reference_occupation, total_pairs, noise)?;
    let meanfield = decay_constant_meanfield_analytic(reference_occupation as f64, total_pairs, theta, noise)?;
    if !(meanfield > 0.0) {
        return Err(Error::VanishingDenominator("mean-field decay constant is not positive"));
    }
    let ratio = qubit / meanfield;
    Ok(DecayRatio { qubit, meanfield, ratio, agreement: ratio / reference_occupation as f64 })
}
