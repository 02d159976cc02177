//! The fixed-total-number sector of two bosonic modes.
//!
//! With `N` Cooper pairs shared by island 1 and island 2 the sector is
//! spanned by the occupation states `|1_(k) 2_(N-k)⟩`, `k = 0..=N`. Basis
//! index `k` is the number of pairs on island 1, in ascending order. All
//! operators are stored as dense `(N+1) × (N+1)` complex matrices.
//!
//! The qubit convention used by [`qubit_hamiltonian`] puts `|0⟩` first with
//! `σ_z|0⟩ = +|0⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance on `|ψ₁|² + |ψ₂|²` accepted by [`condensate_state`] before
/// renormalizing.
pub const CONDENSATE_NORM_SLACK: f64 = 1e-6;

/// Norm tolerance accepted by [`SectorState::from_amplitudes`].
pub const STATE_NORM_TOL: f64 = 1e-10;

const HERMITIAN_TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Couplings of the two-mode Bose-Hubbard Hamiltonian
/// `E n̂₁² + U₁ n̂₁ + U₂ n̂₂ − K (a₁a₂† + a₁†a₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeParams {
    /// Coulomb repulsion on island 1 (`E`).
    pub charging: f64,
    /// On-site potential of island 1 (`U₁`).
    pub potential1: f64,
    /// On-site potential of island 2 (`U₂`).
    pub potential2: f64,
    /// Tunneling amplitude (`K`).
    pub tunneling: f64,
    /// Conserved total number of pairs (`N`).
    pub total_pairs: usize,
}

impl TwoModeParams {
    pub fn new(charging: f64, potential1: f64, potential2: f64, tunneling: f64, total_pairs: usize) -> Result<Self> {
        let p = Self { charging, potential1, potential2, tunneling, total_pairs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        sector_dimension(self.total_pairs)?;
        for (name, v) in [
            ("charging", self.charging),
            ("potential1", self.potential1),
            ("potential2", self.potential2),
            ("tunneling", self.tunneling),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Parameters of the charge (quantum phase) model `4E_C (n − n_g)² − E_J cos θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeParams {
    /// `E_C`
    pub charging_energy: f64,
    /// `E_J`
    pub josephson_energy: f64,
    /// `n_g`
    pub gate_charge: f64,
    /// Macroscopic reference occupation `n̄₁` of island 1.
    pub reference_occupation: u64,
}

impl ChargeParams {
    pub fn new(charging_energy: f64, josephson_energy: f64, gate_charge: f64, reference_occupation: u64) -> Result<Self> {
        let p = Self { charging_energy, josephson_energy, gate_charge, reference_occupation };
        for (name, v) in [
            ("charging_energy", charging_energy),
            ("josephson_energy", josephson_energy),
            ("gate_charge", gate_charge),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(p)
    }

    /// `E_C ≥ 10 E_J` with `E_C > 0`.
    pub fn is_qubit_regime(&self) -> bool {
        self.charging_energy > 0.0 && self.charging_energy >= 10.0 * self.josephson_energy.abs()
    }

    pub fn require_qubit_regime(&self) -> Result<()> {
        if self.is_qubit_regime() {
            Ok(())
        } else {
            Err(invalid(
                "charging_energy",
                format!(
                    "qubit regime needs E_C > 0 and E_C >= 10 E_J (E_C = {}, E_J = {})",
                    self.charging_energy, self.josephson_energy
                ),
            ))
        }
    }
}

/// Normalized amplitude vector on the `N`-pair sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    amplitudes: CVector,
}

impl SectorState {
    /// Wraps `amplitudes`, which must already have unit norm within
    /// [`STATE_NORM_TOL`]; the residual is divided out.
    pub fn from_amplitudes(amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(invalid("amplitudes", "sector needs at least two basis states"));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes: amplitudes.unscale(norm) })
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::from_amplitudes(amplitudes.unscale(norm))
    }

    pub(crate) fn from_raw(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn total_pairs(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn overlap(&self, other: &SectorState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `⟨ψ|A|ψ⟩`
    pub fn expectation(&self, op: &SectorOperator) -> Result<Complex64> {
        op.check_dim(self.dim())?;
        Ok(self.amplitudes.dotc(&(&op.matrix * &self.amplitudes)))
    }

    /// `⟨n̂₁⟩ = Σ_k k |ψ_k|²`.
    pub fn occupation_expectation(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(k, a)| k as f64 * a.norm_sqr()).sum()
    }

    /// `|ψ⟩⟨ψ|`
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Dense operator on a sector (or on a truncated charge basis).
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    matrix: CMatrix,
}

impl SectorOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() < 2 {
            return Err(invalid("matrix", "operator needs dimension at least 2"));
        }
        Ok(Self { matrix })
    }

    /// Accepts `matrix` only if it is Hermitian to within `tol` (max-abs).
    pub fn hermitian(matrix: CMatrix, tol: f64) -> Result<Self> {
        let op = Self::from_matrix(matrix)?;
        let err = op.hermiticity_error();
        if err > tol {
            return Err(invalid("matrix", format!("not Hermitian (max |M - M†| = {err:e})")));
        }
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::from_matrix(CMatrix::zeros(dim, dim))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn total_pairs(&self) -> usize {
        self.dim() - 1
    }

    pub fn adjoint(&self) -> SectorOperator {
        SectorOperator { matrix: self.matrix.adjoint() }
    }

    /// `‖M − M†‖_max`
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

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL
    }

    pub fn apply(&self, state: &SectorState) -> Result<CVector> {
        self.check_dim(state.dim())?;
        Ok(&self.matrix * state.amplitudes())
    }

    pub fn compose(&self, rhs: &SectorOperator) -> Result<SectorOperator> {
        self.check_dim(rhs.dim())?;
        Ok(SectorOperator { matrix: &self.matrix * &rhs.matrix })
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }
}

/// Number of basis states of the `N`-pair sector.
pub fn sector_dimension(total_pairs: usize) -> Result<usize> {
    if total_pairs == 0 {
        return Err(invalid("total_pairs", "N must be at least 1"));
    }
    Ok(total_pairs + 1)
}

/// `|1_(n1) 2_(N-n1)⟩`
pub fn number_state(n1: usize, total_pairs: usize) -> Result<SectorState> {
    let dim = sector_dimension(total_pairs)?;
    if n1 > total_pairs {
        return Err(invalid("n1", format!("occupation {n1} outside 0..={total_pairs}")));
    }
    let mut v = CVector::zeros(dim);
    v[n1] = c(1.0);
    Ok(SectorState::from_raw(v))
}

/// The condensate `|Ψ⟩_N` of `N` pairs in the single-pair state
/// `ψ₁|1⟩ + ψ₂|2⟩`; amplitude `√C(N,k) ψ₁ᵏ ψ₂^(N−k)` at index `k`.
///
/// Inputs with `|ψ₁|² + |ψ₂|²` within [`CONDENSATE_NORM_SLACK`] of one are
/// renormalized. Amplitudes are built in log space so large `N` does not
/// overflow the binomial coefficients.
pub fn condensate_state(psi1: Complex64, psi2: Complex64, total_pairs: usize) -> Result<SectorState> {
    let dim = sector_dimension(total_pairs)?;
    let weight = psi1.norm_sqr() + psi2.norm_sqr();
    if weight == 0.0 {
        return Err(invalid("psi", "both amplitudes vanish"));
    }
    if !weight.is_finite() || (weight - 1.0).abs() > CONDENSATE_NORM_SLACK {
        return Err(invalid("psi", format!("|psi1|^2 + |psi2|^2 = {weight} is not 1")));
    }
    let scale = weight.sqrt();
    let (psi1, psi2) = (psi1 / scale, psi2 / scale);
    let (r1, phase1) = psi1.to_polar();
    let (r2, phase2) = psi2.to_polar();
    let (ln_r1, ln_r2) = (r1.ln(), r2.ln());
    let n = total_pairs;

    let mut v = CVector::zeros(dim);
    let mut ln_binom = 0.0_f64;
    for k in 0..=n {
        if k > 0 {
            ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let vanishes = (k > 0 && r1 == 0.0) || (k < n && r2 == 0.0);
        if vanishes {
            continue;
        }
        let mut ln_mag = 0.5 * ln_binom;
        if k > 0 {
            ln_mag += k as f64 * ln_r1;
        }
        if k < n {
            ln_mag += (n - k) as f64 * ln_r2;
        }
        let phase = k as f64 * phase1 + (n - k) as f64 * phase2;
        v[k] = Complex64::from_polar(ln_mag.exp(), phase);
    }
    SectorState::normalized(v)
}

/// Island-1 annihilator `a₁` mapping the `N` sector into the `N−1` sector.
pub fn lower_island1(state: &SectorState) -> CVector {
    let n = state.total_pairs();
    let a = state.amplitudes();
    CVector::from_fn(n, |j, _| a[j + 1] * ((j + 1) as f64).sqrt())
}

/// Island-2 annihilator `a₂` mapping the `N` sector into the `N−1` sector.
pub fn lower_island2(state: &SectorState) -> CVector {
    let n = state.total_pairs();
    let a = state.amplitudes();
    CVector::from_fn(n, |j, _| a[j] * ((n - j) as f64).sqrt())
}

/// Matrix element `⟨k−1|b|k⟩ = √(k (N−k+1))`.
pub fn b_element(k: usize, total_pairs: usize) -> f64 {
    ((k * (total_pairs + 1 - k)) as f64).sqrt()
}

/// Channel operator `b = a₁a₂†`, moving one pair from island 1 to island 2.
pub fn op_b(total_pairs: usize) -> Result<SectorOperator> {
    let dim = sector_dimension(total_pairs)?;
    let mut m = CMatrix::zeros(dim, dim);
    for k in 1..dim {
        m[(k - 1, k)] = c(b_element(k, total_pairs));
    }
    Ok(SectorOperator { matrix: m })
}

/// `n̂₁ = a₁†a₁`
pub fn op_n1(total_pairs: usize) -> Result<SectorOperator> {
    let dim = sector_dimension(total_pairs)?;
    Ok(SectorOperator { matrix: CMatrix::from_diagonal(&CVector::from_fn(dim, |k, _| c(k as f64))) })
}

pub fn two_mode_hamiltonian(p: &TwoModeParams) -> Result<SectorOperator> {
    p.validate()?;
    let n = p.total_pairs;
    let dim = n + 1;
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        let kf = k as f64;
        m[(k, k)] = c(p.charging * kf * kf + p.potential1 * kf + p.potential2 * (n - k) as f64);
    }
    for k in 1..dim {
        let hop = c(-p.tunneling * b_element(k, n));
        m[(k - 1, k)] = hop;
        m[(k, k - 1)] = hop;
    }
    Ok(SectorOperator { matrix: m })
}

/// Charge-basis Hamiltonian on `n = 0..=levels`:
/// `4E_C (n − n_g)²` on the diagonal, `−E_J` between neighbouring charges.
pub fn charge_hamiltonian(params: &ChargeParams, levels: usize) -> Result<SectorOperator> {
    if levels < 1 {
        return Err(invalid("levels", "need at least the charge states 0 and 1"));
    }
    let dim = levels + 1;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        let d = n as f64 - params.gate_charge;
        m[(n, n)] = c(4.0 * params.charging_energy * d * d);
    }
    for n in 1..dim {
        m[(n - 1, n)] = c(-params.josephson_energy);
        m[(n, n - 1)] = c(-params.josephson_energy);
    }
    Ok(SectorOperator { matrix: m })
}

/// Default truncation for [`charge_hamiltonian`].
pub const DEFAULT_CHARGE_LEVELS: usize = 10;

/// Two-level reduction `−(4E_C(1 − 2n_g)/2) σ_z − (E_J/2) σ_x`.
pub fn qubit_hamiltonian(params: &ChargeParams) -> SectorOperator {
    let z = -2.0 * params.charging_energy * (1.0 - 2.0 * params.gate_charge);
    let x = -0.5 * params.josephson_energy;
    let m = CMatrix::from_row_slice(2, 2, &[c(z), c(x), c(x), c(-z)]);
    SectorOperator { matrix: m }
}

/// Identifies the charge model inside the two-mode model around the
/// reference occupation `n̄₁`: `E_C = E/4`, `n_g = (U₂ − U₁)/(2E) − n̄₁`,
/// `E_J = K n̄₁ (N − n̄₁)`.
pub fn map_parameters(p: &TwoModeParams, reference_occupation: u64) -> Result<ChargeParams> {
    p.validate()?;
    if p.charging == 0.0 {
        return Err(invalid("charging", "E = 0 leaves the gate charge undefined"));
    }
    let n_bar = reference_occupation;
    if n_bar == 0 || n_bar >= p.total_pairs as u64 {
        return Err(invalid(
            "reference_occupation",
            format!("n_bar1 = {n_bar} must satisfy 0 < n_bar1 < N = {}", p.total_pairs),
        ));
    }
    let nb = n_bar as f64;
    ChargeParams::new(
        p.charging / 4.0,
        p.tunneling * nb * (p.total_pairs as f64 - nb),
        (p.potential2 - p.potential1) / (2.0 * p.charging) - nb,
        n_bar,
    )
}

/// First and second moments of `b` in a sector state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderMoments {
    /// `⟨b⟩`
    pub b: Complex64,
    /// `⟨b†b⟩`
    pub b_dag_b: f64,
    /// `⟨bb†⟩`
    pub b_b_dag: f64,
    /// `⟨b²⟩`
    pub b_sq: Complex64,
}

impl LadderMoments {
    /// Evaluated from the banded structure of `b` in `O(N)` work, without
    /// building any matrix.
    pub fn of(state: &SectorState) -> Self {
        let n = state.total_pairs();
        let a = state.amplitudes();
        let mut b = Complex64::new(0.0, 0.0);
        let mut b_sq = Complex64::new(0.0, 0.0);
        let mut b_dag_b = 0.0;
        let mut b_b_dag = 0.0;
        for k in 0..=n {
            let p = a[k].norm_sqr();
            b_dag_b += (k * (n + 1 - k)) as f64 * p;
            b_b_dag += ((k + 1) * (n - k)) as f64 * p;
            if k < n {
                b += a[k].conj() * a[k + 1] * b_element(k + 1, n);
            }
            if k + 1 < n {
                b_sq += a[k].conj() * a[k + 2] * (b_element(k + 1, n) * b_element(k + 2, n));
            }
        }
        Self { b, b_dag_b, b_b_dag, b_sq }
    }

    /// Closed forms for a condensate with `n₁ = N|ψ₁|²` and relative phase
    /// `θ = θ₁ − θ₂`: `⟨b⟩ = √(n₁(N−n₁)) e^{iθ}`, `⟨b†b⟩ = n₁(N − n₁ + n₁/N)`,
    /// `⟨bb†⟩ = (N − n₁)(1 + n₁ − n₁/N)` and `⟨b²⟩ = (1 − 1/N) ⟨b⟩²`.
    pub fn condensate(n1: f64, total_pairs: usize, theta: f64) -> Self {
        let n = total_pairs as f64;
        let b = Complex64::from_polar((n1 * (n - n1)).max(0.0).sqrt(), theta);
        Self {
            b,
            b_dag_b: n1 * (n - n1 + n1 / n),
            b_b_dag: (n - n1) * (1.0 + n1 - n1 / n),
            b_sq: b * b * (1.0 - 1.0 / n),
        }
    }
}
