use std::f64::consts::PI;

use num_complex::Complex64;
use scb_core::fock::{condensate_state, number_state, two_mode_hamiltonian, ChargeParams, TwoModeParams};
use scb_core::lindblad::{decay_constant, evolve_master, DensityMatrix, NoiseParams};
use scb_core::meanfield::{compare_gp_to_exact, integrate_phase_number, small_oscillation_frequency, OrderParameter, PhaseNumberState};
use scb_core::unitary::{evolve_exact, evolve_schrodinger, extract_frequency, qubit_probability, TimeGrid};

const TOL: f64 = 1e-10;

fn hamiltonian(total: usize) -> scb_core::fock::SectorOperator {
    let p = TwoModeParams::new(0.3, 0.1, -0.2, 0.8, total).unwrap();
    two_mode_hamiltonian(&p).unwrap()
}

#[test]
fn rk_and_spectral_propagation_agree() {
    let grid = TimeGrid::new(0.0, 6.0, 13).unwrap();
    for total in 1..=10 {
        let h = hamiltonian(total);
        let psi = OrderParameter::from_weight_phase(0.35, 0.9).unwrap();
        let psi0 = condensate_state(psi.psi1, psi.psi2, total).unwrap();
        let rk = evolve_schrodinger(&h, &psi0, &grid, TOL).unwrap();
        let ex = evolve_exact(&h, &psi0, &grid).unwrap();
        for (a, b) in rk.states.iter().zip(&ex.states) {
            assert!((a.amplitudes() - b.amplitudes()).norm() <= 1e-8, "N = {total}");
        }
        assert!(rk.max_norm_deviation() <= 10.0 * TOL);
    }
}

#[test]
fn schrodinger_conserves_energy() {
    let total = 30;
    let h = hamiltonian(total);
    let psi0 = number_state(7, total).unwrap();
    let grid = TimeGrid::new(0.0, 40.0, 81).unwrap();
    let traj = evolve_schrodinger(&h, &psi0, &grid, TOL).unwrap();
    let e0 = psi0.expectation(&h).unwrap().re;
    for s in &traj.states {
        let e = s.expectation(&h).unwrap().re;
        assert!((e - e0).abs() <= 10.0 * TOL * e0.abs().max(1.0), "{e} vs {e0}");
    }
}

#[test]
fn qubit_oscillates_at_josephson_frequency_at_degeneracy() {
    let c = ChargeParams::new(5.0, 0.2, 0.5, 0).unwrap();
    let periods = 12.0;
    let t_end = periods * 2.0 * PI / 0.2;
    let n = 2400;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let signal: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            (t, qubit_probability(&c, [one, zero], t).unwrap())
        })
        .collect();
    let w = extract_frequency(&signal).unwrap();
    assert!((w - 0.2).abs() <= 0.01 * 0.2, "{w}");
}

#[test]
fn pendulum_frequency_over_parameter_grid() {
    for (e, ej) in [(2.0, 1.0), (1.0, 0.5), (4.0, 3.0), (0.5, 2.0), (10.0, 0.1)] {
        let w0 = small_oscillation_frequency(e, ej).unwrap();
        let grid = TimeGrid::new(0.0, 20.0 * 2.0 * PI / w0, 4001).unwrap();
        let traj = integrate_phase_number(e, ej, PhaseNumberState { n: 0.0, theta: 0.01 }, &grid, TOL).unwrap();
        let sig: Vec<(f64, f64)> = traj.times.iter().zip(&traj.states).map(|(t, s)| (*t, s.theta)).collect();
        let w = extract_frequency(&sig).unwrap();
        assert!((w - w0).abs() <= 0.01 * w0, "E={e} E_J={ej}: {w} vs {w0}");
    }
}

#[test]
fn linear_meanfield_matches_exact_dynamics() {
    let grid = TimeGrid::new(0.0, 10.0, 101).unwrap();
    for total in [5, 20, 50] {
        let p = TwoModeParams::new(0.0, 0.3, -0.1, 0.7, total).unwrap();
        let r = compare_gp_to_exact(&p, OrderParameter::from_weight_phase(0.9, 0.4).unwrap(), &grid).unwrap();
        assert!(r.max_deviation <= 1e-6, "N = {total}: {}", r.max_deviation);
    }
}

#[test]
fn zero_noise_master_matches_closed_system() {
    let total = 8;
    let h = hamiltonian(total);
    let psi0 = number_state(3, total).unwrap();
    let grid = TimeGrid::new(0.0, 5.0, 21).unwrap();
    let open = evolve_master(&h, &NoiseParams::zero(), &DensityMatrix::pure(&psi0), &grid, TOL).unwrap();
    let closed = evolve_exact(&h, &psi0, &grid).unwrap();
    for (f, s) in open.fidelity.iter().zip(&closed.states) {
        let want = s.overlap(&psi0).norm_sqr();
        assert!((f - want).abs() <= 1e-8);
    }
}

#[test]
fn master_equation_keeps_density_matrix_physical() {
    let total = 12;
    let h = hamiltonian(total);
    let noise = NoiseParams::new(0.3, 0.2, Complex64::new(0.1, -0.15)).unwrap();
    let psi = OrderParameter::from_weight_phase(0.6, 1.1).unwrap();
    let phi = condensate_state(psi.psi1, psi.psi2, total).unwrap();
    let rate = decay_constant(&phi, &noise).unwrap();
    let grid = TimeGrid::new(0.0, 20.0 / rate, 41).unwrap();
    let traj = evolve_master(&h, &noise, &DensityMatrix::pure(&phi), &grid, TOL).unwrap();
    for i in 0..traj.times.len() {
        assert!((traj.trace[i] - 1.0).abs() <= 10.0 * TOL);
        assert!(traj.hermiticity_error[i] <= 10.0 * TOL);
        assert!(traj.min_eigenvalue[i] >= -1e-6);
    }
    assert!(traj.fidelity.last().unwrap() < &0.9);
}

#[test]
fn short_time_fidelity_loss_is_linear_in_decay_constant() {
    let total = 16;
    let h = hamiltonian(total);
    let noise = NoiseParams::new(1.0, 0.5, Complex64::new(0.2, 0.3)).unwrap();
    let phi = number_state(5, total).unwrap();
    let rate = decay_constant(&phi, &noise).unwrap();
    let slopes: Vec<f64> = [1e-4, 5e-5, 2.5e-5]
        .iter()
        .map(|s| {
            let t = s / rate;
            let grid = TimeGrid::new(0.0, t, 2).unwrap();
            let traj = evolve_master(&h, &noise, &DensityMatrix::pure(&phi), &grid, 1e-13).unwrap();
            (1.0 - traj.fidelity[1]) / t
        })
        .collect();
    // Second-order Richardson on halving steps.
    let r1 = 2.0 * slopes[1] - slopes[0];
    let r2 = 2.0 * slopes[2] - slopes[1];
    let extrapolated = (4.0 * r2 - r1) / 3.0;
    assert!((extrapolated - rate).abs() <= 1e-3 * rate, "{extrapolated} vs {rate}");
}
