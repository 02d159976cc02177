use num_complex::Complex64;
use proptest::prelude::*;
use scb_core::fock::{
    b_element, condensate_state, number_state, op_b, op_n1, CMatrix, LadderMoments, SectorOperator,
};
use scb_core::lindblad::{
    decay_constant, decay_constant_meanfield_analytic, decay_constant_qubit_analytic, decay_ratio, dissipator,
    NoiseParams,
};
use scb_core::meanfield::{gp_to_phase_number, phase_number_to_gp, OrderParameter};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cp_noise() -> impl Strategy<Value = NoiseParams> {
    (0.0f64..3.0, 0.0f64..3.0, 0.0f64..1.0, -3.2f64..3.2).prop_map(|(g, d, frac, phase)| {
        let r = frac * (g * d).sqrt();
        NoiseParams::new(g, d, Complex64::from_polar(r, phase)).unwrap()
    })
}

fn hermitian(dim: usize, entries: &[(f64, f64)]) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |i, j| {
        let (re, im) = entries[(i * dim + j) % entries.len()];
        c(re, im)
    });
    (&a + a.adjoint()) * c(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn b_lowers_island1_by_one(total in 1usize..50, frac in 0.0f64..=1.0) {
        let n1 = ((total as f64) * frac).round() as usize;
        let b = op_b(total).unwrap();
        let out = b.apply(&number_state(n1, total).unwrap()).unwrap();
        for (k, z) in out.iter().enumerate() {
            let want = if n1 > 0 && k == n1 - 1 { ((n1 * (total - n1 + 1)) as f64).sqrt() } else { 0.0 };
            prop_assert!((z - c(want, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn commutator_of_b_is_n2_minus_n1(total in 1usize..40) {
        // [a₁a₂†, a₁†a₂] = n₂ − n₁ in the sector.
        let b = op_b(total).unwrap();
        let bd = b.adjoint();
        let comm = b.compose(&bd).unwrap().matrix() - bd.compose(&b).unwrap().matrix();
        let n1 = op_n1(total).unwrap();
        for k in 0..=total {
            let want = total as f64 - 2.0 * k as f64;
            prop_assert!((comm[(k, k)] - c(want, 0.0)).norm() <= 1e-12);
            prop_assert!((n1.matrix()[(k, k)].re - k as f64).abs() == 0.0);
        }
    }

    #[test]
    fn condensate_moments_match_closed_form(total in 2usize..50, weight in 0.02f64..0.98, theta in -3.1f64..3.1) {
        let psi = OrderParameter::from_weight_phase(weight, theta).unwrap();
        let state = condensate_state(psi.psi1, psi.psi2, total).unwrap();
        let num = LadderMoments::of(&state);
        let ana = LadderMoments::condensate(weight * total as f64, total, theta);
        let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm().max(1.0);
        prop_assert!(rel(num.b, ana.b) <= 1e-10);
        prop_assert!(rel(num.b_sq, ana.b_sq) <= 1e-10);
        prop_assert!(rel(c(num.b_dag_b, 0.0), c(ana.b_dag_b, 0.0)) <= 1e-10);
        prop_assert!(rel(c(num.b_b_dag, 0.0), c(ana.b_b_dag, 0.0)) <= 1e-10);
    }

    #[test]
    fn dissipator_is_trace_free_and_hermitian(
        total in 1usize..12,
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..200),
        noise in cp_noise(),
    ) {
        let rho = hermitian(total + 1, &entries);
        let d = dissipator(&rho, &noise, &op_b(total).unwrap()).unwrap();
        let scale = rho.iter().map(|z| z.norm()).fold(1.0, f64::max) * (total * total) as f64;
        prop_assert!(d.trace().norm() <= 1e-10 * scale);
        let herm = SectorOperator::from_matrix(d).unwrap().hermiticity_error();
        prop_assert!(herm <= 1e-10 * scale);
    }

    #[test]
    fn fock_decay_matches_closed_form(total in 1u64..40, frac in 0.0f64..=1.0, noise in cp_noise()) {
        let n1 = ((total as f64) * frac).round() as u64;
        let numeric = decay_constant(&number_state(n1 as usize, total as usize).unwrap(), &noise).unwrap();
        let analytic = decay_constant_qubit_analytic(n1, total, &noise).unwrap();
        prop_assert!((numeric - analytic).abs() <= 1e-9 * analytic.abs().max(1.0));
    }

    #[test]
    fn condensate_decay_matches_closed_form(total in 1u64..40, weight in 0.0f64..=1.0, theta in -3.1f64..3.1, noise in cp_noise()) {
        let psi = OrderParameter::from_weight_phase(weight, theta).unwrap();
        let state = condensate_state(psi.psi1, psi.psi2, total as usize).unwrap();
        let numeric = decay_constant(&state, &noise).unwrap();
        let analytic = decay_constant_meanfield_analytic(weight * total as f64, total, theta, &noise).unwrap();
        prop_assert!((numeric - analytic).abs() <= 1e-9 * analytic.abs().max(1.0));
    }

    #[test]
    fn decay_ratio_is_homogeneous(n_bar in 1u64..50, extra in 1u64..500, scale in 0.01f64..100.0, noise in cp_noise()) {
        prop_assume!(noise.delta > 1e-3);
        let total = n_bar + extra;
        let base = decay_ratio(n_bar, total, &noise, 0.3).unwrap();
        let scaled = decay_ratio(n_bar, total, &noise.scaled(scale), 0.3).unwrap();
        prop_assert!((base.ratio - scaled.ratio).abs() <= 1e-12 * base.ratio.abs().max(1.0));
    }

    #[test]
    fn phase_number_round_trip(total in 2usize..200, weight in 0.01f64..0.99, theta in -3.1f64..3.1) {
        let n_bar = total as u64 / 2;
        let psi = OrderParameter::from_weight_phase(weight, theta).unwrap();
        let s = gp_to_phase_number(&psi, total, n_bar).unwrap();
        prop_assert!((s.theta - theta).abs() <= 1e-12);
        let back = phase_number_to_gp(&s, total, n_bar).unwrap();
        prop_assert!((back.psi1.norm_sqr() - weight).abs() <= 1e-12);
        let back_s = gp_to_phase_number(&back, total, n_bar).unwrap();
        prop_assert!((back_s.n - s.n).abs() <= 1e-9 && (back_s.theta - s.theta).abs() <= 1e-12);
    }
}

#[test]
fn ladder_element_is_symmetric_about_half_filling() {
    for total in 1..=30 {
        for k in 1..=total {
            assert_eq!(b_element(k, total), b_element(total + 1 - k, total));
        }
    }
}
