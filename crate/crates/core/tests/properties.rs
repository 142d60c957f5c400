use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qfi_core::models::{
    final_state, probe_hamiltonian, two_qubit_hamiltonian, SingleQubitParams, TwoQubitParams,
};
use qfi_core::oracle::{
    concurrence, qfi_finite_difference, qfi_finite_difference_extrapolated,
    qfi_single_qubit_analytic, sensitivity_theory, two_qubit_ground_qfi, two_qubit_spectrum,
};
use qfi_core::quantum::{
    eig_hermitian, exp_step, propagate, HermitianOperator, PureState, TimeDependentHamiltonian,
};
use qfi_core::ramsey::{assignment_distribution, ramsey_probability};

fn hermitian(dim: usize, entries: &[f64]) -> HermitianOperator {
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        m[(i, i)] = Complex64::new(entries[k], 0.0);
        k += 1;
        for j in i + 1..dim {
            let z = Complex64::new(entries[k], entries[k + 1]);
            k += 2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(m).unwrap()
}

fn arb_hermitian(dim: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec(-20.0..20.0f64, dim * dim).prop_map(move |v| hermitian(dim, &v))
}

fn arb_state(dim: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec(-1.0..1.0f64, 2 * dim)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(move |v| {
            PureState::new(v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()).unwrap()
        })
}

fn det(m: &DMatrix<Complex64>) -> Complex64 {
    m.clone().lu().determinant()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn step_propagators_are_unitary(h in arb_hermitian(2), g in arb_hermitian(4), dt in 1e-4..0.05f64) {
        prop_assert!(exp_step(&h, dt).unitarity_defect() < 1e-10);
        prop_assert!(exp_step(&g, dt).unitarity_defect() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectral_decomposition_reconstructs(h in arb_hermitian(4)) {
        let es = eig_hermitian(&h).unwrap();
        prop_assert!(es.reconstruct().distance(&h) < 1e-9 * (1.0 + h.matrix().norm()));
        prop_assert!(es.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        // each eigenvalue is a root of the characteristic polynomial
        let scale = h.matrix().norm().max(1.0);
        for &l in &es.eigenvalues {
            let shifted = h.matrix() - DMatrix::<Complex64>::identity(4, 4) * Complex64::new(l, 0.0);
            prop_assert!(det(&shifted).norm() < 1e-8 * scale.powi(4));
        }
    }

    #[test]
    fn constant_hamiltonian_conserves_energy(h in arb_hermitian(4), psi in arb_state(4), t in 0.01..1.0f64) {
        let e0 = psi.expectation(&h).unwrap();
        let td = TimeDependentHamiltonian::constant(h.clone());
        let out = propagate(&psi, &td, 0.0, t, td.default_time_step()).unwrap();
        prop_assert!((out.expectation(&h).unwrap() - e0).abs() < 1e-8 * (1.0 + h.matrix().norm()));
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn global_phase_leaves_qfi_unchanged(theta in 0.05..3.1f64, beta in 0.1..6.1f64) {
        let plain = qfi_finite_difference(|b| final_state(theta, b), beta, 1e-4).unwrap().value;
        let phased = qfi_finite_difference(
            |b| Ok(final_state(theta, b)?.with_global_phase(Complex64::from_polar(1.0, 3.0 * b))),
            beta,
            1e-4,
        ).unwrap().value;
        prop_assert!((plain - phased).abs() < 1e-6);
    }

    #[test]
    fn extrapolated_difference_matches_closed_form(theta in 0.05..3.1f64, beta in 0.1..6.1f64) {
        let f = qfi_finite_difference_extrapolated(|b| final_state(theta, b), beta, 1e-3).unwrap().value;
        prop_assert!((f - qfi_single_qubit_analytic(theta).value).abs() < 1e-8);
    }

    #[test]
    fn optimal_basis_saturates_the_bound(theta in 0.05..3.1f64) {
        let d = sensitivity_theory(theta, FRAC_PI_2).unwrap();
        prop_assert!((d * qfi_single_qubit_analytic(theta).value.sqrt() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_hamiltonian_is_hermitian_and_periodic(
        beta in 0.0..TAU, phi in 0.0..TAU, apar in -20.0..20.0f64, aperp in 0.0..20.0f64, wc in -5.0..5.0f64
    ) {
        let p = TwoQubitParams { beta, phi, a_par: apar, a_perp: aperp, omega_c: wc, ..TwoQubitParams::default() };
        let h = two_qubit_hamiltonian(&p).unwrap();
        let m = h.matrix();
        prop_assert!((m - m.adjoint()).norm() < 1e-12);
        let wrapped = p.at_beta((beta + TAU) % TAU);
        prop_assert!(two_qubit_hamiltonian(&wrapped).unwrap().distance(&h) < 1e-9);
    }

    #[test]
    fn probe_is_two_pi_periodic(theta in 0.0..PI, beta in 0.0..TAU) {
        let p = SingleQubitParams::default().with_angles(theta, beta);
        let h = probe_hamiltonian(&p).unwrap();
        let q = SingleQubitParams::default().with_angles(theta, (beta + TAU - 1e-13) % TAU);
        prop_assert!(probe_hamiltonian(&q).unwrap().distance(&h) < 1e-9);
    }

    #[test]
    fn in_plane_angle_does_not_matter(beta in 0.05..1.5f64, phi in 0.0..TAU) {
        let base = TwoQubitParams::default().at_beta(beta);
        let turned = TwoQubitParams { phi, ..base };
        let f0 = two_qubit_ground_qfi(&base, 1e-4).unwrap().value;
        let f1 = two_qubit_ground_qfi(&turned, 1e-4).unwrap().value;
        prop_assert!((f0 - f1).abs() < 1e-6 * f0.max(1.0));
        let c0 = concurrence(two_qubit_spectrum(&base).unwrap().ground()).unwrap();
        let c1 = concurrence(two_qubit_spectrum(&turned).unwrap().ground()).unwrap();
        prop_assert!((c0 - c1).abs() < 1e-9);
    }

    #[test]
    fn ramsey_probability_is_a_projection(theta in 0.0..PI, beta in 0.0..TAU, alpha in 0.0..PI) {
        let psi = final_state(theta, beta).unwrap();
        let phi = PureState::new(vec![
            Complex64::new((alpha / 2.0).cos(), 0.0),
            Complex64::new((alpha / 2.0).sin(), 0.0),
        ]).unwrap();
        let p = ramsey_probability(theta, beta, alpha);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((phi.fidelity(&psi).unwrap() - p).abs() < 1e-12);
    }

    #[test]
    fn assignment_mean_is_the_ratio(num in -400i64..400, den in 1i64..64) {
        let r = num as f64 / den as f64;
        let d = assignment_distribution(r);
        prop_assert!((d[0].1 + d[1].1 - 1.0).abs() < 1e-15);
        prop_assert!(d[0].1 >= 0.0 && d[1].1 >= 0.0);
        prop_assert!((d[0].0 as f64 * d[0].1 + d[1].0 as f64 * d[1].1 - r).abs() < 1e-12);
    }
}

#[test]
fn ground_branch_is_continuous_across_the_scan_grid() {
    let p = TwoQubitParams::default();
    let mut prev: Option<PureState> = None;
    for k in 0..=200 {
        let beta = 0.19 + 0.002 * k as f64;
        let g = two_qubit_spectrum(&p.at_beta(beta))
            .unwrap()
            .ground()
            .clone();
        if let Some(prev) = &prev {
            assert!(g.fidelity(prev).unwrap().sqrt() > 0.99, "beta = {beta}");
        }
        prev = Some(g);
    }
}
