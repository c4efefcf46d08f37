//! Property and cross-oracle suites on random inputs.

mod common;

use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use qbattery_core::dynamics::{evolve, steady_state, trace_distance};
use qbattery_core::eur::{self, ObservableSet};
use qbattery_core::model::{
    initial_state, liouvillian, steady_state_resonance_analytic, ChargingParams,
};
use qbattery_core::qla::{
    self, eig_hermitian, hermitize, kron, max_abs, partial_trace, unvec_col, vec_col, vn_entropy,
    CMatrix, C64, LogBase, Subsystem,
};
use qbattery_core::workext::{
    battery_energy_from_joint, ergotropy_closed_form, ergotropy_generic, exergy, work_report,
};

fn arb_complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn arb_matrix2() -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec(arb_complex(), 4)
        .prop_map(|v| CMatrix::from_row_slice(2, 2, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(a in arb_matrix2(), b in arb_matrix2(),
                          c in arb_matrix2(), d in arb_matrix2()) {
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn kron_bilinear(a in arb_matrix2(), b in arb_matrix2(), c in arb_matrix2(),
                     s in -2.0..2.0f64) {
        let scale = C64::new(s, 0.0);
        let lhs = kron(&(&a * scale + &b), &c);
        let rhs = kron(&a, &c) * scale + kron(&b, &c);
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }
}

#[test]
fn partial_trace_preserves_trace_both_ways() {
    let mut rng = rng(11);
    for _ in 0..200 {
        let rho = random_density_matrix(&mut rng, 4);
        for keep in [Subsystem::Charger, Subsystem::Battery] {
            let reduced = partial_trace(&rho, keep).unwrap();
            assert!((reduced.trace() - rho.trace()).norm() < 1e-12);
        }
    }
}

#[test]
fn entropy_invariant_under_unitary_conjugation() {
    let mut rng = rng(12);
    for _ in 0..50 {
        let rho = random_density_matrix(&mut rng, 4);
        let u = random_unitary(&mut rng, 4);
        let rotated = &u * &rho * u.adjoint();
        let s0 = vn_entropy(&rho, LogBase::Two).unwrap();
        let s1 = vn_entropy(&rotated, LogBase::Two).unwrap();
        assert!((s0 - s1).abs() < 1e-9);
    }
}

#[test]
fn density_eigenvalues_sum_to_one() {
    let mut rng = rng(13);
    for _ in 0..100 {
        let rho = random_density_matrix(&mut rng, 4);
        let spectrum = eig_hermitian(&rho).unwrap();
        let sum: f64 = spectrum.eigenvalues.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
        // and the reconstruction really is the input matrix
        let rebuilt = &spectrum.eigenvectors
            * CMatrix::from_diagonal(&DVector::from_vec(
                spectrum.eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect(),
            ))
            * spectrum.eigenvectors.adjoint();
        assert!(max_abs(&(rebuilt - rho)) < 1e-10);
        let gram = spectrum.eigenvectors.adjoint() * &spectrum.eigenvectors;
        assert!(max_abs(&(gram - qla::identity(4))) < 1e-10);
    }
}

#[test]
fn liouvillian_preserves_hermiticity_and_trace() {
    let mut rng = rng(14);
    let mut p = ChargingParams::resonance(2.0, 1.5);
    p.delta_a = 0.3;
    p.delta_b = 0.3;
    let lv = liouvillian(&p);
    for _ in 0..100 {
        let rho = random_hermitian(&mut rng, 4);
        let image = unvec_col(&(&lv * vec_col(&rho)), 4);
        assert!(image.trace().norm() < 1e-12);
        assert!(max_abs(&(image.clone() - hermitize(&image))) < 1e-12);
    }
}

#[test]
fn analytic_steady_state_grid_agreement() {
    // 5x5 grid of (k, l) in [0.5, 4]^2
    for k in qbattery_core::sweep::linspace(0.5, 4.0, 5) {
        for l in qbattery_core::sweep::linspace(0.5, 4.0, 5) {
            let numeric = steady_state(&ChargingParams::resonance(k, l)).unwrap();
            let analytic = steady_state_resonance_analytic(k, l).unwrap();
            assert!(
                max_abs(&(numeric - analytic)) < 1e-8,
                "disagreement at k={k} l={l}"
            );
        }
    }
}

#[test]
fn ergotropy_routes_agree_on_random_states() {
    let mut rng = rng(15);
    for _ in 0..200 {
        let rho = random_density_matrix(&mut rng, 4);
        let reduced = partial_trace(&rho, Subsystem::Battery).unwrap();
        let closed = ergotropy_closed_form(&rho, 1.0);
        let generic = ergotropy_generic(&reduced, 1.0).unwrap();
        assert!((closed - generic).abs() < 1e-10);
    }
}

#[test]
fn ergotropy_below_energy_ceiling() {
    let mut rng = rng(16);
    for _ in 0..200 {
        let rho = random_density_matrix(&mut rng, 4);
        let w_e = ergotropy_closed_form(&rho, 1.0);
        let e_b = battery_energy_from_joint(&rho, 1.0);
        assert!(w_e <= e_b + 1e-9);
    }
    // equality iff the battery's ground population vanishes
    let mut excited = CMatrix::zeros(4, 4);
    excited[(2, 2)] = C64::new(1.0, 0.0);
    assert!((ergotropy_closed_form(&excited, 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn passive_state_tie_breaking_is_irrelevant() {
    // degenerate spectrum: any ordering of equal populations gives W_e = 0
    let mixed = qla::identity(2) * C64::new(0.5, 0.0);
    assert_eq!(ergotropy_generic(&mixed, 1.0).unwrap(), 0.0);
}

#[test]
fn exergy_window_on_charging_trajectories() {
    for (f, j) in [(2.0, 2.0), (2.0, 0.5), (4.0, 2.0)] {
        let p = ChargingParams::resonance(f, j);
        let traj = evolve(&p, &initial_state(), 30.0, 1e-3, 300).unwrap();
        for rho in &traj.states {
            let report = work_report(rho, &initial_state(), &p, LogBase::E).unwrap();
            assert!(report.w_f >= -1e-9, "F={f} J={j}: W_f={}", report.w_f);
            assert!(
                report.w_f <= report.de_b + 1e-9,
                "F={f} J={j}: W_f={} > dE_B={}",
                report.w_f,
                report.de_b
            );
        }
    }
}

#[test]
fn exergy_exceeds_ergotropy_under_entropy_production_condition() {
    let mut rng = rng(17);
    let (beta, omega0) = (100.0, 1.0);
    let rho_beta = qbattery_core::model::thermal_state(beta, omega0);
    for _ in 0..200 {
        let rho_b = random_density_matrix(&mut rng, 2);
        let spectrum = eig_hermitian(&rho_b).unwrap();
        // passive state: larger population on the ground level
        let (p_small, p_large) = (spectrum.eigenvalues[0], spectrum.eigenvalues[1]);
        let passive = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(p_small, 0.0),
            C64::new(p_large, 0.0),
        ]));
        let s = |r: &CMatrix| vn_entropy(r, LogBase::E).unwrap();
        let e = |r: &CMatrix| omega0 * r[(0, 0)].re;
        let condition = s(&rho_beta) - s(&passive) > beta * (e(&rho_beta) - e(&passive));
        if condition {
            let w_f = exergy(&rho_b, beta, omega0, LogBase::E).unwrap();
            let w_e = ergotropy_generic(&rho_b, omega0).unwrap();
            assert!(w_f >= w_e - 1e-9, "W_f={w_f} < W_e={w_e}");
        }
    }
}

#[test]
fn eur_inequality_on_random_states() {
    let mut rng = rng(18);
    let pair = ObservableSet::xz();
    let triple = ObservableSet::paulis("xyz").unwrap();
    for _ in 0..300 {
        let rho = random_density_matrix(&mut rng, 4);
        for set in [&pair, &triple] {
            let report = eur::eur_report(&rho, set).unwrap();
            assert!(report.tightness >= -1e-9);
        }
    }
}

#[test]
fn eur_invariant_under_local_unitary_on_memory() {
    let mut rng = rng(19);
    let set = ObservableSet::xz();
    for _ in 0..40 {
        let rho = random_density_matrix(&mut rng, 4);
        let v = random_unitary(&mut rng, 2);
        let lifted = kron(&qla::identity(2), &v);
        let rotated = &lifted * &rho * lifted.adjoint();
        let a = eur::eur_report(&rho, &set).unwrap();
        let b = eur::eur_report(&rotated, &set).unwrap();
        assert!((a.u_l - b.u_l).abs() < 1e-9);
        assert!((a.u_r - b.u_r).abs() < 1e-9);
    }
}

#[test]
fn overlap_factor_order_independent_for_pauli_sets() {
    let orders = ["xz", "zx", "xyz", "zyx", "yxz", "xzy"];
    for labels in orders {
        let set = ObservableSet::paulis(labels).unwrap();
        assert_eq!(eur::overlap_bound_f(&set), 0.5, "order {labels}");
    }
}

#[test]
fn long_time_evolution_reaches_kernel_steady_state() {
    let p = ChargingParams::resonance(2.0, 2.0);
    let traj = evolve(&p, &initial_state(), 100.0, 1e-3, usize::MAX).unwrap();
    let rho_ss = steady_state(&p).unwrap();
    assert!(trace_distance(traj.final_state(), &rho_ss) < 1e-6);
}
