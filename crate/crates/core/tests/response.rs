mod common;

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qfi_core::linalg::{commutator, CMatrix};
use qfi_core::response::{
    admittance, broadened, covariance_lines, current_operator, kubo_canonical_form, response_function_time,
    response_lines, uniform_grid, AdmittanceSpectrum, CovarianceKind, Provenance, ResponseKind,
};
use qfi_core::spectral::ThermalState;
use qfi_core::MonotoneFunction;

/// `(1/iħ) tr(ρ [A, X])` by direct matrix products.
fn equal_time(ts: &ThermalState, a: &CMatrix, x: &CMatrix) -> C64 {
    (ts.rho().matrix() * commutator(a, x)).trace() / C64::new(0.0, ts.hbar())
}

/// `exp(-iHt/ħ) X exp(iHt/ħ)` conjugated the Heisenberg way.
fn heisenberg(ts: &ThermalState, x: &CMatrix, t: f64) -> CMatrix {
    let d = ts.decomposition();
    let phases = CMatrix::from_fn(x.nrows(), x.nrows(), |i, j| {
        if i == j {
            C64::from_polar(1.0, d.eigenvalues[i] * t / ts.hbar())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let u = &d.eigenvectors * phases * d.eigenvectors.adjoint();
    &u * x * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kubo_identity(seed in any::<u64>(), n in 2usize..=6, b in 0usize..3) {
        let mut r = common::rng(seed);
        let ts = common::thermal(&mut r, n, common::BETAS[b]);
        let (a_mu, a_nu) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        let j_mu = current_operator(ts.hamiltonian(), &a_mu, 1.0).unwrap();
        let j_nu = current_operator(ts.hamiltonian(), &a_nu, 1.0).unwrap();
        let times: Vec<f64> = (0..20).map(|k| 0.37 * k as f64).collect();
        let commutator_form = response_function_time(&ts, &a_nu, &j_mu, &times).unwrap();
        for (t, phi) in times.iter().zip(&commutator_form) {
            let canonical = kubo_canonical_form(&ts, &j_mu, &j_nu, *t).unwrap();
            prop_assert!((phi - canonical).norm() <= 1e-10 * phi.norm().max(1.0), "t = {t}: {phi} vs {canonical}");
        }
    }

    #[test]
    fn time_domain_matches_matrix_evolution(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let ts = common::thermal(&mut r, n, 1.0);
        let (a, x) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        let times = [0.0, 0.5, 1.7, 4.0];
        let phi = response_function_time(&ts, &a, &x, &times).unwrap();
        for (t, v) in times.iter().zip(&phi) {
            let direct = equal_time(&ts, &a, &heisenberg(&ts, &x, *t));
            prop_assert!((v - direct).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn lines_transform_back_to_time_domain(seed in any::<u64>(), n in 2usize..=6, b in 0usize..3) {
        let mut r = common::rng(seed);
        let ts = common::thermal(&mut r, n, common::BETAS[b]);
        let (a_mu, a_nu) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        for kind in [ResponseKind::Current, ResponseKind::Displacement] {
            let measured = match kind {
                ResponseKind::Current => current_operator(ts.hamiltonian(), &a_mu, 1.0).unwrap(),
                ResponseKind::Displacement => a_mu.clone(),
            };
            let lines = response_lines(&ts, kind, &a_mu, &a_nu).unwrap();
            let direct = equal_time(&ts, &a_nu, &measured);
            prop_assert!((lines.sum_rule() - direct).norm() <= 1e-10 * direct.norm().max(1.0));
            for t in [0.3, 2.0, 9.0] {
                let from_lines: C64 = lines.lines.iter()
                    .map(|l| l.weight / (2.0 * PI) * C64::from_polar(1.0, -l.omega * t))
                    .sum();
                let want = equal_time(&ts, &a_nu, &heisenberg(&ts, &measured, t));
                prop_assert!((from_lines - want).norm() <= 1e-10 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn covariance_lines_obey_detailed_balance(seed in any::<u64>(), n in 2usize..=6, b in 0usize..3) {
        let mut r = common::rng(seed);
        let beta = common::BETAS[b];
        let ts = common::thermal(&mut r, n, beta);
        let x = common::hermitian(&mut r, n);
        for f in common::functions() {
            let lines = covariance_lines(&ts, &f, &x, &x, CovarianceKind::Displacement).unwrap();
            for l in lines.lines.iter().filter(|l| l.omega > 0.0) {
                let Some(rev) = lines.weight_at(-l.omega, 1e-12) else { continue };
                if l.weight.norm() < 1e-200 {
                    continue;
                }
                let a = beta * l.omega;
                let want = (-a).exp() * f.eval(a.exp()) / f.eval((-a).exp());
                let got = rev.re / l.weight.re;
                prop_assert!(common::rel(got, want) < 1e-12, "{} at {}: {got} vs {want}", f.name(), l.omega);
            }
        }
    }

    #[test]
    fn covariance_sum_rule_is_equal_time_covariance(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let ts = common::thermal(&mut r, n, 1.0);
        let (x, y) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        for f in common::functions() {
            let lines = covariance_lines(&ts, &f, &x, &y, CovarianceKind::Displacement).unwrap();
            let direct = qfi_core::generalized_covariance(ts.rho(), &f, &x, &y, true).unwrap();
            prop_assert!((lines.sum_rule() - direct).norm() <= 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn csv_round_trip(values in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40), eta in 1e-4f64..1.0) {
        let grid = uniform_grid(-2.0, 3.0, values.len());
        let v: Vec<C64> = values.iter().map(|&(a, b)| C64::new(a, b)).collect();
        let s = AdmittanceSpectrum::new(grid.clone(), v.clone(), eta, Provenance::Synthesized).unwrap();
        let back = AdmittanceSpectrum::from_csv(&s.to_csv(), Provenance::File).unwrap();
        prop_assert_eq!(back.grid, grid);
        prop_assert_eq!(back.values, v);
    }
}

#[test]
fn broadening_error_is_first_order() {
    let mut r = common::rng(7);
    let ts = common::thermal(&mut r, 4, 1.0);
    let a = common::hermitian(&mut r, 4);
    let lines = response_lines(&ts, ResponseKind::Current, &a, &a).unwrap();
    let omega = 3.0;
    assert!(lines.lines.iter().all(|l| (l.omega - omega).abs() > 1.0));
    let exact: C64 = lines.lines.iter().map(|l| l.weight / (2.0 * PI) / C64::new(0.0, l.omega - omega)).sum();
    let etas = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let errs: Vec<f64> = etas.iter().map(|&e| (broadened(&lines, e, omega) - exact).norm()).collect();
    for k in 1..etas.len() {
        let slope = (errs[k - 1] / errs[k]).ln() / (etas[k - 1] / etas[k]).ln();
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }
}

#[test]
fn admittance_needs_current_lines() {
    let mut r = common::rng(3);
    let ts = common::thermal(&mut r, 3, 1.0);
    let a = common::hermitian(&mut r, 3);
    let lines = response_lines(&ts, ResponseKind::Displacement, &a, &a).unwrap();
    assert!(admittance(&lines, 0.1, &[0.0, 1.0]).is_err());
    let f = MonotoneFunction::sld();
    assert!(covariance_lines(&ts, &f, &a, &a, CovarianceKind::Current).is_ok());
}
