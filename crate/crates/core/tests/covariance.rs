mod common;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qfi_core::covariance::{centered, qfi_matrix, qfi_unitary_model, unitary_tangent, SuperoperatorKf};
use qfi_core::linalg::{max_abs, CMatrix};
use qfi_core::monotone::{log_grid, qfi_to_covariance_function};
use qfi_core::spectral::DensityMatrix;
use qfi_core::{generalized_covariance, optimal_estimator, MonotoneFunction};

fn mixed(rho: &DensityMatrix, lambda: f64) -> DensityMatrix {
    let n = rho.dim();
    let m = rho.matrix() * C64::new(lambda, 0.0) + CMatrix::identity(n, n) * C64::new((1.0 - lambda) / n as f64, 0.0);
    DensityMatrix::new(m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_paths_agree(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let drho = [common::traceless(&mut r, n), common::traceless(&mut r, n)];
        for f in common::functions() {
            let q = qfi_matrix(&rho, &f, &drho).unwrap();
            let scale = max_abs(&q.matrix).max(1.0);
            prop_assert!(q.diagnostics.two_path_residual.unwrap() <= 1e-10 * scale, "{}", f.name());
            prop_assert!(max_abs(&(&q.matrix - q.matrix.adjoint())) <= 1e-10 * scale);
        }
    }

    #[test]
    fn unitary_model_matches_tangent_model(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let b = common::hermitian(&mut r, n);
        let tangent = unitary_tangent(&rho, &b);
        for f in common::functions() {
            let direct = qfi_matrix(&rho, &f, &[tangent.clone()]).unwrap().scalar();
            let unitary = qfi_unitary_model(&rho, &f, &b).unwrap().scalar();
            prop_assert!((direct - unitary).abs() <= 1e-10 * unitary.abs().max(1.0), "{}: {direct} vs {unitary}", f.name());
        }
    }

    #[test]
    fn dual_function_conjugates_covariance(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let (x, y) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        for f in common::functions() {
            let a = generalized_covariance(&rho, &f, &x, &y, true).unwrap();
            let b = generalized_covariance(&rho, &f.dual(), &x, &y, true).unwrap();
            prop_assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1.0), "{}", f.name());
        }
    }

    #[test]
    fn standard_covariance_is_real_and_positive(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let (x, y) = (common::hermitian(&mut r, n), common::hermitian(&mut r, n));
        for f in common::standard_functions() {
            let xy = generalized_covariance(&rho, &f, &x, &y, true).unwrap();
            let xx = generalized_covariance(&rho, &f, &x, &x, true).unwrap();
            prop_assert!(xy.im.abs() <= 1e-12 * xy.norm().max(1.0));
            prop_assert!(xx.re >= 0.0 && xx.im.abs() <= 1e-14);
        }
    }

    #[test]
    fn sld_information_is_smallest(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let b = common::hermitian(&mut r, n);
        let sld = qfi_unitary_model(&rho, &MonotoneFunction::sld(), &b).unwrap().scalar();
        let wy = qfi_unitary_model(&rho, &MonotoneFunction::wigner_yanase(), &b).unwrap().scalar();
        let harmonic = qfi_unitary_model(&rho, &MonotoneFunction::harmonic(), &b).unwrap().scalar();
        prop_assert!(sld <= wy * (1.0 + 1e-12));
        for f in common::standard_functions() {
            let j = qfi_unitary_model(&rho, &f, &b).unwrap().scalar();
            prop_assert!(j >= sld * (1.0 - 1e-12) && j <= harmonic * (1.0 + 1e-12), "{}", f.name());
        }
    }

    #[test]
    fn depolarizing_never_increases_information(seed in any::<u64>(), n in 2usize..=5) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let b = common::hermitian(&mut r, n);
        for f in common::functions() {
            let mut prev = 0.0;
            for k in 1..=10 {
                let state = mixed(&rho, k as f64 / 10.0);
                let j = qfi_matrix(&state, &f, &[unitary_tangent(&state, &b)]).unwrap().scalar();
                prop_assert!(j >= prev * (1.0 - 1e-10), "{} at {k}: {j} < {prev}", f.name());
                prev = j;
            }
        }
    }

    #[test]
    fn inverse_undoes_kernel(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.02);
        let a = common::hermitian(&mut r, n) + common::hermitian(&mut r, n) * C64::new(0.0, 1.0);
        for f in common::functions() {
            let k = SuperoperatorKf::new(&rho, &f).unwrap();
            let back = k.invert(&k.apply(&a).unwrap()).unwrap();
            prop_assert!(max_abs(&(back - &a)) <= 1e-10 * max_abs(&a), "{}", f.name());
        }
    }

    #[test]
    fn classical_model_is_function_independent(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = common::rng(seed);
        let w: Vec<f64> = (0..n).map(|_| 0.05 + rand::RngExt::random::<f64>(&mut r)).collect();
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        let dp: Vec<f64> = {
            let raw: Vec<f64> = (0..n).map(|_| rand::RngExt::random_range(&mut r, -1.0..1.0)).collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            raw.iter().map(|x| x - mean).collect()
        };
        let classical: f64 = p.iter().zip(&dp).map(|(p, d)| d * d / p).sum();
        let rho = DensityMatrix::diagonal(&p).unwrap();
        let drho = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(dp[i], 0.0) } else { C64::new(0.0, 0.0) });
        for f in common::functions() {
            let j = qfi_matrix(&rho, &f, &[drho.clone()]).unwrap().scalar();
            prop_assert!(common::rel(j, classical) < 1e-12, "{}", f.name());
        }
    }

    #[test]
    fn cramer_rao_bound(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = common::rng(seed);
        let rho = common::density(&mut r, n, 0.01);
        let drho = common::traceless(&mut r, n);
        for f in common::functions() {
            let opt = optimal_estimator(&rho, &f, &drho).unwrap();
            let own = generalized_covariance(&rho, &f, &opt.operator, &opt.operator, true).unwrap().re;
            prop_assert!((own * opt.fisher - 1.0).abs() < 1e-10, "{}: {}", f.name(), own * opt.fisher);
            let unbiased = (&drho * &opt.operator).trace();
            prop_assert!((unbiased - C64::new(1.0, 0.0)).norm() < 1e-10);
            for _ in 0..100 {
                let x = centered(&rho, &common::hermitian(&mut r, n));
                let t = (&drho * &x).trace();
                if t.norm() < 1e-3 {
                    continue;
                }
                let o = x / t;
                let var = generalized_covariance(&rho, &f, &o, &o, true).unwrap().re;
                prop_assert!(var * opt.fisher - 1.0 >= -1e-10, "{}", f.name());
            }
        }
    }
}

#[test]
fn sld_weight_below_wigner_yanase_weight() {
    let sld = qfi_to_covariance_function(&MonotoneFunction::sld());
    let wy = qfi_to_covariance_function(&MonotoneFunction::wigner_yanase());
    for x in log_grid(1e-6, 1e6, 200) {
        assert!(sld.eval(x) <= wy.eval(x) * (1.0 + 1e-12), "{x}");
    }
}

#[test]
fn kernel_rejects_wrong_dimensions() {
    let rho = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
    let x = CMatrix::zeros(3, 3);
    let e = generalized_covariance(&rho, &MonotoneFunction::sld(), &x, &x, false).unwrap_err();
    assert!(e.to_string().contains('3'), "{e}");
}

#[test]
fn traced_tangent_is_rejected() {
    let rho = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
    let d = CMatrix::identity(2, 2);
    assert!(qfi_matrix(&rho, &MonotoneFunction::sld(), &[d]).is_err());
}
