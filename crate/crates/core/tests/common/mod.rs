//! Seeded random systems shared by the integration suites.

#![allow(dead_code)]

use num_complex::Complex64 as C64;
use qfi_core::linalg::CMatrix;
use qfi_core::monotone::wyd;
use qfi_core::spectral::{decompose, DensityMatrix, HermitianOperator, ThermalState};
use qfi_core::MonotoneFunction;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

pub const BETAS: [f64; 3] = [0.1, 1.0, 10.0];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Entries uniform in the unit square, Hermitian part.
pub fn hermitian(rng: &mut StdRng, n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn unitary(rng: &mut StdRng, n: usize) -> CMatrix {
    let h = HermitianOperator::new(hermitian(rng, n)).unwrap();
    decompose(&h).unwrap().eigenvectors
}

/// `U diag(E) U†` with `E` uniform in `[0, 1]`.
pub fn hamiltonian(rng: &mut StdRng, n: usize) -> HermitianOperator {
    let e: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(0.0..1.0), 0.0)).collect();
    let u = unitary(rng, n);
    let m = &u * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(e)) * u.adjoint();
    HermitianOperator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

pub fn thermal(rng: &mut StdRng, n: usize, beta: f64) -> ThermalState {
    ThermalState::new(&hamiltonian(rng, n), beta, 1.0).unwrap()
}

/// Full-rank state with populations at least `min_pop` in a random basis.
pub fn density(rng: &mut StdRng, n: usize, min_pop: f64) -> DensityMatrix {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let s: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| min_pop + (1.0 - n as f64 * min_pop) * x / s).collect();
    let u = unitary(rng, n);
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) });
    let m = &u * d * u.adjoint();
    DensityMatrix::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Random traceless Hermitian direction.
pub fn traceless(rng: &mut StdRng, n: usize) -> CMatrix {
    let mut h = hermitian(rng, n);
    let t = h.trace() / n as f64;
    for i in 0..n {
        h[(i, i)] -= t;
    }
    h
}

/// The six catalog functions plus `wyd(0.3)`.
pub fn functions() -> Vec<MonotoneFunction> {
    let mut fs = MonotoneFunction::catalog();
    fs.push(wyd(0.3).unwrap());
    fs
}

pub fn standard_functions() -> Vec<MonotoneFunction> {
    functions().into_iter().filter(|f| f.is_standard()).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
