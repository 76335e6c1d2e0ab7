//! Small dense complex helpers shared by the engine.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `V† M V`: matrix elements of `m` in the basis given by the columns of `v`.
pub fn to_basis(v: &CMatrix, m: &CMatrix) -> CMatrix {
    v.adjoint() * m * v
}

/// `V M V†`: inverse of [`to_basis`].
pub fn from_basis(v: &CMatrix, m: &CMatrix) -> CMatrix {
    v * m * v.adjoint()
}

pub fn from_real_diagonal(d: &[f64]) -> CMatrix {
    let n = d.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    )
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    )
}

pub fn pauli_z() -> CMatrix {
    from_real_diagonal(&[1.0, -1.0])
}

/// `log|e^u - 1|`, accurate for every finite nonzero `u`.
pub fn ln_abs_expm1(u: f64) -> f64 {
    if u > 1.0 {
        u + (-(-u).exp()).ln_1p()
    } else if u > 0.0 {
        u.exp_m1().ln()
    } else {
        (-u.exp_m1()).ln()
    }
}

/// `log(e^a + e^b)` without overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}
