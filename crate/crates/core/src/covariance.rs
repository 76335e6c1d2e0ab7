//! The superoperator `K^f_ρ`, generalized covariances, logarithmic
//! derivatives and quantum Fisher information matrices.
//!
//! In the eigenbasis of `ρ` the superoperator is a Schur product:
//! `⟨j|K^f(A)|i⟩ = p_i f(p_j/p_i) ⟨j|A|i⟩`. The kernel table is built from
//! log-population differences so that it never forms `p_j/p_i` directly.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{QfiError, Result};
use crate::linalg::{self, CMatrix};
use crate::monotone::{qfi_to_covariance_function, KernelFunction, MonotoneFunction};
use crate::spectral::DensityMatrix;

/// Entries of `K^f` below this are treated as underflow by the inverse.
pub const KERNEL_UNDERFLOW: f64 = 1e-300;
/// Single terms of the unitary-model sum above this abort the computation.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
/// Fisher information at or below this is "not identifiable".
pub const IDENTIFIABILITY_TOL: f64 = 1e-14;

const TANGENT_TOL: f64 = 1e-12;

fn log_kernel(rho: &DensityMatrix, g: &impl KernelFunction) -> DMatrix<f64> {
    let lp = rho.log_populations();
    let n = lp.len();
    DMatrix::from_fn(n, n, |j, i| lp[i] + g.ln_eval_log(rho.log_ratio(j, i)))
}

/// `K^f_ρ` with its kernel table cached in the eigenbasis of `ρ`.
#[derive(Debug, Clone)]
pub struct SuperoperatorKf {
    rho: DensityMatrix,
    f: MonotoneFunction,
    log_kernel: DMatrix<f64>,
    kernel: DMatrix<f64>,
}

impl SuperoperatorKf {
    pub fn new(rho: &DensityMatrix, f: &MonotoneFunction) -> Result<Self> {
        rho.check_floor()?;
        let log_kernel = log_kernel(rho, f);
        let kernel = log_kernel.map(f64::exp);
        Ok(Self {
            rho: rho.clone(),
            f: f.clone(),
            log_kernel,
            kernel,
        })
    }

    pub fn function(&self) -> &MonotoneFunction {
        &self.f
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// `k[(j, i)] = p_i f(p_j / p_i)`
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `max k / min k`
    pub fn condition_number(&self) -> f64 {
        let (lo, hi) = self
            .log_kernel
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        (hi - lo).exp()
    }

    /// Schur product with the kernel on eigenbasis matrix elements.
    pub fn apply_in_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        a.zip_map(&self.kernel, |z, k| z * k)
    }

    pub fn invert_in_eigenbasis(&self, a: &CMatrix) -> Result<CMatrix> {
        let n = self.kernel.nrows();
        for j in 0..n {
            for i in 0..n {
                let k = self.kernel[(j, i)];
                if !(k >= KERNEL_UNDERFLOW) {
                    return Err(QfiError::KernelUnderflow { i, j, value: k });
                }
            }
        }
        Ok(a.zip_map(&self.kernel, |z, k| z / k))
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        self.rho.check_dim("operator", a)?;
        Ok(self.rho.from_eigenbasis(&self.apply_in_eigenbasis(&self.rho.in_eigenbasis(a))))
    }

    pub fn invert(&self, a: &CMatrix) -> Result<CMatrix> {
        self.rho.check_dim("operator", a)?;
        let inv = self.invert_in_eigenbasis(&self.rho.in_eigenbasis(a))?;
        Ok(self.rho.from_eigenbasis(&inv))
    }

    /// `tr(X† K(Y))` on uncentered operators.
    pub fn inner(&self, x: &CMatrix, y: &CMatrix) -> Result<C64> {
        self.rho.check_dim("X", x)?;
        self.rho.check_dim("Y", y)?;
        let xt = self.rho.in_eigenbasis(x);
        let yt = self.rho.in_eigenbasis(y);
        Ok(eigenbasis_inner(&xt, &self.kernel, &yt))
    }
}

/// `Σ_{ji} conj(X_ji) k_ji Y_ji` in fixed row-major order.
fn eigenbasis_inner(xt: &CMatrix, kernel: &DMatrix<f64>, yt: &CMatrix) -> C64 {
    let n = xt.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += xt[(j, i)].conj() * yt[(j, i)] * kernel[(j, i)];
        }
    }
    acc
}

pub fn apply_kf(k: &SuperoperatorKf, a: &CMatrix) -> Result<CMatrix> {
    k.apply(a)
}

pub fn invert_kf(k: &SuperoperatorKf, a: &CMatrix) -> Result<CMatrix> {
    k.invert(a)
}

/// `X - tr(ρX)`.
pub fn centered(rho: &DensityMatrix, x: &CMatrix) -> CMatrix {
    let mean = rho.expectation(x);
    x - linalg::identity(x.nrows()) * mean
}

/// `⟨X, Y⟩^f = tr(X† K^f(Y))`, optionally on the centered operators.
pub fn generalized_covariance(
    rho: &DensityMatrix,
    f: &MonotoneFunction,
    x: &CMatrix,
    y: &CMatrix,
    center: bool,
) -> Result<C64> {
    rho.check_dim("X", x)?;
    rho.check_dim("Y", y)?;
    let k = SuperoperatorKf::new(rho, f)?;
    if center {
        k.inner(&centered(rho, x), &centered(rho, y))
    } else {
        k.inner(x, y)
    }
}

/// Tangent direction `i[ρ, B]` of the unitary model `e^{-iθB} ρ e^{iθB}`.
pub fn unitary_tangent(rho: &DensityMatrix, b: &CMatrix) -> CMatrix {
    linalg::commutator(rho.matrix(), b) * linalg::I
}

/// A traceless Hermitian `∂ρ/∂θ` with its logarithmic derivative.
#[derive(Debug, Clone)]
pub struct TangentVector {
    pub derivative: CMatrix,
    pub logarithmic_derivative: CMatrix,
}

impl TangentVector {
    pub fn new(k: &SuperoperatorKf, drho: &CMatrix) -> Result<Self> {
        check_tangent(k.rho(), drho)?;
        Ok(Self {
            derivative: drho.clone(),
            logarithmic_derivative: k.invert(drho)?,
        })
    }
}

fn check_tangent(rho: &DensityMatrix, drho: &CMatrix) -> Result<()> {
    rho.check_dim("tangent", drho)?;
    let scale = linalg::max_abs(drho).max(1.0);
    let tr = linalg::trace(drho).norm();
    if tr > TANGENT_TOL * scale {
        return Err(QfiError::InvalidParameter(format!(
            "state derivative must be traceless, trace = {tr:e}"
        )));
    }
    let herm = linalg::max_abs(&(drho - drho.adjoint()));
    if herm > TANGENT_TOL * scale {
        return Err(QfiError::InvalidParameter(format!(
            "state derivative must be Hermitian, defect = {herm:e}"
        )));
    }
    Ok(())
}

/// `L = (K^f)^{-1}(∂ρ/∂θ)`
pub fn logarithmic_derivative(rho: &DensityMatrix, f: &MonotoneFunction, drho: &CMatrix) -> Result<CMatrix> {
    check_tangent(rho, drho)?;
    SuperoperatorKf::new(rho, f)?.invert(drho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMethod {
    Direct,
    UnitaryModel,
    Reconstructed,
}

impl QfiMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            QfiMethod::Direct => "direct",
            QfiMethod::UnitaryModel => "unitary-model",
            QfiMethod::Reconstructed => "reconstructed",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QfiDiagnostics {
    /// `max k / min k` of the inverted kernel.
    pub condition_number: Option<f64>,
    /// Max deviation between the two evaluation paths.
    pub two_path_residual: Option<f64>,
    /// Largest single term of a spectral sum.
    pub max_term: Option<f64>,
    /// Error estimate for reconstructed values.
    pub error_estimate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct QfiResult {
    pub matrix: CMatrix,
    pub function: String,
    pub model: String,
    pub method: QfiMethod,
    pub diagnostics: QfiDiagnostics,
}

impl QfiResult {
    /// `J[0][0]` of a one-parameter model.
    pub fn scalar(&self) -> f64 {
        self.matrix[(0, 0)].re
    }

    pub fn max_imaginary(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }
}

/// `[J]_{μν} = ⟨L_μ, L_ν⟩^f`, cross-checked against `tr(∂_μρ (K^f)^{-1} ∂_νρ)`.
pub fn qfi_matrix(rho: &DensityMatrix, f: &MonotoneFunction, drho: &[CMatrix]) -> Result<QfiResult> {
    let k = SuperoperatorKf::new(rho, f)?;
    let m = drho.len();
    let mut d_eig = Vec::with_capacity(m);
    let mut l_eig = Vec::with_capacity(m);
    for d in drho {
        check_tangent(rho, d)?;
        let dt = rho.in_eigenbasis(d);
        l_eig.push(k.invert_in_eigenbasis(&dt)?);
        d_eig.push(dt);
    }
    let covariance_form = CMatrix::from_fn(m, m, |mu, nu| eigenbasis_inner(&l_eig[mu], k.kernel(), &l_eig[nu]));
    let trace_form = CMatrix::from_fn(m, m, |mu, nu| (&d_eig[mu] * &l_eig[nu]).trace());
    let residual = linalg::max_abs(&(&covariance_form - &trace_form));
    Ok(QfiResult {
        matrix: covariance_form,
        function: f.name(),
        model: format!("{m}-parameter tangent model"),
        method: QfiMethod::Direct,
        diagnostics: QfiDiagnostics {
            condition_number: Some(k.condition_number()),
            two_path_residual: Some(residual),
            ..Default::default()
        },
    })
}

/// Fisher information of `e^{-iθB} ρ e^{iθB}` at `θ = 0` as the covariance
/// of `B` with weight `(x-1)²/f(x)`:
/// `J = Σ_{ij} p_j g(p_i/p_j) |⟨i|B|j⟩|²`.
pub fn qfi_unitary_model(rho: &DensityMatrix, f: &MonotoneFunction, b: &CMatrix) -> Result<QfiResult> {
    rho.check_floor()?;
    rho.check_dim("generator", b)?;
    let g = qfi_to_covariance_function(f);
    let lp = rho.log_populations();
    let bt = rho.in_eigenbasis(b);
    let n = lp.len();
    let mut total = 0.0;
    let mut max_term: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let b2 = bt[(i, j)].norm_sqr();
            if i == j || b2 == 0.0 {
                continue;
            }
            let term = (lp[j] + g.ln_eval_log(rho.log_ratio(i, j))).exp() * b2;
            if !(term <= DIVERGENCE_LIMIT) {
                return Err(QfiError::Divergence {
                    i,
                    j,
                    term,
                    limit: DIVERGENCE_LIMIT,
                });
            }
            max_term = max_term.max(term);
            total += term;
        }
    }
    Ok(QfiResult {
        matrix: CMatrix::from_element(1, 1, C64::new(total, 0.0)),
        function: f.name(),
        model: "unitary".into(),
        method: QfiMethod::UnitaryModel,
        diagnostics: QfiDiagnostics {
            max_term: Some(max_term),
            ..Default::default()
        },
    })
}

/// Locally unbiased estimator attaining the Cramér-Rao bound.
#[derive(Debug, Clone)]
pub struct OptimalEstimator {
    /// `O = L / ⟨L, L⟩^f`
    pub operator: CMatrix,
    pub fisher: f64,
    /// `1/J`
    pub bound: f64,
}

pub fn optimal_estimator(rho: &DensityMatrix, f: &MonotoneFunction, drho: &CMatrix) -> Result<OptimalEstimator> {
    let k = SuperoperatorKf::new(rho, f)?;
    let tangent = TangentVector::new(&k, drho)?;
    let fisher = k
        .inner(&tangent.logarithmic_derivative, &tangent.logarithmic_derivative)?
        .re;
    if !(fisher > IDENTIFIABILITY_TOL) {
        return Err(QfiError::NotIdentifiable { value: fisher });
    }
    Ok(OptimalEstimator {
        operator: tangent.logarithmic_derivative / C64::new(fisher, 0.0),
        fisher,
        bound: 1.0 / fisher,
    })
}
