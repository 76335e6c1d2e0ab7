//! Wigner-Yanase-Dyson skew information, metric adjusted skew information,
//! the uncertainty quantity `U_α` and the harmonic-oscillator oracle.

use num_complex::Complex64 as C64;

use crate::covariance::{centered, qfi_unitary_model};
use crate::error::{QfiError, Result};
use crate::linalg::{self, CMatrix};
use crate::monotone::{wyd, MonotoneFunction};
use crate::spectral::{DensityMatrix, HermitianOperator, ThermalState};

/// Zero-limit values at or below this make `I_f` undefined.
const F_ZERO_TOL: f64 = 1e-14;
const RADICAND_TOL: f64 = 1e-12;
/// Slack of [`yanagi_check`].
pub const YANAGI_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum SkewFamily {
    Alpha(f64),
    Function(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkewMethod {
    DirectTrace,
    ViaQfi,
    ViaSusceptibility,
}

impl SkewMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SkewMethod::DirectTrace => "direct-trace",
            SkewMethod::ViaQfi => "via-qfi",
            SkewMethod::ViaSusceptibility => "via-susceptibility",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewResult {
    pub value: f64,
    pub family: SkewFamily,
    pub method: SkewMethod,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(QfiError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `⟨(ΔA)²⟩`
pub fn variance(rho: &DensityMatrix, a: &CMatrix) -> Result<f64> {
    rho.check_dim("A", a)?;
    let d = centered(rho, a);
    Ok(rho.expectation(&(d.adjoint() * &d)).re)
}

/// `I_α = -½ tr([ρ^α, A][ρ^{1-α}, A])`
pub fn wyd_skew_direct(rho: &DensityMatrix, alpha: f64, a: &CMatrix) -> Result<SkewResult> {
    check_alpha(alpha)?;
    rho.check_dim("A", a)?;
    let c1 = linalg::commutator(&rho.power(alpha), a);
    let c2 = linalg::commutator(&rho.power(1.0 - alpha), a);
    let value = -0.5 * linalg::trace(&(c1 * c2)).re;
    Ok(SkewResult {
        value,
        family: SkewFamily::Alpha(alpha),
        method: SkewMethod::DirectTrace,
    })
}

/// `I_α = (α(1-α)/2) J^{f_α}` of the unitary model generated by `A`.
pub fn wyd_skew_via_qfi(rho: &DensityMatrix, alpha: f64, a: &CMatrix) -> Result<SkewResult> {
    check_alpha(alpha)?;
    let j = qfi_unitary_model(rho, &wyd(alpha)?, a)?.scalar();
    Ok(SkewResult {
        value: 0.5 * alpha * (1.0 - alpha) * j,
        family: SkewFamily::Alpha(alpha),
        method: SkewMethod::ViaQfi,
    })
}

/// `I_f = (f(0)/2) J^f`, defined only when `f(0) > 0`.
pub fn metric_adjusted_skew(rho: &DensityMatrix, f: &MonotoneFunction, a: &CMatrix) -> Result<SkewResult> {
    let f0 = f.at_zero();
    if !(f0 > F_ZERO_TOL) {
        return Err(QfiError::SkewUndefined { name: f.name() });
    }
    let j = qfi_unitary_model(rho, f, a)?.scalar();
    Ok(SkewResult {
        value: 0.5 * f0 * j,
        family: SkewFamily::Function(f.name()),
        method: SkewMethod::ViaQfi,
    })
}

/// `U_α = sqrt(V² - (V - I_α)²)` with `V = ⟨(ΔA)²⟩`.
pub fn uncertainty_quantity(rho: &DensityMatrix, alpha: f64, a: &CMatrix) -> Result<f64> {
    let v = variance(rho, a)?;
    let i = wyd_skew_direct(rho, alpha, a)?.value;
    uncertainty_from_parts(v, i)
}

fn uncertainty_from_parts(v: f64, i: f64) -> Result<f64> {
    // V² - (V - I)² = I (2V - I) avoids cancellation for small I.
    let radicand = i * (2.0 * v - i);
    if radicand < -RADICAND_TOL * v.abs().max(1.0).powi(2) {
        return Err(QfiError::InternalConsistency(format!(
            "negative radicand {radicand:e} in U_alpha (variance {v:e}, skew {i:e})"
        )));
    }
    Ok(radicand.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct YanagiReport {
    pub alpha: f64,
    /// `U_α(A) U_α(B)`
    pub lhs: f64,
    /// `α(1-α) |tr(ρ[A, B])|²`
    pub rhs: f64,
    pub satisfied: bool,
    pub gap: f64,
}

pub fn yanagi_check(rho: &DensityMatrix, alpha: f64, a: &CMatrix, b: &CMatrix) -> Result<YanagiReport> {
    let ua = uncertainty_quantity(rho, alpha, a)?;
    let ub = uncertainty_quantity(rho, alpha, b)?;
    let comm = rho.expectation(&linalg::commutator(a, b));
    let lhs = ua * ub;
    let rhs = alpha * (1.0 - alpha) * comm.norm_sqr();
    Ok(YanagiReport {
        alpha,
        lhs,
        rhs,
        satisfied: lhs >= rhs - YANAGI_SLACK,
        gap: lhs - rhs,
    })
}

/// Harmonic oscillator truncated to `levels` Fock states.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    pub mass: f64,
    pub omega: f64,
    pub beta: f64,
    pub hbar: f64,
    pub levels: usize,
}

/// Largest admissible `p_{N-1}/p_0`.
pub const TRUNCATION_RATIO: f64 = 1e-14;
/// Target `p_{N-1}/p_0` of the default truncation.
pub const DEFAULT_TAIL: f64 = 1e-16;

impl OscillatorSpec {
    /// Truncation chosen so the highest kept level has relative population
    /// at most `1e-16`.
    pub fn new(mass: f64, omega: f64, beta: f64, hbar: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("omega", omega), ("beta", beta), ("hbar", hbar)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(QfiError::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let levels = Self::default_levels(beta * hbar * omega);
        Ok(Self {
            mass,
            omega,
            beta,
            hbar,
            levels,
        })
    }

    pub fn default_levels(alpha: f64) -> usize {
        let n = 1.0 + (-DEFAULT_TAIL.ln() / alpha).ceil();
        (n as usize).max(2)
    }

    pub fn with_levels(mut self, levels: usize) -> Result<Self> {
        let suggested = Self::default_levels(self.alpha());
        if levels < 2 || (-self.alpha() * (levels - 1) as f64).exp() > TRUNCATION_RATIO {
            return Err(QfiError::TruncationInadequate { n: levels, suggested });
        }
        self.levels = levels;
        Ok(self)
    }

    /// `βħω`
    pub fn alpha(&self) -> f64 {
        self.beta * self.hbar * self.omega
    }

    pub fn annihilation(&self) -> CMatrix {
        let n = self.levels;
        CMatrix::from_fn(n, n, |i, j| {
            if j == i + 1 {
                C64::new((j as f64).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `x = sqrt(ħ/2mω)(a + a†)`
    pub fn position(&self) -> CMatrix {
        let a = self.annihilation();
        (&a + a.adjoint()) * C64::new((self.hbar / (2.0 * self.mass * self.omega)).sqrt(), 0.0)
    }

    /// `p = i sqrt(ħmω/2)(a† - a)`
    pub fn momentum(&self) -> CMatrix {
        let a = self.annihilation();
        (a.adjoint() - &a) * C64::new(0.0, (0.5 * self.hbar * self.mass * self.omega).sqrt())
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        let e: Vec<f64> = (0..self.levels)
            .map(|n| self.hbar * self.omega * (n as f64 + 0.5))
            .collect();
        HermitianOperator::from_real_diagonal(&e)
    }

    /// Thermal state with the population floor lowered to zero, since the
    /// truncation deliberately keeps levels down to `1e-16`.
    pub fn thermal_state(&self) -> Result<ThermalState> {
        ThermalState::with_population_floor(&self.hamiltonian(), self.beta, self.hbar, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorOracle {
    pub alpha: f64,
    pub skew_x: f64,
    pub skew_p: f64,
    pub variance_x: f64,
    pub variance_p: f64,
    pub uncertainty_x: f64,
    pub uncertainty_p: f64,
    /// `U_α(x) U_α(p)`
    pub lhs: f64,
    /// `α(1-α) ħ²`
    pub rhs: f64,
    /// `(ħ²/4) [(1-e^{-2αa})(1-e^{-2(1-α)a})/(1-e^{-a})² - 4α(1-α)]`, `a = βħω`
    pub gap: f64,
}

/// Closed-form thermal-oscillator skew information and uncertainty values.
pub fn oscillator_oracle(spec: &OscillatorSpec, alpha: f64) -> Result<OscillatorOracle> {
    check_alpha(alpha)?;
    let a = spec.alpha();
    let one_minus = |s: f64| -(-s * a).exp_m1();
    let factor = one_minus(alpha) * one_minus(1.0 - alpha) / one_minus(1.0);
    let x_scale = spec.hbar / (2.0 * spec.mass * spec.omega);
    let p_scale = 0.5 * spec.hbar * spec.mass * spec.omega;
    let coth = 1.0 / (0.5 * a).tanh();
    let skew_x = x_scale * factor;
    let skew_p = p_scale * factor;
    let variance_x = x_scale * coth;
    let variance_p = p_scale * coth;
    let uncertainty_x = uncertainty_from_parts(variance_x, skew_x)?;
    let uncertainty_p = uncertainty_from_parts(variance_p, skew_p)?;
    let hbar2 = spec.hbar * spec.hbar;
    let reduced = one_minus(2.0 * alpha) * one_minus(2.0 - 2.0 * alpha) / one_minus(1.0).powi(2);
    Ok(OscillatorOracle {
        alpha,
        skew_x,
        skew_p,
        variance_x,
        variance_p,
        uncertainty_x,
        uncertainty_p,
        lhs: uncertainty_x * uncertainty_p,
        rhs: alpha * (1.0 - alpha) * hbar2,
        gap: 0.25 * hbar2 * (reduced - 4.0 * alpha * (1.0 - alpha)),
    })
}
