//! Generalized fluctuation-dissipation checks and the inverse pipelines that
//! rebuild covariances and Fisher information from response data.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::covariance::{self, QfiDiagnostics, QfiMethod, QfiResult};
use crate::error::{QfiError, Result};
use crate::linalg::{self, ln_abs_expm1, CMatrix};
use crate::monotone::{qfi_to_covariance_function, KernelFunction, MonotoneFunction};
use crate::response::{
    self, covariance_lines, response_lines, AdmittanceSpectrum, CovarianceKind, LineKind, ResponseKind,
    SpectralLineSet,
};
use crate::spectral::ThermalState;

/// Maximum relative deviation accepted by [`FdtReport::passes`].
pub const FDT_TOLERANCE: f64 = 1e-10;
/// Response lines below this fraction of the strongest line have no ratio.
pub const SIGNIFICANCE_FLOOR: f64 = 1e-12;
/// Truncation estimates above this fraction of the value raise a flag.
pub const TRUNCATION_FLAG: f64 = 1e-6;
/// Quadrature spacing in units of `η`.
pub const SPACING_PER_ETA: f64 = 0.25;

/// `k(e^{-α}) / (1 - e^{-α})` for any kernel; zero where `k` vanishes.
pub fn kernel_coefficient(k: &impl KernelFunction, alpha: f64) -> Result<f64> {
    let ln_num = k.ln_eval_log(-alpha);
    if ln_num == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if alpha == 0.0 {
        return Err(QfiError::SingularCoefficient);
    }
    Ok((ln_num - ln_abs_expm1(-alpha)).exp().copysign(alpha))
}

/// `ħω k(e^{-βħω}) / (1 - e^{-βħω})`, continued to `k(1)/β` at `ω = 0`.
pub fn energy_weight(k: &impl KernelFunction, beta: f64, hbar: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return k.ln_eval_log(0.0).exp() / beta;
    }
    hbar * omega * kernel_coefficient(k, beta * hbar * omega).unwrap_or(0.0)
}

/// Predicted `C_ω / Φ_ω`: `ħω c_f` for currents, `-iħ c_f` for displacements.
pub fn predicted_ratio(f: &MonotoneFunction, kind: ResponseKind, beta: f64, hbar: f64, omega: f64) -> Result<C64> {
    match kind {
        ResponseKind::Current => Ok(C64::new(energy_weight(f, beta, hbar, omega), 0.0)),
        ResponseKind::Displacement => {
            let c = kernel_coefficient(f, beta * hbar * omega)?;
            Ok(C64::new(0.0, -hbar * c))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdtLine {
    pub omega: f64,
    pub covariance: C64,
    pub response: C64,
    pub predicted: Option<C64>,
    /// `|C/Φ - predicted| / |predicted|`
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdtReport {
    pub function: String,
    pub kind: ResponseKind,
    pub beta: f64,
    pub hbar: f64,
    pub lines: Vec<FdtLine>,
    /// Lines whose response weight is below the significance floor.
    pub insignificant: Vec<FdtLine>,
    pub max_deviation: f64,
}

impl FdtReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol
    }
}

/// Compares covariance and response line weights line by line.
pub fn check_gfdt(
    ts: &ThermalState,
    f: &MonotoneFunction,
    a_mu: &CMatrix,
    a_nu: &CMatrix,
    kind: ResponseKind,
) -> Result<FdtReport> {
    let cov = match kind {
        ResponseKind::Current => {
            let h = ts.hamiltonian();
            let j_mu = response::current_operator(h, a_mu, ts.hbar())?;
            let j_nu = response::current_operator(h, a_nu, ts.hbar())?;
            covariance_lines(ts, f, &j_mu, &j_nu, CovarianceKind::Current)?
        }
        ResponseKind::Displacement => covariance_lines(ts, f, a_mu, a_nu, CovarianceKind::Displacement)?,
    };
    let resp = response_lines(ts, kind, a_mu, a_nu)?;
    let floor = SIGNIFICANCE_FLOOR * resp.max_weight();
    let mut lines = Vec::new();
    let mut insignificant = Vec::new();
    let mut max_deviation: f64 = 0.0;
    for (c, r) in cov.lines.iter().zip(&resp.lines) {
        let mut line = FdtLine {
            omega: r.omega,
            covariance: c.weight,
            response: r.weight,
            predicted: predicted_ratio(f, kind, ts.beta(), ts.hbar(), r.omega).ok(),
            deviation: None,
        };
        match line.predicted {
            Some(p) if r.weight.norm() > floor && floor > 0.0 => {
                let dev = (c.weight / r.weight - p).norm() / p.norm();
                max_deviation = max_deviation.max(dev);
                line.deviation = Some(dev);
                lines.push(line);
            }
            _ => insignificant.push(line),
        }
    }
    Ok(FdtReport {
        function: f.name(),
        kind,
        beta: ts.beta(),
        hbar: ts.hbar(),
        lines,
        insignificant,
        max_deviation,
    })
}

/// Response input: exact lines or a sampled spectrum.
#[derive(Debug, Clone, Copy)]
pub enum ResponseData<'a> {
    Lines(&'a SpectralLineSet),
    Spectrum(&'a AdmittanceSpectrum),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconstructionMethod {
    DiscreteSum,
    Quadrature,
}

impl ReconstructionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReconstructionMethod::DiscreteSum => "discrete-sum",
            ReconstructionMethod::Quadrature => "quadrature",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralForm {
    /// Integral over all frequencies, valid for every `f`.
    Full,
    /// Standard-`f` form over `ω ≥ 0`.
    Simplified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureDiagnostics {
    pub points: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub eta: f64,
    pub truncation_error: f64,
    pub discretization_error: f64,
    /// Contribution of the `[0, ω_min]` gap filled by linear extrapolation.
    pub low_frequency_fill: f64,
    pub truncation_flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub etas: [f64; 3],
    pub values: [C64; 3],
    /// Largest misfit of the three values to a straight line in `η`.
    pub linear_fit_residual: f64,
    /// Difference of the two Richardson estimates.
    pub richardson_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub value: C64,
    pub method: ReconstructionMethod,
    pub form: IntegralForm,
    pub error_estimate: f64,
    pub quadrature: Option<QuadratureDiagnostics>,
    pub extrapolation: Option<Extrapolation>,
}

impl ReconstructionResult {
    fn exact(value: C64, form: IntegralForm) -> Self {
        Self {
            value,
            method: ReconstructionMethod::DiscreteSum,
            form,
            error_estimate: 0.0,
            quadrature: None,
            extrapolation: None,
        }
    }
}

fn aligned<'a>(a: &'a SpectralLineSet, b: &'a SpectralLineSet) -> Result<()> {
    if a.lines.len() != b.lines.len() {
        return Err(QfiError::DimensionMismatch {
            what: "second line set".into(),
            expected: a.lines.len(),
            found: b.lines.len(),
        });
    }
    let scale = a.max_frequency().max(1.0);
    for (x, y) in a.lines.iter().zip(&b.lines) {
        if (x.omega - y.omega).abs() > 1e-12 * scale {
            return Err(QfiError::InvalidParameter(format!(
                "line sets disagree on frequencies: {} vs {}",
                x.omega, y.omega
            )));
        }
    }
    Ok(())
}

fn same_grid(a: &AdmittanceSpectrum, b: &AdmittanceSpectrum) -> Result<()> {
    if a.grid != b.grid {
        return Err(QfiError::InvalidParameter("spectra must share one frequency grid".into()));
    }
    Ok(())
}

fn require_standard(f: &MonotoneFunction) -> Result<()> {
    if f.is_standard() {
        Ok(())
    } else {
        Err(QfiError::InvalidParameter(format!(
            "the simplified form needs a standard function, {} is not",
            f.name()
        )))
    }
}

fn check_kind(data: &ResponseData, expected: LineKind) -> Result<()> {
    if let ResponseData::Lines(l) = data {
        if l.kind != expected {
            return Err(QfiError::InvalidParameter(format!(
                "expected {expected:?} lines, got {:?}",
                l.kind
            )));
        }
    }
    Ok(())
}

/// Trapezoid rule with error estimates. Entries of `values` that are NaN
/// mark removable points and are filled from their neighbours.
fn trapezoid(grid: &[f64], values: &[C64], lower_open: bool, eta: f64, from_zero: bool) -> Result<(C64, QuadratureDiagnostics)> {
    let n = grid.len();
    if n < 3 {
        return Err(QfiError::InvalidParameter(format!(
            "quadrature needs at least 3 grid points, got {n}"
        )));
    }
    let mut v = values.to_vec();
    for k in 0..n {
        if v[k].re.is_nan() {
            v[k] = if k == 0 {
                v[1] * 2.0 - v[2]
            } else if k == n - 1 {
                v[n - 2] * 2.0 - v[n - 3]
            } else {
                let t = (grid[k] - grid[k - 1]) / (grid[k + 1] - grid[k - 1]);
                v[k - 1] * (1.0 - t) + v[k + 1] * t
            };
        }
    }
    let rule = |step: usize| -> C64 {
        let idx: Vec<usize> = (0..n).step_by(step).collect();
        let mut acc = C64::new(0.0, 0.0);
        for w in idx.windows(2) {
            acc += (v[w[0]] + v[w[1]]) * (0.5 * (grid[w[1]] - grid[w[0]]));
        }
        // A leftover point when n - 1 is odd in the coarse rule.
        let last = *idx.last().unwrap();
        if last != n - 1 {
            acc += (v[last] + v[n - 1]) * (0.5 * (grid[n - 1] - grid[last]));
        }
        acc
    };
    let mut fine = rule(1);
    let coarse = rule(2);
    let mut fill = C64::new(0.0, 0.0);
    if from_zero && grid[0] > 0.0 {
        let slope = (v[1] - v[0]) / (grid[1] - grid[0]);
        let at_zero = v[0] - slope * grid[0];
        fill = (at_zero + v[0]) * (0.5 * grid[0]);
        fine += fill;
    }
    let mut truncation = v[n - 1].norm() * grid[n - 1].abs();
    if lower_open {
        truncation += v[0].norm() * grid[0].abs();
    }
    let discretization = (fine - coarse - fill).norm() / 3.0;
    let flagged = truncation > TRUNCATION_FLAG * fine.norm();
    Ok((
        fine,
        QuadratureDiagnostics {
            points: n,
            omega_min: grid[0],
            omega_max: grid[n - 1],
            eta,
            truncation_error: truncation,
            discretization_error: discretization,
            low_frequency_fill: fill.norm(),
            truncation_flagged: flagged,
        },
    ))
}

fn quadrature_result(
    grid: &[f64],
    integrand: Vec<C64>,
    form: IntegralForm,
    eta: f64,
) -> Result<ReconstructionResult> {
    let (lower_open, from_zero) = match form {
        IntegralForm::Full => (true, false),
        IntegralForm::Simplified => (false, true),
    };
    let (value, diag) = trapezoid(grid, &integrand, lower_open, eta, from_zero)?;
    Ok(ReconstructionResult {
        value,
        method: ReconstructionMethod::Quadrature,
        form,
        error_estimate: diag.truncation_error + diag.discretization_error,
        quadrature: Some(diag),
        extrapolation: None,
    })
}

/// Points of a spectrum used by a form: all, or `ω ≥ 0` only.
fn restrict(spec: &AdmittanceSpectrum, form: IntegralForm) -> Result<Vec<usize>> {
    let idx: Vec<usize> = match form {
        IntegralForm::Full => {
            if !(spec.grid[0] < 0.0) {
                return Err(QfiError::InvalidParameter(
                    "the full form needs a grid covering negative frequencies".into(),
                ));
            }
            (0..spec.len()).collect()
        }
        IntegralForm::Simplified => (0..spec.len()).filter(|&k| spec.grid[k] >= 0.0).collect(),
    };
    Ok(idx)
}

fn current_covariance(
    munu: ResponseData,
    numu: ResponseData,
    k: &impl KernelFunction,
    beta: f64,
    hbar: f64,
    form: IntegralForm,
) -> Result<ReconstructionResult> {
    check_kind(&munu, LineKind::CurrentResponse)?;
    check_kind(&numu, LineKind::CurrentResponse)?;
    let e = |w: f64| energy_weight(k, beta, hbar, w);
    match (munu, numu) {
        (ResponseData::Lines(a), ResponseData::Lines(b)) => {
            aligned(a, b)?;
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in a.lines.iter().zip(&b.lines) {
                let sym = (x.weight + y.weight.conj()) * 0.5;
                acc += match form {
                    IntegralForm::Full => sym * e(x.omega),
                    IntegralForm::Simplified if x.omega > 0.0 => {
                        C64::new(2.0 * e(x.omega) * ((x.weight + y.weight) * 0.5).re, 0.0)
                    }
                    IntegralForm::Simplified if x.omega == 0.0 => {
                        C64::new(e(0.0) * ((x.weight + y.weight) * 0.5).re, 0.0)
                    }
                    IntegralForm::Simplified => C64::new(0.0, 0.0),
                };
            }
            Ok(ReconstructionResult::exact(acc / (2.0 * PI), form))
        }
        (ResponseData::Spectrum(a), ResponseData::Spectrum(b)) => {
            same_grid(a, b)?;
            let idx = restrict(a, form)?;
            let grid: Vec<f64> = idx.iter().map(|&i| a.grid[i]).collect();
            let integrand = idx
                .iter()
                .map(|&i| {
                    let w = a.grid[i];
                    match form {
                        IntegralForm::Full => (a.values[i] + b.values[i].conj()) * (e(w) / (2.0 * PI)),
                        IntegralForm::Simplified => {
                            C64::new(2.0 / PI * e(w) * ((a.values[i] + b.values[i]) * 0.5).re, 0.0)
                        }
                    }
                })
                .collect();
            quadrature_result(&grid, integrand, form, a.eta)
        }
        _ => Err(QfiError::InvalidParameter("mixing line sets and spectra".into())),
    }
}

fn displacement_covariance(
    munu: ResponseData,
    numu: ResponseData,
    k: &impl KernelFunction,
    beta: f64,
    hbar: f64,
    form: IntegralForm,
) -> Result<ReconstructionResult> {
    check_kind(&munu, LineKind::DisplacementResponse)?;
    check_kind(&numu, LineKind::DisplacementResponse)?;
    // NaN marks the removable ω = 0 point of the integrand.
    let c = |w: f64| kernel_coefficient(k, beta * hbar * w).unwrap_or(f64::NAN);
    let minus_i_hbar = C64::new(0.0, -hbar);
    match (munu, numu) {
        (ResponseData::Lines(a), ResponseData::Lines(b)) => {
            aligned(a, b)?;
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in a.lines.iter().zip(&b.lines) {
                let anti = (x.weight - y.weight.conj()) * 0.5;
                if anti.norm() == 0.0 && ((x.weight + y.weight) * 0.5).im == 0.0 {
                    continue;
                }
                let cw = c(x.omega);
                if cw.is_nan() {
                    // Static lines carry no response weight.
                    continue;
                }
                acc += match form {
                    IntegralForm::Full => anti * minus_i_hbar * cw,
                    IntegralForm::Simplified if x.omega > 0.0 => {
                        C64::new(2.0 * hbar * cw * ((x.weight + y.weight) * 0.5).im, 0.0)
                    }
                    IntegralForm::Simplified => C64::new(0.0, 0.0),
                };
            }
            Ok(ReconstructionResult::exact(acc / (2.0 * PI), form))
        }
        (ResponseData::Spectrum(a), ResponseData::Spectrum(b)) => {
            same_grid(a, b)?;
            let idx = restrict(a, form)?;
            let grid: Vec<f64> = idx.iter().map(|&i| a.grid[i]).collect();
            let integrand = idx
                .iter()
                .map(|&i| {
                    let cw = c(a.grid[i]);
                    if cw.is_nan() {
                        return C64::new(f64::NAN, f64::NAN);
                    }
                    match form {
                        IntegralForm::Full => (a.values[i] - b.values[i].conj()) * minus_i_hbar * (cw / (2.0 * PI)),
                        IntegralForm::Simplified => {
                            C64::new(2.0 * hbar / PI * cw * ((a.values[i] + b.values[i]) * 0.5).im, 0.0)
                        }
                    }
                })
                .collect();
            quadrature_result(&grid, integrand, form, a.eta)
        }
        _ => Err(QfiError::InvalidParameter("mixing line sets and spectra".into())),
    }
}

/// `⟨J_μ, J_ν⟩^f = ∫dω/2π ħω c_f(βħω) (χ_{μν}(ω) + χ_{νμ}(ω)*)`, or the
/// standard-`f` form `(2/π)∫₀^∞ ħω c_f Re χ^s`.
pub fn covariance_from_admittance(
    chi_munu: ResponseData,
    chi_numu: ResponseData,
    f: &MonotoneFunction,
    beta: f64,
    hbar: f64,
    form: IntegralForm,
) -> Result<ReconstructionResult> {
    check_temperature(beta, hbar)?;
    if form == IntegralForm::Simplified {
        require_standard(f)?;
    }
    current_covariance(chi_munu, chi_numu, f, beta, hbar, form)
}

/// `⟨ΔA_μ, ΔA_ν⟩^f = ∫dω/2π (-iħ) c_f(βħω) (χ̃_{μν}(ω) - χ̃_{νμ}(ω)*)`, or
/// the standard-`f` form `(2ħ/π)∫₀^∞ c_f Im χ̃^s`.
///
/// Static components of `A` (matrix elements between degenerate levels)
/// produce no response and are not recovered; see [`dynamic_part`].
pub fn covariance_from_susceptibility(
    chi_munu: ResponseData,
    chi_numu: ResponseData,
    f: &MonotoneFunction,
    beta: f64,
    hbar: f64,
    form: IntegralForm,
) -> Result<ReconstructionResult> {
    check_temperature(beta, hbar)?;
    if form == IntegralForm::Simplified {
        require_standard(f)?;
    }
    displacement_covariance(chi_munu, chi_numu, f, beta, hbar, form)
}

/// Fisher information of the unitary model generated by `B` from the
/// self-susceptibility of `B`:
/// `J = (2ħ/π)∫₀^∞ (1 - e^{-βħω})/f(e^{-βħω}) Im χ̃(ω) dω`. Standard `f` only.
pub fn qfi_from_susceptibility(
    chi: ResponseData,
    f: &MonotoneFunction,
    beta: f64,
    hbar: f64,
) -> Result<ReconstructionResult> {
    check_temperature(beta, hbar)?;
    require_standard(f)?;
    let g = qfi_to_covariance_function(f);
    let form = match chi {
        ResponseData::Lines(_) => IntegralForm::Full,
        ResponseData::Spectrum(_) => IntegralForm::Simplified,
    };
    let mut r = displacement_covariance(chi, chi, &g, beta, hbar, form)?;
    if let Some(q) = &r.quadrature {
        // Integrand growth beyond the cutoff for f(0) = 0.
        if q.truncation_flagged && f.at_zero() == 0.0 {
            log::warn!(
                "{}: truncation estimate {:e} dominates; the integrand does not decay for f(0) = 0",
                f.name(),
                q.truncation_error
            );
        }
    }
    r.value = C64::new(r.value.re, 0.0);
    Ok(r)
}

fn check_temperature(beta: f64, hbar: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(QfiError::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(QfiError::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
    }
    Ok(())
}

/// Wraps a reconstructed Fisher information as a [`QfiResult`].
pub fn reconstructed_qfi(r: &ReconstructionResult, f: &MonotoneFunction, model: &str) -> QfiResult {
    QfiResult {
        matrix: CMatrix::from_element(1, 1, C64::new(r.value.re, 0.0)),
        function: f.name(),
        model: model.into(),
        method: QfiMethod::Reconstructed,
        diagnostics: QfiDiagnostics {
            error_estimate: Some(r.error_estimate),
            ..Default::default()
        },
    }
}

/// Runs `run` at `η`, `η/2`, `η/4` and removes the linear `η` dependence.
pub fn extrapolate_eta(eta: f64, run: impl Fn(f64) -> Result<ReconstructionResult>) -> Result<ReconstructionResult> {
    if !(eta > 0.0) {
        return Err(QfiError::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let etas = [eta, eta / 2.0, eta / 4.0];
    let r0 = run(etas[0])?;
    let r1 = run(etas[1])?;
    let r2 = run(etas[2])?;
    let values = [r0.value, r1.value, r2.value];
    let first = values[1] * 2.0 - values[0];
    let second = values[2] * 2.0 - values[1];
    // Least-squares line through the three points.
    let mean_eta = etas.iter().sum::<f64>() / 3.0;
    let mean_v = values.iter().sum::<C64>() / 3.0;
    let sxx: f64 = etas.iter().map(|e| (e - mean_eta).powi(2)).sum();
    let sxy: C64 = etas.iter().zip(&values).map(|(e, v)| (v - mean_v) * (e - mean_eta)).sum();
    let slope = sxy / sxx;
    let residual = etas
        .iter()
        .zip(&values)
        .map(|(e, v)| (v - (mean_v + slope * (e - mean_eta))).norm())
        .fold(0.0, f64::max);
    let spread = (second - first).norm();
    Ok(ReconstructionResult {
        value: second,
        method: r2.method,
        form: r2.form,
        error_estimate: spread + r2.error_estimate,
        quadrature: r2.quadrature,
        extrapolation: Some(Extrapolation {
            etas,
            values,
            linear_fit_residual: residual,
            richardson_spread: spread,
        }),
    })
}

/// Uniform grid with spacing `SPACING_PER_ETA · η` up to `cutoff`,
/// symmetric about zero or starting at zero.
pub fn quadrature_grid(cutoff: f64, eta: f64, symmetric: bool) -> Vec<f64> {
    let h = SPACING_PER_ETA * eta;
    let n = (cutoff / h).ceil() as usize;
    let pos = (0..=n).map(|k| k as f64 * h);
    if symmetric {
        (1..=n).rev().map(|k| -(k as f64) * h).chain(pos).collect()
    } else {
        pos.collect()
    }
}

/// Default reconstruction cutoff: `1.5 max|ω_k| + 1`.
pub fn default_cutoff(ts: &ThermalState) -> f64 {
    let e = ts.energies();
    let w = (e[e.len() - 1] - e[0]) / ts.hbar();
    response::DEFAULT_GRID_SPAN * w + 1.0
}

/// Matrix elements of `A` between levels closer than the Bohr-line
/// collapse tolerance (energy basis), rotated back.
pub fn static_part(ts: &ThermalState, a: &CMatrix) -> CMatrix {
    let e = ts.energies();
    let tol = ts.default_collapse_tol() * ts.hbar();
    let at = ts.in_energy_basis(a);
    let kept = CMatrix::from_fn(at.nrows(), at.ncols(), |i, j| {
        if (e[i] - e[j]).abs() <= tol {
            at[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    ts.rho().from_eigenbasis(&kept)
}

/// `A` minus its [`static_part`]: the component seen by the susceptibility.
pub fn dynamic_part(ts: &ThermalState, a: &CMatrix) -> CMatrix {
    a - static_part(ts, a)
}

/// Perturbation `A` whose current equals the logarithmic derivative of
/// `e^{-iθB} ρ e^{iθB}`: `⟨i|A|j⟩ = -ħ ⟨i|B|j⟩ / (E_ij c_f(βE_ij))` with
/// `E_ij = E_i - E_j`; diagonal elements are zero.
pub fn solve_probe_field(ts: &ThermalState, f: &MonotoneFunction, b: &CMatrix) -> Result<CMatrix> {
    ts.rho().check_dim("generator", b)?;
    let e = ts.energies();
    let tol = ts.default_collapse_tol() * ts.hbar();
    let bt = ts.in_energy_basis(b);
    let small = 1e-12 * linalg::max_abs(b).max(1.0);
    let n = e.len();
    let mut at = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j || bt[(i, j)].norm() <= small {
                continue;
            }
            let eij = e[i] - e[j];
            if eij.abs() <= tol {
                return Err(QfiError::UnreachableDirection { i, j });
            }
            let c = kernel_coefficient(f, ts.beta() * eij)?;
            at[(i, j)] = bt[(i, j)] * (-ts.hbar() / (eij * c));
        }
    }
    Ok(ts.rho().from_eigenbasis(&at))
}

/// `max|J_A - L|` for a probe field `A` of the unitary model generated by `B`.
pub fn probe_field_residual(ts: &ThermalState, f: &MonotoneFunction, b: &CMatrix, a: &CMatrix) -> Result<f64> {
    let j = response::current_operator(ts.hamiltonian(), a, ts.hbar())?;
    let drho = covariance::unitary_tangent(ts.rho(), b);
    let l = covariance::logarithmic_derivative(ts.rho(), f, &drho)?;
    Ok(linalg::max_abs(&(j - l)))
}

/// Reconstructs `⟨J_μ, J_ν⟩^f` or `⟨ΔA_μ, ΔA_ν⟩^f` from spectra synthesized
/// at `η, η/2, η/4` on a fixed quadrature grid, extrapolated to `η → 0`.
pub fn reconstruct_synthesized(
    ts: &ThermalState,
    f: &MonotoneFunction,
    a_mu: &CMatrix,
    a_nu: &CMatrix,
    kind: ResponseKind,
    form: IntegralForm,
    eta: f64,
) -> Result<ReconstructionResult> {
    let munu = response_lines(ts, kind, a_mu, a_nu)?;
    let numu = response_lines(ts, kind, a_nu, a_mu)?;
    let cutoff = default_cutoff(ts);
    let symmetric = form == IntegralForm::Full;
    extrapolate_eta(eta, |e| {
        let grid = quadrature_grid(cutoff, e, symmetric);
        let broaden = |l: &SpectralLineSet| match kind {
            ResponseKind::Current => response::admittance(l, e, &grid),
            ResponseKind::Displacement => response::dynamical_susceptibility(l, e, &grid),
        };
        let (x, y) = (broaden(&munu)?, broaden(&numu)?);
        let (x, y) = (ResponseData::Spectrum(&x), ResponseData::Spectrum(&y));
        match kind {
            ResponseKind::Current => covariance_from_admittance(x, y, f, ts.beta(), ts.hbar(), form),
            ResponseKind::Displacement => covariance_from_susceptibility(x, y, f, ts.beta(), ts.hbar(), form),
        }
    })
}

/// Fisher information of the unitary model generated by `B` from its
/// self-susceptibility synthesized at `η, η/2, η/4` and extrapolated.
/// `cutoff` defaults to [`default_cutoff`].
pub fn qfi_synthesized(
    ts: &ThermalState,
    f: &MonotoneFunction,
    b: &CMatrix,
    eta: f64,
    cutoff: Option<f64>,
) -> Result<QfiResult> {
    let lines = response_lines(ts, ResponseKind::Displacement, b, b)?;
    let cutoff = cutoff.unwrap_or_else(|| default_cutoff(ts));
    let r = extrapolate_eta(eta, |e| {
        let grid = quadrature_grid(cutoff, e, false);
        let chi = response::dynamical_susceptibility(&lines, e, &grid)?;
        qfi_from_susceptibility(ResponseData::Spectrum(&chi), f, ts.beta(), ts.hbar())
    })?;
    Ok(reconstructed_qfi(&r, f, "unitary, synthesized susceptibility"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{generalized_covariance, qfi_unitary_model};
    use crate::linalg::{pauli_x, pauli_z};
    use crate::spectral::{thermal_state, HermitianOperator};

    fn qubit(gap: f64, beta: f64) -> ThermalState {
        thermal_state(&HermitianOperator::from_real_diagonal(&[0.0, gap]), beta).unwrap()
    }

    #[test]
    fn sld_ratio_is_half_coth() {
        let ts = qubit(1.0, 1.0);
        let r = check_gfdt(&ts, &MonotoneFunction::sld(), &pauli_x(), &pauli_x(), ResponseKind::Current).unwrap();
        assert_eq!(r.lines.len(), 2);
        for l in &r.lines {
            let expect = l.omega * 0.5 / (0.5 * l.omega).tanh();
            assert!((l.predicted.unwrap().re - expect).abs() < 1e-14);
        }
        assert!(r.passes(FDT_TOLERANCE), "{}", r.max_deviation);
    }

    #[test]
    fn displacement_fdt_qubit() {
        let ts = qubit(0.8, 2.0);
        let r = check_gfdt(&ts, &MonotoneFunction::wigner_yanase(), &pauli_x(), &pauli_x(), ResponseKind::Displacement)
            .unwrap();
        assert_eq!(r.lines.len(), 2);
        assert!(r.passes(FDT_TOLERANCE), "{}", r.max_deviation);
    }

    #[test]
    fn classical_limit_coefficients_agree() {
        let alpha = 1e-6;
        for f in MonotoneFunction::catalog() {
            let c = kernel_coefficient(&f, alpha).unwrap();
            assert!((alpha * c - 1.0).abs() < 1e-4, "{f}");
        }
    }

    #[test]
    fn zero_spectrum_reconstructs_zero() {
        let grid = quadrature_grid(3.0, 0.1, true);
        let zero = AdmittanceSpectrum::new(
            grid.clone(),
            vec![C64::new(0.0, 0.0); grid.len()],
            0.1,
            response::Provenance::File,
        )
        .unwrap();
        let z = ResponseData::Spectrum(&zero);
        let r = covariance_from_admittance(z, z, &MonotoneFunction::sld(), 1.0, 1.0, IntegralForm::Full).unwrap();
        assert_eq!(r.value, C64::new(0.0, 0.0));
        let r = qfi_from_susceptibility(z, &MonotoneFunction::bkm(), 1.0, 1.0).unwrap();
        assert_eq!(r.value, C64::new(0.0, 0.0));
    }

    #[test]
    fn qubit_discrete_and_quadrature() {
        let ts = qubit(1.0, 1.0);
        let x = pauli_x();
        let f = MonotoneFunction::sld();
        let j = response::current_operator(ts.hamiltonian(), &x, 1.0).unwrap();
        let direct = generalized_covariance(ts.rho(), &f, &j, &j, false).unwrap();
        let lines = response_lines(&ts, ResponseKind::Current, &x, &x).unwrap();
        let l = ResponseData::Lines(&lines);
        for form in [IntegralForm::Full, IntegralForm::Simplified] {
            let r = covariance_from_admittance(l, l, &f, 1.0, 1.0, form).unwrap();
            assert!((r.value - direct).norm() < 1e-14, "{form:?}");
        }
        let r = reconstruct_synthesized(&ts, &f, &x, &x, ResponseKind::Current, IntegralForm::Simplified, 1e-2).unwrap();
        assert!((r.value - direct).norm() / direct.norm() < 1e-3, "{} vs {direct}", r.value);
    }

    #[test]
    fn qubit_qfi_from_lines() {
        let ts = qubit(1.0, 1.0);
        let x = pauli_x();
        let lines = response_lines(&ts, ResponseKind::Displacement, &x, &x).unwrap();
        for f in [MonotoneFunction::sld(), MonotoneFunction::bkm(), MonotoneFunction::wigner_yanase()] {
            let direct = qfi_unitary_model(ts.rho(), &f, &x).unwrap().scalar();
            let r = qfi_from_susceptibility(ResponseData::Lines(&lines), &f, 1.0, 1.0).unwrap();
            assert!((r.value.re - direct).abs() < 1e-14, "{f}");
        }
        assert!(qfi_from_susceptibility(ResponseData::Lines(&lines), &MonotoneFunction::rld(), 1.0, 1.0).is_err());
    }

    #[test]
    fn sld_qfi_weight_is_two_tanh() {
        let g = qfi_to_covariance_function(&MonotoneFunction::sld());
        for alpha in [0.1, 1.0, 7.0] {
            let h = kernel_coefficient(&g, alpha).unwrap();
            assert!((h - 2.0 * (0.5 * alpha).tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn probe_field_qubit() {
        let ts = qubit(1.5, 0.9);
        let f = MonotoneFunction::sld();
        let a = solve_probe_field(&ts, &f, &pauli_x()).unwrap();
        assert!(probe_field_residual(&ts, &f, &pauli_x(), &a).unwrap() < 1e-14);
        // SLD: E c_f(βE) = (E/2) coth(βE/2)
        let expect = (0.5 * 0.9 * 1.5f64).tanh() * 2.0 / 1.5;
        assert!((a[(0, 1)].norm() - expect).abs() < 1e-14);
        let zero = solve_probe_field(&ts, &f, &pauli_z()).unwrap();
        assert_eq!(linalg::max_abs(&zero), 0.0);
    }

    #[test]
    fn probe_field_degenerate_is_unreachable() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 0.0, 1.0]);
        let ts = thermal_state(&h, 1.0).unwrap();
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new(if i + j == 1 { 1.0 } else { 0.0 }, 0.0));
        assert!(matches!(
            solve_probe_field(&ts, &MonotoneFunction::sld(), &b),
            Err(QfiError::UnreachableDirection { .. })
        ));
    }
}
