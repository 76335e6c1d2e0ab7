//! Virtual driving experiment: evolve a thermal state under
//! `H - X(t) A_ν`, read the oscillating response and fit its amplitude and
//! phase to recover `χ(ω)`.
//!
//! Evolution runs in the interaction picture of `H` with a fourth-order
//! Magnus step (two Gauss points), exponentiated through a Hermitian
//! eigendecomposition so every step is unitary to rounding.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::covariance::{QfiDiagnostics, QfiMethod, QfiResult};
use crate::error::{QfiError, Result};
use crate::fdt::{self, IntegralForm, ResponseData};
use crate::linalg::{self, CMatrix};
use crate::monotone::MonotoneFunction;
use crate::response::{self, AdmittanceSpectrum, Provenance};
use crate::spectral::ThermalState;

/// Local error bound of the step-doubling check.
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Relative amplitude change across the window that signals resonance.
pub const TREND_LIMIT: f64 = 0.1;
/// Largest phase advance `ω dt` of any interaction-picture oscillation.
pub const MAX_PHASE_STEP: f64 = 0.3;
/// Rounding floor in units of `ε √steps max|observable|`.
const ROUNDING_FACTOR: f64 = 100.0;
/// Steps between step-doubling checks.
const CHECK_EVERY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `½(1 - cos(πt/ramp))` up to `ramp`, then 1. The fit measures the
    /// undamped response, which off resonance is the `η → 0` admittance.
    HalfCosine { ramp: f64 },
    /// `e^{ηt}` for `t ≤ 0`, started at `-switch_on`. The response is
    /// exactly `Re[χ_η(ω) X₀ e^{-iωt}] e^{ηt}` with the broadened `χ_η`.
    Adiabatic { eta: f64, switch_on: f64 },
}

impl Envelope {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            Envelope::HalfCosine { ramp } => {
                if t >= ramp {
                    1.0
                } else if t <= 0.0 {
                    0.0
                } else {
                    0.5 * (1.0 - (PI * t / ramp).cos())
                }
            }
            Envelope::Adiabatic { eta, .. } => (eta * t.min(0.0)).exp(),
        }
    }
}

/// Harmonic drive `X(t) = X₀ cos(ωt) env(t)` coupled as `-X(t) A_ν`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveProtocol {
    pub perturbation: CMatrix,
    pub amplitude: f64,
    pub omega: f64,
    pub envelope: Envelope,
    /// Whole drive periods in the measurement window.
    pub window_periods: usize,
    /// Upper bound on the integrator step; `None` picks it from the spectrum.
    pub max_dt: Option<f64>,
}

impl DriveProtocol {
    /// Half-cosine ramp over 20 drive periods, 10-period window.
    pub fn half_cosine(perturbation: CMatrix, amplitude: f64, omega: f64) -> Self {
        Self {
            perturbation,
            amplitude,
            omega,
            envelope: Envelope::HalfCosine {
                ramp: 20.0 * 2.0 * PI / omega,
            },
            window_periods: 10,
            max_dt: None,
        }
    }

    /// Adiabatic switching with rate `eta` over `15/η`, 10-period window.
    pub fn adiabatic(perturbation: CMatrix, amplitude: f64, omega: f64, eta: f64) -> Self {
        Self {
            perturbation,
            amplitude,
            omega,
            envelope: Envelope::Adiabatic {
                eta,
                switch_on: 15.0 / eta,
            },
            window_periods: 10,
            max_dt: None,
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(QfiError::InvalidParameter(format!(
                "drive frequency must be > 0, got {}",
                self.omega
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(QfiError::InvalidParameter(format!(
                "drive amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if self.window_periods < 10 {
            return Err(QfiError::InvalidParameter(format!(
                "measurement window must span at least 10 periods, got {}",
                self.window_periods
            )));
        }
        match self.envelope {
            Envelope::HalfCosine { ramp } if !(ramp > 0.0) => {
                Err(QfiError::InvalidParameter(format!("ramp time must be > 0, got {ramp}")))
            }
            Envelope::Adiabatic { eta, switch_on } if !(eta > 0.0) || !(switch_on > 0.0) => Err(
                QfiError::InvalidParameter(format!("switching needs eta > 0 and a positive switch-on time, got {eta}, {switch_on}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Sampled expectation values of a driven run.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenSeries {
    pub times: Vec<f64>,
    /// `⟨J_μ(t)⟩`
    pub current: Vec<f64>,
    /// `⟨ΔA_μ(t)⟩`
    pub displacement: Vec<f64>,
    pub envelope: Vec<f64>,
    /// First sample of the measurement window.
    pub window_start: usize,
    pub dt: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    /// Largest change of a `ρ` eigenvalue over the run.
    pub eigenvalue_drift: f64,
    pub max_local_error: f64,
    pub steps: usize,
    /// Amplitude below which a signal is indistinguishable from rounding.
    pub rounding_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Current,
    Displacement,
}

struct Stepper {
    energies: Vec<f64>,
    hbar: f64,
    a: CMatrix,
}

impl Stepper {
    fn interaction(&self, m: &CMatrix, t: f64) -> CMatrix {
        let e = &self.energies;
        CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
            m[(i, j)] * C64::from_polar(1.0, (e[i] - e[j]) * t / self.hbar)
        })
    }

    /// Magnus-4 propagator over `[t, t + h]` for fields `x1, x2` at the
    /// Gauss points.
    fn propagator(&self, t: f64, h: f64, field: impl Fn(f64) -> f64) -> Result<CMatrix> {
        let s = 3f64.sqrt() / 6.0;
        let (t1, t2) = (t + h * (0.5 - s), t + h * (0.5 + s));
        let (x1, x2) = (field(t1), field(t2));
        if x1 == 0.0 && x2 == 0.0 {
            return Ok(linalg::identity(self.a.nrows()));
        }
        let a1 = self.interaction(&self.a, t1);
        let a2 = self.interaction(&self.a, t2);
        // K = iΩ with Ω = (h/2)(A₁ + A₂) + (√3h²/12)[A₂, A₁], A_k = (i/ħ) X_k Ã_k.
        let mut k = (&a1 * C64::new(x1, 0.0) + &a2 * C64::new(x2, 0.0)) * C64::new(-h / (2.0 * self.hbar), 0.0);
        let c = 3f64.sqrt() * h * h / 12.0;
        // Ã₁, Ã₂ are Hermitian, so [Ã₂, Ã₁] = M - M† with M = Ã₂Ã₁.
        let m = cmul(&a2, &a1);
        k -= (&m - m.adjoint()) * (linalg::I * (c * x1 * x2 / (self.hbar * self.hbar)));
        let k = (&k + k.adjoint()) * C64::new(0.5, 0.0);
        Ok(unitary_exp(&k))
    }
}

/// `exp(-iK)` for Hermitian `K` by scaled Taylor series. The Magnus
/// exponent of a weak drive is tiny, so this usually stops after a few terms.
fn unitary_exp(k: &CMatrix) -> CMatrix {
    let n = k.nrows();
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| k[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let scaled = k * C64::new(0.0, -(2f64).powi(-squarings));
    let mut term = scaled.clone();
    let mut u = linalg::identity(n) + &term;
    for order in 2..=30 {
        term = cmul(&term, &scaled) * C64::new(1.0 / order as f64, 0.0);
        u += &term;
        if linalg::max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        u = cmul(&u, &u);
    }
    u
}

/// Complex product through four real products, which use the blocked
/// `f64` kernel.
fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(a.nrows(), b.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

fn time_layout(ts: &ThermalState, protocol: &DriveProtocol) -> (f64, usize, usize, f64) {
    // Only transitions the perturbation couples oscillate in the propagator.
    let e = ts.energies();
    let a = ts.in_energy_basis(&protocol.perturbation);
    let floor = 1e-14 * linalg::max_abs(&a);
    let mut bohr_max: f64 = 0.0;
    for i in 0..e.len() {
        for j in 0..e.len() {
            if a[(i, j)].norm() > floor {
                bohr_max = bohr_max.max((e[i] - e[j]).abs() / ts.hbar());
            }
        }
    }
    let period = protocol.period();
    let mut target = MAX_PHASE_STEP / (bohr_max + protocol.omega);
    if let Some(m) = protocol.max_dt {
        target = target.min(m);
    }
    let per_period = (period / target).ceil().max(8.0) as usize;
    let dt = period / per_period as f64;
    let window = per_period * protocol.window_periods;
    let (t_start, lead) = match protocol.envelope {
        Envelope::HalfCosine { ramp } => (0.0, (ramp / dt).ceil() as usize),
        Envelope::Adiabatic { switch_on, .. } => {
            let lead = (switch_on / dt).ceil() as usize;
            (-((lead + window) as f64) * dt, lead)
        }
    };
    (dt, lead, window, t_start)
}

/// Evolves `ρ` under `H - X(t) A_ν` and records `⟨J_μ⟩` and `⟨ΔA_μ⟩`, where
/// `J_μ = (1/iħ)[A_μ, H]`.
pub fn evolve_driven(ts: &ThermalState, protocol: &DriveProtocol, a_mu: &CMatrix) -> Result<DrivenSeries> {
    protocol.validate()?;
    ts.rho().check_dim("perturbation", &protocol.perturbation)?;
    ts.rho().check_dim("observable", a_mu)?;
    let stepper = Stepper {
        energies: ts.energies().to_vec(),
        hbar: ts.hbar(),
        a: ts.in_energy_basis(&protocol.perturbation),
    };
    let j_mu = response::current_operator(ts.hamiltonian(), a_mu, ts.hbar())?;
    let jt = ts.in_energy_basis(&j_mu);
    let at = ts.in_energy_basis(a_mu);
    let a_eq = ts.rho().expectation(a_mu).re;
    let pops = ts.populations().to_vec();
    let mut rho = linalg::from_real_diagonal(&pops);

    let (dt, lead, window, t_start) = time_layout(ts, protocol);
    let total = lead + window;
    let field = |t: f64| protocol.amplitude * (protocol.omega * t).cos() * protocol.envelope.eval(t);
    let expect = |rho: &CMatrix, op: &CMatrix, t: f64| -> f64 {
        let n = op.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += rho[(j, i)] * op[(i, j)] * C64::from_polar(1.0, (stepper.energies[i] - stepper.energies[j]) * t / stepper.hbar);
            }
        }
        acc.re
    };

    let mut series = DrivenSeries {
        times: Vec::with_capacity(window + 1),
        current: Vec::with_capacity(window + 1),
        displacement: Vec::with_capacity(window + 1),
        envelope: Vec::with_capacity(window + 1),
        window_start: 0,
        dt,
        max_trace_drift: 0.0,
        max_hermiticity_drift: 0.0,
        eigenvalue_drift: 0.0,
        max_local_error: 0.0,
        steps: total,
        rounding_floor: ROUNDING_FACTOR * f64::EPSILON * (total as f64).sqrt() * linalg::max_abs(&at).max(linalg::max_abs(&jt)),
    };
    for step in 0..=total {
        let t = t_start + step as f64 * dt;
        if step >= lead {
            series.times.push(t);
            series.current.push(expect(&rho, &jt, t));
            series.displacement.push(expect(&rho, &at, t) - a_eq);
            series.envelope.push(protocol.envelope.eval(t));
        }
        if step == total {
            break;
        }
        let u = stepper.propagator(t, dt, field)?;
        if step % CHECK_EVERY == 0 || step == lead {
            let half = stepper.propagator(t + 0.5 * dt, 0.5 * dt, field)? * stepper.propagator(t, 0.5 * dt, field)?;
            let err = linalg::max_abs(&(&u - half));
            series.max_local_error = series.max_local_error.max(err);
            if err > STEP_TOLERANCE {
                return Err(QfiError::StepTooLarge {
                    error: err,
                    tolerance: STEP_TOLERANCE,
                    suggested_dt: 0.9 * dt * (STEP_TOLERANCE / err).powf(0.2),
                });
            }
        }
        rho = cmul(&cmul(&u, &rho), &u.adjoint());
        if step % CHECK_EVERY == 0 {
            series.max_trace_drift = series.max_trace_drift.max((linalg::trace(&rho) - 1.0).norm());
            series.max_hermiticity_drift = series.max_hermiticity_drift.max(linalg::max_abs(&(&rho - rho.adjoint())));
        }
    }
    series.max_trace_drift = series.max_trace_drift.max((linalg::trace(&rho) - 1.0).norm());
    series.max_hermiticity_drift = series.max_hermiticity_drift.max(linalg::max_abs(&(&rho - rho.adjoint())));
    let dim = rho.nrows();
    let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let mut final_pops: Vec<f64> = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
        .ok_or(QfiError::EigenSolverFailed { dim })?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    let mut initial = pops;
    final_pops.sort_by(f64::total_cmp);
    initial.sort_by(f64::total_cmp);
    series.eigenvalue_drift = final_pops
        .iter()
        .zip(&initial)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
    Ok(series)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub chi_hat: C64,
    pub omega: f64,
    /// RMS misfit over the fitted amplitude.
    pub residual: f64,
    /// Relative amplitude change between the window halves.
    pub trend: f64,
    /// Relative change of `χ̂` when the amplitude is halved, when computed.
    pub linearity: Option<f64>,
    pub amplitude: f64,
}

/// Least-squares `env(t)(a cos ωt + b sin ωt)` over samples `range`.
fn fit(times: &[f64], values: &[f64], env: &[f64], omega: f64) -> (f64, f64, f64) {
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&t, &y), &e) in times.iter().zip(values).zip(env) {
        let c = e * (omega * t).cos();
        let s = e * (omega * t).sin();
        scc += c * c;
        sss += s * s;
        scs += c * s;
        syc += y * c;
        sys += y * s;
    }
    let det = scc * sss - scs * scs;
    let a = (syc * sss - sys * scs) / det;
    let b = (sys * scc - syc * scs) / det;
    let mut sq = 0.0;
    for ((&t, &y), &e) in times.iter().zip(values).zip(env) {
        let r = y - e * (a * (omega * t).cos() + b * (omega * t).sin());
        sq += r * r;
    }
    (a, b, (sq / times.len() as f64).sqrt())
}

/// Fits the windowed response; `χ̂ = (a + ib)/X₀` for a response
/// `a cos ωt + b sin ωt` to the drive `X₀ cos ωt`, which matches
/// `χ(ω) = ∫₀^∞ e^{iωt} Φ(t) dt`.
pub fn extract_admittance(series: &DrivenSeries, protocol: &DriveProtocol, observable: Observable) -> Result<ExtractionResult> {
    protocol.validate()?;
    let values = match observable {
        Observable::Current => &series.current,
        Observable::Displacement => &series.displacement,
    };
    let n = series.times.len();
    if n < 16 {
        return Err(QfiError::InvalidParameter(format!("window holds only {n} samples")));
    }
    // Drop the closing sample so the window spans whole periods.
    let t = &series.times[..n - 1];
    let y = &values[..n - 1];
    let e = &series.envelope[..n - 1];
    let w = protocol.omega;
    let (a, b, rms) = fit(t, y, e, w);
    let amplitude = a.hypot(b);
    // Split where the accumulated fit weight reaches half, so strongly
    // enveloped windows still compare two informative halves.
    let total: f64 = e.iter().map(|v| v * v).sum();
    let mut acc = 0.0;
    let mut half = t.len() / 2;
    for (k, v) in e.iter().enumerate() {
        acc += v * v;
        if acc >= 0.5 * total {
            half = k.clamp(8, t.len() - 8);
            break;
        }
    }
    let (a1, b1, _) = fit(&t[..half], &y[..half], &e[..half], w);
    let (a2, b2, _) = fit(&t[half..], &y[half..], &e[half..], w);
    let (r1, r2) = (a1.hypot(b1), a2.hypot(b2));
    // Rounding noise from a conserved perturbation has no meaningful trend.
    let noise = (1e-10 * protocol.amplitude * linalg::max_abs(&protocol.perturbation).max(1.0)).max(series.rounding_floor);
    let trend = if r1.max(r2) > noise {
        (r2 - r1).abs() / r1.max(r2)
    } else {
        0.0
    };
    if trend > TREND_LIMIT {
        return Err(QfiError::Resonance { trend });
    }
    let chi_hat = if protocol.amplitude > 0.0 {
        C64::new(a, b) / protocol.amplitude
    } else {
        C64::new(0.0, 0.0)
    };
    Ok(ExtractionResult {
        chi_hat,
        omega: w,
        residual: if amplitude > 0.0 { rms / amplitude } else { 0.0 },
        trend,
        linearity: None,
        amplitude,
    })
}

/// Drives at one frequency and extracts `χ̂`.
pub fn measure_point(
    ts: &ThermalState,
    protocol: &DriveProtocol,
    a_mu: &CMatrix,
    observable: Observable,
) -> Result<ExtractionResult> {
    let series = evolve_driven(ts, protocol, a_mu)?;
    extract_admittance(&series, protocol, observable)
}

/// `|χ̂(X₀) - χ̂(X₀/2)| / |χ̂(X₀)|`
pub fn linearity_certificate(
    ts: &ThermalState,
    protocol: &DriveProtocol,
    a_mu: &CMatrix,
    observable: Observable,
) -> Result<f64> {
    let full = measure_point(ts, protocol, a_mu, observable)?.chi_hat;
    let half = measure_point(ts, &protocol.with_amplitude(0.5 * protocol.amplitude), a_mu, observable)?.chi_hat;
    Ok(if full.norm() > 0.0 {
        (full - half).norm() / full.norm()
    } else {
        half.norm()
    })
}

/// Runs independent drives, one per protocol, in parallel.
pub fn sweep(
    ts: &ThermalState,
    protocols: &[DriveProtocol],
    a_mu: &CMatrix,
    observable: Observable,
) -> Result<Vec<ExtractionResult>> {
    protocols
        .par_iter()
        .map(|p| measure_point(ts, p, a_mu, observable))
        .collect()
}

/// Measured spectrum over `grid` with adiabatic switching at rate `eta`.
pub fn simulate_spectrum(
    ts: &ThermalState,
    probe: &CMatrix,
    a_mu: &CMatrix,
    observable: Observable,
    grid: &[f64],
    eta: f64,
    amplitude: f64,
) -> Result<AdmittanceSpectrum> {
    let protocols: Vec<DriveProtocol> = grid
        .iter()
        .map(|&w| DriveProtocol::adiabatic(probe.clone(), amplitude, w, eta))
        .collect();
    let values = sweep(ts, &protocols, a_mu, observable)?.into_iter().map(|r| r.chi_hat).collect();
    AdmittanceSpectrum::new(grid.to_vec(), values, eta, Provenance::Simulated)
}

/// Which probe the virtual experiment uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbePath {
    /// Drive with `A = B` and read `⟨ΔB⟩`.
    Susceptibility,
    /// Drive with the probe field solving `J_A = L` and read `⟨J_A⟩`.
    Admittance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementConfig {
    pub path: ProbePath,
    /// Broadening of the coarser of the two runs.
    pub eta: f64,
    /// Grid spacing in units of the run's `η`.
    pub spacing: f64,
    /// Highest drive frequency; defaults to `1.5 max|ω_k| + 1`.
    pub cutoff: Option<f64>,
    /// Drive amplitude relative to `max|A|`.
    pub amplitude: f64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            path: ProbePath::Susceptibility,
            eta: 0.1,
            spacing: 0.5,
            cutoff: None,
            amplitude: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub etas: [f64; 2],
    pub values: [f64; 2],
    pub points: [usize; 2],
    pub quadrature_error: f64,
}

/// Full virtual-experiment pipeline for the unitary model generated by `B`.
/// Spectra are measured at `η` and `η/2` and the linear `η` dependence is
/// removed.
pub fn measure_and_reconstruct(
    ts: &ThermalState,
    f: &MonotoneFunction,
    b: &CMatrix,
    config: &MeasurementConfig,
) -> Result<(QfiResult, MeasurementReport)> {
    ts.rho().check_dim("generator", b)?;
    if !(config.eta > 0.0) || !(config.spacing > 0.0) || !(config.amplitude > 0.0) {
        return Err(QfiError::InvalidParameter(
            "eta, spacing and amplitude must be positive".into(),
        ));
    }
    let probe = match config.path {
        ProbePath::Susceptibility => b.clone(),
        ProbePath::Admittance => fdt::solve_probe_field(ts, f, b)?,
    };
    let scale = linalg::max_abs(&probe);
    let cutoff = config.cutoff.unwrap_or_else(|| fdt::default_cutoff(ts));
    let etas = [config.eta, 0.5 * config.eta];
    let mut values = [0.0; 2];
    let mut points = [0; 2];
    let mut quadrature_error: f64 = 0.0;
    for (k, &eta) in etas.iter().enumerate() {
        let h = config.spacing * eta;
        let n = (cutoff / h).floor() as usize;
        let grid: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        points[k] = grid.len();
        if scale == 0.0 {
            continue;
        }
        let amplitude = config.amplitude / scale;
        let r = match config.path {
            ProbePath::Susceptibility => {
                let chi = simulate_spectrum(ts, &probe, &probe, Observable::Displacement, &grid, eta, amplitude)?;
                fdt::qfi_from_susceptibility(ResponseData::Spectrum(&chi), f, ts.beta(), ts.hbar())?
            }
            ProbePath::Admittance => {
                let chi = simulate_spectrum(ts, &probe, &probe, Observable::Current, &grid, eta, amplitude)?;
                let d = ResponseData::Spectrum(&chi);
                fdt::covariance_from_admittance(d, d, f, ts.beta(), ts.hbar(), IntegralForm::Simplified)?
            }
        };
        values[k] = r.value.re;
        quadrature_error = quadrature_error.max(r.error_estimate);
    }
    let value = 2.0 * values[1] - values[0];
    let report = MeasurementReport {
        etas,
        values,
        points,
        quadrature_error,
    };
    let result = QfiResult {
        matrix: CMatrix::from_element(1, 1, C64::new(value, 0.0)),
        function: f.name(),
        model: match config.path {
            ProbePath::Susceptibility => "unitary, driven susceptibility".into(),
            ProbePath::Admittance => "unitary, driven admittance".into(),
        },
        method: QfiMethod::Reconstructed,
        diagnostics: QfiDiagnostics {
            error_estimate: Some((values[1] - values[0]).abs() + quadrature_error),
            ..Default::default()
        },
    };
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_z};
    use crate::response::{broadened, response_lines, ResponseKind};
    use crate::spectral::{thermal_state, HermitianOperator};

    fn qubit() -> ThermalState {
        thermal_state(&HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1.0).unwrap()
    }

    #[test]
    fn zero_amplitude_stays_in_equilibrium() {
        let ts = qubit();
        let p = DriveProtocol::half_cosine(pauli_x(), 0.0, 0.4);
        let s = evolve_driven(&ts, &p, &pauli_x()).unwrap();
        assert!(s.current.iter().all(|v| v.abs() < 1e-15));
        assert!(s.displacement.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn conserved_perturbation_gives_no_response() {
        let ts = qubit();
        let p = DriveProtocol::half_cosine(pauli_z(), 1e-3, 0.4);
        let r = measure_point(&ts, &p, &pauli_z(), Observable::Displacement).unwrap();
        assert!(r.chi_hat.norm() < 1e-10);
    }

    #[test]
    fn synthetic_sinusoid_recovered() {
        let omega = 0.7;
        let times: Vec<f64> = (0..2000).map(|k| k as f64 * 0.05).collect();
        let env: Vec<f64> = times.iter().map(|t| (0.01 * (t - 100.0)).exp()).collect();
        let y: Vec<f64> = times
            .iter()
            .zip(&env)
            .map(|(t, e)| e * (0.3 * (omega * t).cos() - 1.2 * (omega * t).sin()))
            .collect();
        let (a, b, rms) = fit(&times, &y, &env, omega);
        assert!((a - 0.3).abs() < 1e-12 && (b + 1.2).abs() < 1e-12 && rms < 1e-12);
    }

    #[test]
    fn off_resonant_drive_matches_reactive_admittance() {
        let ts = qubit();
        let lines = response_lines(&ts, ResponseKind::Current, &pauli_x(), &pauli_x()).unwrap();
        let omega = 0.45;
        let p = DriveProtocol::half_cosine(pauli_x(), 1e-4, omega);
        let r = measure_point(&ts, &p, &pauli_x(), Observable::Current).unwrap();
        let expect = broadened(&lines, 1e-12, omega);
        assert!((r.chi_hat.norm() - expect.norm()).abs() < 1e-2 * expect.norm(), "{} vs {expect}", r.chi_hat);
    }

    #[test]
    fn adiabatic_drive_measures_broadened_susceptibility() {
        let ts = qubit();
        let lines = response_lines(&ts, ResponseKind::Displacement, &pauli_x(), &pauli_x()).unwrap();
        let eta = 0.1;
        for omega in [0.3, 1.0, 1.7] {
            let p = DriveProtocol::adiabatic(pauli_x(), 1e-4, omega, eta);
            let r = measure_point(&ts, &p, &pauli_x(), Observable::Displacement).unwrap();
            let expect = broadened(&lines, eta, omega);
            assert!((r.chi_hat - expect).norm() < 1e-5 * expect.norm(), "{omega}: {} vs {expect}", r.chi_hat);
        }
    }

    #[test]
    fn resonant_half_cosine_drive_is_detected() {
        let ts = qubit();
        let p = DriveProtocol::half_cosine(pauli_x(), 1e-4, 1.0);
        assert!(matches!(
            measure_point(&ts, &p, &pauli_x(), Observable::Displacement),
            Err(QfiError::Resonance { .. })
        ));
    }

    #[test]
    fn evolution_preserves_state_invariants() {
        let ts = qubit();
        let mut p = DriveProtocol::adiabatic(pauli_x(), 1e-2, 0.8, 0.2);
        p.max_dt = Some(0.005);
        let s = evolve_driven(&ts, &p, &pauli_x()).unwrap();
        assert!(s.steps >= 10_000);
        assert!(s.max_trace_drift < 1e-10);
        assert!(s.max_hermiticity_drift < 1e-10);
        assert!(s.eigenvalue_drift < 1e-10);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let ts = qubit();
        let mut p = DriveProtocol::half_cosine(pauli_x(), 50.0, 0.4);
        p.max_dt = Some(1.0);
        assert!(matches!(
            evolve_driven(&ts, &p, &pauli_x()),
            Err(QfiError::StepTooLarge { .. })
        ));
    }
}
