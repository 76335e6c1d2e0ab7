//! Kubo linear response of thermal states: time-domain response functions,
//! exact line spectra and Lorentzian-broadened admittances.
//!
//! Frequency-domain objects are sums of `δ(ω - ω_k)` with complex weights.
//! The inverse transform is `F(t) = ∫dω/2π e^{-iωt} F_ω`, so a line with
//! weight `w` contributes `w/2π · e^{-iω_k t}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QfiError, Result};
use crate::linalg::{self, CMatrix};
use crate::monotone::MonotoneFunction;
use crate::spectral::{DensityMatrix, HermitianOperator, ThermalState};

/// Points in the default frequency grid.
pub const DEFAULT_GRID_POINTS: usize = 2048;
/// Default grid half-width in units of the largest Bohr frequency.
pub const DEFAULT_GRID_SPAN: f64 = 1.5;

/// `J = (1/iħ)[A, H]`
pub fn current_operator(h: &HermitianOperator, a: &CMatrix, hbar: f64) -> Result<CMatrix> {
    if a.shape() != h.matrix().shape() {
        return Err(QfiError::DimensionMismatch {
            what: "perturbation".into(),
            expected: h.dim(),
            found: a.nrows(),
        });
    }
    Ok(linalg::commutator(a, h.matrix()) * (-linalg::I / hbar))
}

/// `p_a - p_b` without cancellation.
pub(crate) fn population_difference(rho: &DensityMatrix, a: usize, b: usize) -> f64 {
    let lp = rho.log_populations();
    if lp[a] == f64::NEG_INFINITY && lp[b] == f64::NEG_INFINITY {
        0.0
    } else if lp[a] >= lp[b] {
        -lp[a].exp() * rho.log_ratio(b, a).exp_m1()
    } else {
        lp[b].exp() * rho.log_ratio(a, b).exp_m1()
    }
}

/// `log` of the logarithmic mean of `p_a` and `p_b`.
pub(crate) fn ln_logarithmic_mean(rho: &DensityMatrix, a: usize, b: usize) -> f64 {
    let lp = rho.log_populations();
    let (hi, lo) = if lp[a] >= lp[b] { (a, b) } else { (b, a) };
    if lp[hi] == f64::NEG_INFINITY {
        return lp[hi];
    }
    lp[hi] + MonotoneFunction::bkm().ln_eval_log(rho.log_ratio(lo, hi))
}

fn check_operator(ts: &ThermalState, what: &str, m: &CMatrix) -> Result<()> {
    ts.rho().check_dim(what, m)
}

/// `Φ_{μν}(t) = (1/iħ) tr(ρ [A_ν, J_μ(t)])` by spectral sums.
pub fn response_function_time(ts: &ThermalState, a_nu: &CMatrix, j_mu: &CMatrix, times: &[f64]) -> Result<Vec<C64>> {
    check_operator(ts, "A_nu", a_nu)?;
    check_operator(ts, "J_mu", j_mu)?;
    let a = ts.in_energy_basis(a_nu);
    let j = ts.in_energy_basis(j_mu);
    let e = ts.energies();
    let hbar = ts.hbar();
    let n = e.len();
    let pref = -linalg::I / hbar;
    Ok(times
        .iter()
        .map(|&t| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                for k in 0..n {
                    let dp = population_difference(ts.rho(), i, k);
                    if dp == 0.0 {
                        continue;
                    }
                    let phase = C64::from_polar(1.0, (e[k] - e[i]) * t / hbar);
                    acc += a[(i, k)] * j[(k, i)] * dp * phase;
                }
            }
            acc * pref
        })
        .collect())
}

/// `Φ_{μν}(t) = β ∫₀¹ tr(ρ^λ J_μ(t) ρ^{1-λ} J_ν) dλ` with the `λ` integral
/// done in closed form (logarithmic mean of populations).
pub fn kubo_canonical_form(ts: &ThermalState, j_mu: &CMatrix, j_nu: &CMatrix, t: f64) -> Result<C64> {
    check_operator(ts, "J_mu", j_mu)?;
    check_operator(ts, "J_nu", j_nu)?;
    let jm = ts.in_energy_basis(j_mu);
    let jn = ts.in_energy_basis(j_nu);
    let e = ts.energies();
    let n = e.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            let mean = ln_logarithmic_mean(ts.rho(), i, k).exp();
            let phase = C64::from_polar(1.0, (e[i] - e[k]) * t / ts.hbar());
            acc += jm[(i, k)] * jn[(k, i)] * mean * phase;
        }
    }
    Ok(acc * ts.beta())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineKind {
    CurrentCovariance,
    CurrentResponse,
    DisplacementResponse,
    DisplacementCovariance,
}

impl LineKind {
    pub fn is_response(self) -> bool {
        matches!(self, LineKind::CurrentResponse | LineKind::DisplacementResponse)
    }

    pub fn is_displacement(self) -> bool {
        matches!(self, LineKind::DisplacementResponse | LineKind::DisplacementCovariance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub omega: f64,
    pub weight: C64,
}

#[derive(Serialize, Deserialize)]
struct LineRecord {
    omega: f64,
    re: f64,
    im: f64,
}

/// Weights of `δ(ω - ω_k)` at the collapsed Bohr frequencies of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLineSet {
    pub lines: Vec<Line>,
    pub kind: LineKind,
    pub beta: f64,
    pub hbar: f64,
    /// Monotone function for covariance kinds.
    pub function: Option<String>,
    pub labels: (String, String),
}

impl SpectralLineSet {
    /// `Σ_k w_k / 2π`, the equal-time value.
    pub fn sum_rule(&self) -> C64 {
        self.lines.iter().map(|l| l.weight).sum::<C64>() / (2.0 * PI)
    }

    pub fn max_weight(&self) -> f64 {
        self.lines.iter().fold(0.0, |m, l| m.max(l.weight.norm()))
    }

    pub fn max_frequency(&self) -> f64 {
        self.lines.iter().fold(0.0, |m, l| m.max(l.omega.abs()))
    }

    /// Weight of the line closest to `omega` within `tol`.
    pub fn weight_at(&self, omega: f64, tol: f64) -> Option<C64> {
        self.lines
            .iter()
            .filter(|l| (l.omega - omega).abs() <= tol)
            .min_by(|a, b| (a.omega - omega).abs().total_cmp(&(b.omega - omega).abs()))
            .map(|l| l.weight)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<LineRecord> = self
            .lines
            .iter()
            .map(|l| LineRecord {
                omega: l.omega,
                re: l.weight.re,
                im: l.weight.im,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("line records serialize")
    }

    pub fn from_json(text: &str, kind: LineKind, beta: f64, hbar: f64) -> Result<Self> {
        let records: Vec<LineRecord> = serde_json::from_str(text)
            .map_err(|e| QfiError::Format(format!("line set at line {}, column {}: {e}", e.line(), e.column())))?;
        Ok(Self {
            lines: records
                .into_iter()
                .map(|r| Line {
                    omega: r.omega,
                    weight: C64::new(r.re, r.im),
                })
                .collect(),
            kind,
            beta,
            hbar,
            function: None,
            labels: ("mu".into(), "nu".into()),
        })
    }
}

/// Which operators a covariance line set is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// Operators used as given.
    Current,
    /// Operators centered, `ΔA = A - ⟨A⟩`.
    Displacement,
}

fn line_set(
    ts: &ThermalState,
    kind: LineKind,
    function: Option<String>,
    pair_weight: impl Fn(usize, usize) -> C64,
) -> SpectralLineSet {
    let lines = ts
        .bohr_lines()
        .into_iter()
        .map(|bl| Line {
            omega: bl.omega,
            weight: bl.pairs.iter().map(|&(a, b)| pair_weight(a, b)).sum::<C64>() * (2.0 * PI),
        })
        .collect();
    SpectralLineSet {
        lines,
        kind,
        beta: ts.beta(),
        hbar: ts.hbar(),
        function,
        labels: ("mu".into(), "nu".into()),
    }
}

/// Fourier transform of `t ↦ ⟨X_μ, X_ν(t)⟩^f`: the line at `(E_a - E_b)/ħ`
/// carries `2π Σ p_b f(p_a/p_b) conj⟨a|X_μ|b⟩ ⟨a|X_ν|b⟩`.
pub fn covariance_lines(
    ts: &ThermalState,
    f: &MonotoneFunction,
    x_mu: &CMatrix,
    x_nu: &CMatrix,
    kind: CovarianceKind,
) -> Result<SpectralLineSet> {
    ts.rho().check_floor()?;
    check_operator(ts, "X_mu", x_mu)?;
    check_operator(ts, "X_nu", x_nu)?;
    let (xm, xn, line_kind) = match kind {
        CovarianceKind::Current => (ts.in_energy_basis(x_mu), ts.in_energy_basis(x_nu), LineKind::CurrentCovariance),
        CovarianceKind::Displacement => (
            ts.in_energy_basis(&crate::covariance::centered(ts.rho(), x_mu)),
            ts.in_energy_basis(&crate::covariance::centered(ts.rho(), x_nu)),
            LineKind::DisplacementCovariance,
        ),
    };
    let lp = ts.rho().log_populations();
    Ok(line_set(ts, line_kind, Some(f.name()), |a, b| {
        let k = (lp[b] + f.ln_eval_log(ts.rho().log_ratio(a, b))).exp();
        xm[(a, b)].conj() * xn[(a, b)] * k
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// `Φ_{μν}`: current of `A_μ` responding to a field coupled to `A_ν`.
    Current,
    /// `Φ̃_{μν}`: displacement `ΔA_μ` responding to a field coupled to `A_ν`.
    Displacement,
}

/// Fourier transform of the commutator-form response function. Both
/// operators are perturbation (displacement) operators; for
/// [`ResponseKind::Current`] the measured current `J_μ` is derived from `A_μ`.
pub fn response_lines(ts: &ThermalState, kind: ResponseKind, a_mu: &CMatrix, a_nu: &CMatrix) -> Result<SpectralLineSet> {
    check_operator(ts, "A_mu", a_mu)?;
    check_operator(ts, "A_nu", a_nu)?;
    let (measured, line_kind) = match kind {
        ResponseKind::Current => (
            current_operator(ts.hamiltonian(), a_mu, ts.hbar())?,
            LineKind::CurrentResponse,
        ),
        ResponseKind::Displacement => (a_mu.clone(), LineKind::DisplacementResponse),
    };
    let m = ts.in_energy_basis(&measured);
    let an = ts.in_energy_basis(a_nu);
    let pref = -linalg::I / ts.hbar();
    Ok(line_set(ts, line_kind, None, |a, b| {
        m[(b, a)] * an[(a, b)] * population_difference(ts.rho(), a, b) * pref
    }))
}

/// Current response lines from the canonical correlation of two currents.
/// Carries the static `ω = 0` kernel `β p_i` through the logarithmic mean.
pub fn canonical_response_lines(ts: &ThermalState, j_mu: &CMatrix, j_nu: &CMatrix) -> Result<SpectralLineSet> {
    check_operator(ts, "J_mu", j_mu)?;
    check_operator(ts, "J_nu", j_nu)?;
    let jm = ts.in_energy_basis(j_mu);
    let jn = ts.in_energy_basis(j_nu);
    let beta = ts.beta();
    Ok(line_set(ts, LineKind::CurrentResponse, None, |a, b| {
        jm[(b, a)] * jn[(a, b)] * (beta * ln_logarithmic_mean(ts.rho(), a, b).exp())
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Synthesized,
    Simulated,
    File,
}

/// Sampled complex response `χ(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceSpectrum {
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
    /// Broadening used; 0 for external data.
    pub eta: f64,
    pub provenance: Provenance,
}

impl AdmittanceSpectrum {
    pub fn new(grid: Vec<f64>, values: Vec<C64>, eta: f64, provenance: Provenance) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(QfiError::DimensionMismatch {
                what: "spectrum values".into(),
                expected: grid.len(),
                found: values.len(),
            });
        }
        if grid.is_empty() {
            return Err(QfiError::InvalidParameter("spectrum grid is empty".into()));
        }
        if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(QfiError::InvalidParameter(format!(
                "spectrum grid not strictly ascending at index {}",
                k + 1
            )));
        }
        if let Some(k) = grid
            .iter()
            .zip(&values)
            .position(|(w, v)| !w.is_finite() || !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(QfiError::InvalidParameter(format!("non-finite spectrum entry at index {k}")));
        }
        Ok(Self {
            grid,
            values,
            eta,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `omega,re,im` with one header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,re,im\n");
        for (w, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{w:.16e},{:.16e},{:.16e}\n", v.re, v.im));
        }
        out
    }

    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.split(',').map(str::trim).eq(["omega", "re", "im"]) => {}
            _ => return Err(QfiError::Format("line 1: expected header `omega,re,im`".into())),
        }
        for (k, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut row = [0.0; 3];
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(QfiError::Format(format!(
                    "line {}: expected 3 columns, found {}",
                    k + 1,
                    fields.len()
                )));
            }
            for (c, field) in fields.iter().enumerate() {
                row[c] = field.trim().parse().map_err(|_| {
                    QfiError::Format(format!("line {}, column {}: cannot parse `{}`", k + 1, c + 1, field.trim()))
                })?;
            }
            grid.push(row[0]);
            values.push(C64::new(row[1], row[2]));
        }
        Self::new(grid, values, 0.0, provenance)
    }
}

/// `n` equally spaced points over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// [`DEFAULT_GRID_POINTS`] points over `±1.5 max|ω_k|` (`±1` if all lines are static).
pub fn default_grid(lines: &SpectralLineSet) -> Vec<f64> {
    let w = lines.max_frequency();
    let span = if w > 0.0 { DEFAULT_GRID_SPAN * w } else { 1.0 };
    uniform_grid(-span, span, DEFAULT_GRID_POINTS)
}

/// `χ(ω) = Σ_k (w_k/2π) / (η + i(ω_k - ω))`, the one-sided transform with
/// the causal factor `e^{-ηt}`.
pub fn broadened(lines: &SpectralLineSet, eta: f64, omega: f64) -> C64 {
    lines
        .lines
        .iter()
        .map(|l| l.weight / (2.0 * PI) / C64::new(eta, l.omega - omega))
        .sum()
}

fn broadened_spectrum(lines: &SpectralLineSet, eta: f64, grid: &[f64]) -> Result<AdmittanceSpectrum> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(QfiError::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let values = grid.par_iter().map(|&w| broadened(lines, eta, w)).collect();
    AdmittanceSpectrum::new(grid.to_vec(), values, eta, Provenance::Synthesized)
}

/// Admittance `χ_{μν}(ω)` from current-response lines.
pub fn admittance(lines: &SpectralLineSet, eta: f64, grid: &[f64]) -> Result<AdmittanceSpectrum> {
    if lines.kind != LineKind::CurrentResponse {
        return Err(QfiError::InvalidParameter(format!(
            "admittance needs current-response lines, got {:?}",
            lines.kind
        )));
    }
    broadened_spectrum(lines, eta, grid)
}

/// Dynamical susceptibility `χ̃_{μν}(ω)` from displacement-response lines.
pub fn dynamical_susceptibility(lines: &SpectralLineSet, eta: f64, grid: &[f64]) -> Result<AdmittanceSpectrum> {
    if lines.kind != LineKind::DisplacementResponse {
        return Err(QfiError::InvalidParameter(format!(
            "dynamical susceptibility needs displacement-response lines, got {:?}",
            lines.kind
        )));
    }
    broadened_spectrum(lines, eta, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::generalized_covariance;
    use crate::linalg::{pauli_x, pauli_z};
    use crate::spectral::thermal_state;

    fn qubit(gap: f64, beta: f64) -> ThermalState {
        thermal_state(&HermitianOperator::from_real_diagonal(&[0.0, gap]), beta).unwrap()
    }

    #[test]
    fn current_of_conserved_quantities_vanishes() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 3.0]);
        let j = current_operator(&h, h.matrix(), 1.0).unwrap();
        assert_eq!(linalg::max_abs(&j), 0.0);
        let a = linalg::from_real_diagonal(&[2.0, -1.0, 0.5]);
        assert_eq!(linalg::max_abs(&current_operator(&h, &a, 1.0).unwrap()), 0.0);
    }

    #[test]
    fn current_of_sigma_x() {
        // H = diag(0, Δ) = Δ(1 - σz)/2, so (1/i)[σx, H] = Δ σy.
        let ts = qubit(2.0, 1.0);
        let j = current_operator(ts.hamiltonian(), &pauli_x(), 1.0).unwrap();
        let expect = linalg::pauli_y() * C64::new(2.0, 0.0);
        assert!(linalg::max_abs(&(j - expect)) < 1e-15);
    }

    #[test]
    fn response_of_self_commutator_at_zero() {
        let ts = qubit(1.0, 0.7);
        let phi = response_function_time(&ts, &pauli_x(), &pauli_x(), &[0.0]).unwrap();
        assert!(phi[0].norm() < 1e-16);
        let phi = response_function_time(&ts, &pauli_z(), &pauli_x(), &[0.0, 1.0, 2.5]).unwrap();
        assert!(phi.iter().all(|z| z.norm() < 1e-16));
    }

    #[test]
    fn canonical_static_equals_beta_bkm_covariance() {
        let ts = qubit(1.3, 0.8);
        let j = current_operator(ts.hamiltonian(), &pauli_x(), 1.0).unwrap();
        let phi = kubo_canonical_form(&ts, &j, &j, 0.0).unwrap();
        let cov = generalized_covariance(ts.rho(), &MonotoneFunction::bkm(), &j, &j, false).unwrap();
        assert!((phi - cov * 0.8).norm() < 1e-14);
    }

    #[test]
    fn qubit_covariance_lines_brute_force() {
        let gap = 1.0;
        let ts = qubit(gap, 1.0);
        let p = ts.populations().to_vec();
        let lines = covariance_lines(&ts, &MonotoneFunction::sld(), &pauli_x(), &pauli_x(), CovarianceKind::Current)
            .unwrap();
        assert_eq!(lines.lines.len(), 3);
        let mean = 0.5 * (p[0] + p[1]);
        let plus = lines.weight_at(gap, 1e-12).unwrap();
        let minus = lines.weight_at(-gap, 1e-12).unwrap();
        assert!((plus.re - 2.0 * PI * mean).abs() < 1e-14);
        assert!((minus.re - 2.0 * PI * mean).abs() < 1e-14);
        assert_eq!(lines.weight_at(0.0, 1e-12).unwrap(), C64::new(0.0, 0.0));
        assert!((lines.sum_rule().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rld_lld_line_ratio_is_boltzmann() {
        let ts = qubit(1.0, 2.0);
        let x = pauli_x();
        let r = covariance_lines(&ts, &MonotoneFunction::rld(), &x, &x, CovarianceKind::Current).unwrap();
        let l = covariance_lines(&ts, &MonotoneFunction::lld(), &x, &x, CovarianceKind::Current).unwrap();
        for (a, b) in r.lines.iter().zip(&l.lines) {
            if b.weight.norm() > 0.0 {
                let expect = (-2.0 * a.omega).exp();
                assert!(((a.weight / b.weight).re - expect).abs() < 1e-14 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn conserved_perturbation_has_zero_lines() {
        let ts = qubit(1.0, 1.0);
        let lines = response_lines(&ts, ResponseKind::Displacement, &pauli_z(), &pauli_z()).unwrap();
        assert_eq!(lines.max_weight(), 0.0);
    }

    #[test]
    fn single_line_lorentzian_peak() {
        let lines = SpectralLineSet {
            lines: vec![Line {
                omega: 1.0,
                weight: C64::new(3.0, 0.0),
            }],
            kind: LineKind::CurrentResponse,
            beta: 1.0,
            hbar: 1.0,
            function: None,
            labels: ("a".into(), "a".into()),
        };
        let chi = admittance(&lines, 10.0, &[1.0, 50.0]).unwrap();
        assert!((chi.values[0].re - 3.0 / (2.0 * PI * 10.0)).abs() < 1e-15);
        assert!(chi.values[1].norm() < chi.values[0].norm());
        assert!(admittance(&lines, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn susceptibility_parity_on_symmetric_grid() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 0.7, 1.9]);
        let ts = thermal_state(&h, 1.2).unwrap();
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new(1.0 + (i + j) as f64, 0.0));
        let lines = response_lines(&ts, ResponseKind::Displacement, &a, &a).unwrap();
        let grid = default_grid(&lines);
        let chi = dynamical_susceptibility(&lines, 0.05, &grid).unwrap();
        let n = grid.len();
        for k in 0..n {
            let (lo, hi) = (chi.values[k], chi.values[n - 1 - k]);
            assert!((lo.re - hi.re).abs() < 1e-12);
            assert!((lo.im + hi.im).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let chi = AdmittanceSpectrum::new(
            vec![-1.0, 0.1 + 0.2, 2.0 / 3.0],
            vec![C64::new(1e-300, -0.0), C64::new(PI, 1.0 / 3.0), C64::new(-7.5, 1e17)],
            0.0,
            Provenance::File,
        )
        .unwrap();
        let back = AdmittanceSpectrum::from_csv(&chi.to_csv(), Provenance::File).unwrap();
        assert_eq!(back, chi);
        let bad = "omega,re,im\n1.0,2.0\n";
        let err = AdmittanceSpectrum::from_csv(bad, Provenance::File).unwrap_err();
        assert!(err.to_string().contains("line 2"));

        let ts = qubit(1.0, 1.0);
        let lines = response_lines(&ts, ResponseKind::Current, &pauli_x(), &pauli_x()).unwrap();
        let back = SpectralLineSet::from_json(&lines.to_json(), lines.kind, 1.0, 1.0).unwrap();
        assert_eq!(back.lines, lines.lines);
    }
}
