//! Hermitian operators, density matrices, thermal states and Bohr-frequency
//! enumeration.
//!
//! Everything downstream works in the eigenbasis of the state: populations
//! `p_i` are carried alongside their logarithms so that ratios `p_j / p_i`
//! spanning `exp(±β·range)` never have to be formed directly.

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use crate::error::{QfiError, Result};
use crate::linalg::{self, CMatrix};

/// Relative Hermiticity tolerance applied on construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default smallest population usable for superoperator inversion.
pub const DEFAULT_POPULATION_FLOOR: f64 = 1e-12;
/// Relative Bohr-frequency collapse tolerance (times `max|E|`).
pub const DEFAULT_COLLAPSE_REL: f64 = 1e-9;

const TRACE_TOL: f64 = 1e-12;
const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-12;

/// A validated Hermitian operator. The stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QfiError::InvalidParameter(format!(
                "operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QfiError::InvalidParameter("operator has non-finite entries".into()));
        }
        let scale = linalg::max_abs(&matrix);
        let n = matrix.nrows();
        let mut worst = (0, 0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        if worst.2 > HERMITICITY_TOL * scale {
            return Err(QfiError::NotHermitian {
                row: worst.0,
                col: worst.1,
                deviation: worst.2,
            });
        }
        let sym = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Ok(Self { matrix: sym })
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        Self {
            matrix: linalg::from_real_diagonal(d),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: linalg::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(s, 0.0),
        }
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(λ) V†`
    pub fn reconstruct(&self) -> CMatrix {
        linalg::from_basis(&self.eigenvectors, &linalg::from_real_diagonal(&self.eigenvalues))
    }

    /// Max-norm reconstruction residual relative to `max(1, ‖M‖_max)`.
    pub fn residual(&self, op: &HermitianOperator) -> f64 {
        let diff = self.reconstruct() - op.matrix();
        linalg::max_abs(&diff) / linalg::max_abs(op.matrix()).max(1.0)
    }

    /// `max|V†V - I|`
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        linalg::max_abs(&(self.eigenvectors.adjoint() * &self.eigenvectors - linalg::identity(n)))
    }

    /// Applies a real function to the spectrum: `V diag(g(λ)) V†`.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let d: Vec<f64> = self.eigenvalues.iter().map(|&x| g(x)).collect();
        linalg::from_basis(&self.eigenvectors, &linalg::from_real_diagonal(&d))
    }
}

pub fn decompose(op: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = op.dim();
    let eig = SymmetricEigen::try_new(op.matrix().clone(), f64::EPSILON, 0)
        .ok_or(QfiError::EigenSolverFailed { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// A validated density matrix together with its eigenbasis.
///
/// `populations()[i]` is the eigenvalue belonging to column `i` of `basis()`.
/// Log-populations are kept separately; for thermal states they are exact
/// (`-β(E_i - F)`) even where the populations themselves underflow.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    basis: CMatrix,
    populations: Vec<f64>,
    log_populations: Vec<f64>,
    /// `log_populations` before normalization, so that ratios skip `ln Z`.
    log_weights: Vec<f64>,
    floor: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let op = HermitianOperator::new(matrix)?;
        let trace = linalg::trace(op.matrix()).re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(QfiError::TraceNotOne { trace });
        }
        let sd = decompose(&op)?;
        if let Some(&min) = sd.eigenvalues.first() {
            if min < -NEGATIVE_EIGENVALUE_TOL {
                return Err(QfiError::NegativeEigenvalue { value: min });
            }
        }
        let log_populations = sd.eigenvalues.iter().map(|&p| p.max(0.0).ln()).collect();
        Ok(Self::from_log_spectrum(sd.eigenvectors, log_populations, 0.0))
    }

    /// Builds `V diag(exp(w - log_norm)) V†`. The caller guarantees that
    /// `log_norm` normalizes the weights.
    pub(crate) fn from_log_spectrum(basis: CMatrix, log_weights: Vec<f64>, log_norm: f64) -> Self {
        let log_populations: Vec<f64> = log_weights.iter().map(|w| w - log_norm).collect();
        let populations: Vec<f64> = log_populations.iter().map(|l| l.exp()).collect();
        let matrix = linalg::from_basis(&basis, &linalg::from_real_diagonal(&populations));
        Self {
            matrix,
            basis,
            populations,
            log_populations,
            log_weights,
            floor: DEFAULT_POPULATION_FLOOR,
        }
    }

    /// Diagonal state `diag(p)`.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::new(linalg::from_real_diagonal(p))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::from_log_spectrum(linalg::identity(n), vec![0.0; n], (n as f64).ln())
    }

    /// Replaces the population floor used by superoperator operations.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor.max(0.0);
        self
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn populations(&self) -> &[f64] {
        &self.populations
    }

    pub fn log_populations(&self) -> &[f64] {
        &self.log_populations
    }

    /// `ln(p_a / p_b)`, exact in the Boltzmann exponents for thermal states.
    pub fn log_ratio(&self, a: usize, b: usize) -> f64 {
        self.log_weights[a] - self.log_weights[b]
    }

    pub fn min_population(&self) -> f64 {
        self.populations.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Errors unless every population is strictly positive and at least the floor.
    pub fn check_floor(&self) -> Result<()> {
        let min_log = self.log_populations.iter().copied().fold(f64::INFINITY, f64::min);
        if !min_log.is_finite() || min_log < self.floor.ln() {
            return Err(QfiError::PopulationFloor {
                min: self.min_population(),
                floor: self.floor,
            });
        }
        Ok(())
    }

    pub fn check_dim(&self, what: &str, m: &CMatrix) -> Result<()> {
        if m.nrows() != self.dim() || m.ncols() != self.dim() {
            return Err(QfiError::DimensionMismatch {
                what: what.to_string(),
                expected: self.dim(),
                found: m.nrows().max(m.ncols()),
            });
        }
        Ok(())
    }

    /// Matrix elements `⟨j|A|i⟩` in the eigenbasis of the state.
    pub fn in_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        linalg::to_basis(&self.basis, op)
    }

    pub fn from_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        linalg::from_basis(&self.basis, op)
    }

    /// `tr(ρ A)`
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        let a = self.in_eigenbasis(op);
        self.populations
            .iter()
            .enumerate()
            .map(|(i, &p)| a[(i, i)] * p)
            .sum()
    }

    /// `ρ^s` through the spectrum; zero populations stay zero.
    pub fn power(&self, s: f64) -> CMatrix {
        let d: Vec<f64> = self
            .log_populations
            .iter()
            .map(|&l| if l.is_finite() { (s * l).exp() } else { 0.0 })
            .collect();
        linalg::from_basis(&self.basis, &linalg::from_real_diagonal(&d))
    }

    /// Affine mixture `λ ρ + (1 - λ) σ`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
        let m = &self.matrix * C64::new(lambda, 0.0) + other.matrix() * C64::new(1.0 - lambda, 0.0);
        Ok(DensityMatrix::new(m)?.with_floor(self.floor))
    }
}

/// Canonical ensemble `e^{-βH}/Z` of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct ThermalState {
    hamiltonian: HermitianOperator,
    energies: Vec<f64>,
    beta: f64,
    hbar: f64,
    free_energy: f64,
    rho: DensityMatrix,
    underflow: bool,
}

/// Thermal state with `ħ = 1`.
pub fn thermal_state(h: &HermitianOperator, beta: f64) -> Result<ThermalState> {
    ThermalState::new(h, beta, 1.0)
}

impl ThermalState {
    pub fn new(h: &HermitianOperator, beta: f64, hbar: f64) -> Result<Self> {
        Self::with_population_floor(h, beta, hbar, DEFAULT_POPULATION_FLOOR)
    }

    /// Like [`ThermalState::new`] with an explicit population floor.
    pub fn with_population_floor(h: &HermitianOperator, beta: f64, hbar: f64, floor: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(QfiError::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(QfiError::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        let sd = decompose(h)?;
        let e0 = sd.eigenvalues[0];
        // Shift by the ground energy before exponentiating.
        let shifted: Vec<f64> = sd.eigenvalues.iter().map(|&e| -beta * (e - e0)).collect();
        let log_z_shifted = shifted.iter().copied().fold(f64::NEG_INFINITY, linalg::ln_add_exp);
        let free_energy = e0 - log_z_shifted / beta;
        let rho = DensityMatrix::from_log_spectrum(sd.eigenvectors, shifted, log_z_shifted).with_floor(floor);
        let underflow = rho.min_population() < rho.floor();
        if underflow {
            log::warn!(
                "thermal state population {:e} below floor {:e}; state is flagged for superoperator inversion",
                rho.min_population(),
                rho.floor()
            );
        }
        Ok(Self {
            hamiltonian: h.clone(),
            energies: sd.eigenvalues,
            beta,
            hbar,
            free_energy,
            rho,
            underflow,
        })
    }

    /// Thermal state whose Hamiltonian is the effective one of `rho`.
    pub fn from_density(rho: &DensityMatrix, beta: f64, hbar: f64) -> Result<Self> {
        let h = effective_hamiltonian(rho, beta)?;
        Ok(Self::new(&h, beta, hbar)?.with_floor(rho.floor()))
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.rho = self.rho.with_floor(floor);
        self.underflow = self.rho.min_population() < self.rho.floor();
        self
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    /// Ascending energies; index `i` matches column `i` of the state basis.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn free_energy(&self) -> f64 {
        self.free_energy
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn populations(&self) -> &[f64] {
        self.rho.populations()
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// True when some population fell below the floor at construction.
    pub fn is_flagged(&self) -> bool {
        self.underflow
    }

    pub fn decomposition(&self) -> SpectralDecomposition {
        SpectralDecomposition {
            eigenvalues: self.energies.clone(),
            eigenvectors: self.rho.basis().clone(),
        }
    }

    /// Operator matrix elements in the energy basis.
    pub fn in_energy_basis(&self, op: &CMatrix) -> CMatrix {
        self.rho.in_eigenbasis(op)
    }

    pub fn default_collapse_tol(&self) -> f64 {
        default_collapse_tol(&self.energies) / self.hbar
    }

    pub fn bohr_lines(&self) -> Vec<BohrLine> {
        bohr_lines(&self.decomposition(), self.hbar, self.default_collapse_tol())
    }
}

/// `H = -(1/β) log ρ`, normalized so that its free energy is zero.
pub fn effective_hamiltonian(rho: &DensityMatrix, beta: f64) -> Result<HermitianOperator> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(QfiError::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    let min = rho.min_population();
    if rho.log_populations().iter().any(|l| !l.is_finite()) || min < rho.floor() {
        return Err(QfiError::NotThermalizable { min });
    }
    let e: Vec<f64> = rho.log_populations().iter().map(|&l| -l / beta).collect();
    HermitianOperator::new(linalg::from_basis(rho.basis(), &linalg::from_real_diagonal(&e)))
}

/// A Bohr frequency and the ordered index pairs `(i, j)` with
/// `(E_i - E_j)/ħ` inside the line.
#[derive(Debug, Clone, PartialEq)]
pub struct BohrLine {
    pub omega: f64,
    pub pairs: Vec<(usize, usize)>,
}

pub fn default_collapse_tol(energies: &[f64]) -> f64 {
    DEFAULT_COLLAPSE_REL * energies.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
}

/// Groups all ordered pairs by transition frequency. Consecutive sorted
/// frequencies closer than `collapse_tol` share a line; the line frequency is
/// the mean of its members.
pub fn bohr_lines(sd: &SpectralDecomposition, hbar: f64, collapse_tol: f64) -> Vec<BohrLine> {
    let e = &sd.eigenvalues;
    let n = e.len();
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let w = if i == j { 0.0 } else { (e[i] - e[j]) / hbar };
            all.push((w, i, j));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut lines: Vec<BohrLine> = Vec::new();
    let mut sum = 0.0;
    let mut last = f64::NEG_INFINITY;
    for (w, i, j) in all {
        match lines.last_mut() {
            Some(line) if w - last <= collapse_tol => {
                line.pairs.push((i, j));
                sum += w;
            }
            _ => {
                if let Some(line) = lines.last_mut() {
                    line.omega = sum / line.pairs.len() as f64;
                }
                lines.push(BohrLine {
                    omega: w,
                    pairs: vec![(i, j)],
                });
                sum = w;
            }
        }
        last = w;
    }
    if let Some(line) = lines.last_mut() {
        line.omega = sum / line.pairs.len() as f64;
    }
    // A symmetric zero group can pick up rounding in its mean.
    for line in &mut lines {
        if line.pairs.iter().any(|(i, j)| i == j) {
            line.omega = 0.0;
        }
    }
    lines
}
