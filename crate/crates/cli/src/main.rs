//! `qfi`: command-line front end for the quantum Fisher information engine.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfi_core::QfiError;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "qfi", version, about = "Monotone quantum Fisher information, generalized FDT checks and response-based reconstruction")]
struct Cli {
    /// JSON file with default settings (keys: subcommand, f, beta, hbar, eta, grid, tolerance, out, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reduced Planck constant (default 1).
    #[arg(long, global = true)]
    hbar: Option<f64>,
    /// Seed echoed into reports for reproducible batch runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fisher information of a state for one or more generators or tangents.
    Compute(ComputeArgs),
    /// Line-by-line check of the generalized fluctuation-dissipation relation.
    FdtCheck(FdtCheckArgs),
    /// Generalized covariance or Fisher information from a response spectrum CSV.
    Reconstruct(ReconstructArgs),
    /// Wigner-Yanase-Dyson and metric adjusted skew information.
    Skew(SkewArgs),
    /// Yanagi uncertainty relation table (CSV) over an alpha sweep.
    Uncertainty(UncertaintyArgs),
    /// Virtual driving experiment; writes the measured spectrum as CSV.
    Simulate(SimulateArgs),
    /// Thermal harmonic oscillator: closed forms against the truncated Fock realization.
    Oscillator(OscillatorArgs),
    /// Probe field whose current equals the logarithmic derivative of a unitary model.
    ProbeField(ProbeFieldArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// State JSON: an operator (density matrix) or {"hamiltonian": .., "beta": ..}.
    #[arg(long)]
    pub state: PathBuf,
    /// Monotone function: sld, bkm, rld, lld, harmonic, wy, wyd:ALPHA or expr:"...".
    #[arg(long)]
    pub f: Option<String>,
    /// Generator B of the unitary model e^{-iθB} ρ e^{iθB}; repeat for a matrix.
    #[arg(long)]
    pub generator: Vec<PathBuf>,
    /// Tangent ∂ρ/∂θ given directly; repeat for a matrix.
    #[arg(long)]
    pub tangent: Vec<PathBuf>,
    /// Also report the optimal locally unbiased estimator (single parameter).
    #[arg(long)]
    pub estimator: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Current,
    Displacement,
}

#[derive(Debug, Args)]
pub struct FdtCheckArgs {
    /// Hamiltonian JSON.
    #[arg(long = "h")]
    pub hamiltonian: PathBuf,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub f: Option<String>,
    /// Observable A_μ.
    #[arg(long = "A")]
    pub a: PathBuf,
    /// Observable A_ν (defaults to A_μ).
    #[arg(long = "B")]
    pub b: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "current")]
    pub kind: KindArg,
    /// Allowed relative deviation per line (default 1e-10).
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReconstructKind {
    Current,
    Displacement,
    Qfi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Full,
    Simplified,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Spectrum CSV with header omega,re,im.
    #[arg(long)]
    pub chi: PathBuf,
    /// Spectrum of the reversed pair χ_νμ (defaults to --chi).
    #[arg(long)]
    pub chi_reverse: Option<PathBuf>,
    #[arg(long)]
    pub f: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum, default_value = "qfi")]
    pub kind: ReconstructKind,
    /// Integral form; the full form needs negative frequencies in the data.
    #[arg(long, value_enum, default_value = "simplified")]
    pub form: FormArg,
    /// Broadening the spectrum was recorded with (informational).
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SkewArgs {
    /// State JSON.
    #[arg(long, conflicts_with = "oscillator")]
    pub state: Option<PathBuf>,
    /// Thermal oscillator `m,omega,beta`.
    #[arg(long)]
    pub oscillator: Option<String>,
    /// Fock levels kept (default from the truncation rule).
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub alpha: f64,
    /// Observable JSON (required with --state).
    #[arg(long = "A")]
    pub a: Option<PathBuf>,
    /// Oscillator observable.
    #[arg(long, value_enum, default_value = "x")]
    pub observable: Quadrature,
    /// Monotone function for the metric adjusted skew information.
    #[arg(long)]
    pub f: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quadrature {
    X,
    P,
}

#[derive(Debug, Args)]
pub struct UncertaintyArgs {
    #[arg(long, conflicts_with = "oscillator")]
    pub state: Option<PathBuf>,
    /// Thermal oscillator `m,omega,beta`; uses A = x, B = p.
    #[arg(long)]
    pub oscillator: Option<String>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Single value or sweep `min:max:count`.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long = "A")]
    pub a: Option<PathBuf>,
    #[arg(long = "B")]
    pub b: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "h")]
    pub hamiltonian: PathBuf,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Perturbation A_ν coupled as -X(t) A_ν.
    #[arg(long)]
    pub probe: PathBuf,
    /// Measured observable A_μ (defaults to the probe).
    #[arg(long)]
    pub observe: Option<PathBuf>,
    /// Read the current J_μ (admittance) or the displacement ΔA_μ (susceptibility).
    #[arg(long, value_enum, default_value = "current")]
    pub kind: KindArg,
    /// Drive frequencies `min:max:count`.
    #[arg(long)]
    pub omega_grid: Option<String>,
    /// Adiabatic switching rate; without it a half-cosine ramp is used.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Drive amplitude X₀.
    #[arg(long, default_value_t = 1e-4)]
    pub amplitude: f64,
}

#[derive(Debug, Args)]
pub struct OscillatorArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProbeFieldArgs {
    #[arg(long = "h")]
    pub hamiltonian: PathBuf,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub f: Option<String>,
    /// Generator B.
    #[arg(long = "B")]
    pub b: PathBuf,
    /// Also write the probe operator as operator JSON.
    #[arg(long)]
    pub operator: Option<PathBuf>,
}

/// Resolved global settings.
pub struct Context {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub hbar: f64,
    pub seed: Option<u64>,
}

impl Context {
    pub fn f(&self, flag: &Option<String>) -> anyhow::Result<qfi_core::MonotoneFunction> {
        let name = flag.clone().or_else(|| self.config.f.clone()).unwrap_or_else(|| "sld".into());
        Ok(qfi_core::MonotoneFunction::parse(&name)?)
    }

    pub fn beta(&self, flag: Option<f64>) -> anyhow::Result<f64> {
        match flag.or(self.config.beta) {
            Some(b) => config::positive("beta", b),
            None => anyhow::bail!("--beta is required"),
        }
    }

    pub fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, text).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Failure of a numerical diagnostic rather than of the input.
#[derive(Debug)]
pub struct DiagnosticFailure(pub String);

impl std::fmt::Display for DiagnosticFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DiagnosticFailure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(q) = cause.downcast_ref::<QfiError>() {
            return if q.is_numerical() { 3 } else { 2 };
        }
        if cause.downcast_ref::<DiagnosticFailure>().is_some() {
            return 3;
        }
    }
    2
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("QFI_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow::anyhow!("QFI_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let name = match &cli.command {
        Command::Compute(_) => "compute",
        Command::FdtCheck(_) => "fdt-check",
        Command::Reconstruct(_) => "reconstruct",
        Command::Skew(_) => "skew",
        Command::Uncertainty(_) => "uncertainty",
        Command::Simulate(_) => "simulate",
        Command::Oscillator(_) => "oscillator",
        Command::ProbeField(_) => "probe-field",
    };
    config.check_subcommand(name)?;
    let hbar = config::positive("hbar", cli.hbar.or(config.hbar).unwrap_or(1.0))?;
    let ctx = Context {
        out: cli.out.or_else(|| config.out.clone()),
        seed: cli.seed.or(config.seed),
        hbar,
        config,
    };
    match cli.command {
        Command::Compute(a) => commands::compute(&ctx, a),
        Command::FdtCheck(a) => commands::fdt_check(&ctx, a),
        Command::Reconstruct(a) => commands::reconstruct(&ctx, a),
        Command::Skew(a) => commands::skew(&ctx, a),
        Command::Uncertainty(a) => commands::uncertainty(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Oscillator(a) => commands::oscillator(&ctx, a),
        Command::ProbeField(a) => commands::probe_field(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
