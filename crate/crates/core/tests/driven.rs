mod common;

use std::path::PathBuf;

use qfi_core::driven::{
    evolve_driven, linearity_certificate, measure_and_reconstruct, measure_point, DriveProtocol, MeasurementConfig,
    Observable, ProbePath,
};
use qfi_core::fdt::solve_probe_field;
use qfi_core::io::{read_hermitian, read_operator};
use qfi_core::linalg::{max_abs, CMatrix};
use qfi_core::response::{broadened, response_lines, ResponseKind};
use qfi_core::skew::{oscillator_oracle, OscillatorSpec};
use qfi_core::spectral::{HermitianOperator, ThermalState};
use qfi_core::{qfi_unitary_model, MonotoneFunction};

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn qubit() -> (ThermalState, CMatrix) {
    let h = read_hermitian(&data("qubit_h.json"), "H").unwrap();
    (ThermalState::new(&h, 0.8, 1.0).unwrap(), read_operator(&data("sigma_x.json"), "B").unwrap())
}

fn four_level() -> (ThermalState, CMatrix) {
    let h = read_hermitian(&data("four_level_h.json"), "H").unwrap();
    (ThermalState::new(&h, 1.0, 1.0).unwrap(), read_operator(&data("four_level_b.json"), "B").unwrap())
}

fn pipeline(ts: &ThermalState, b: &CMatrix, f: &MonotoneFunction, path: ProbePath) -> (f64, f64) {
    let direct = qfi_unitary_model(ts.rho(), f, b).unwrap().scalar();
    let config = MeasurementConfig { path, ..Default::default() };
    let (q, _) = measure_and_reconstruct(ts, f, b, &config).unwrap();
    (q.scalar(), direct)
}

#[test]
fn qubit_pipeline_both_paths() {
    let (ts, b) = qubit();
    for f in [MonotoneFunction::sld(), MonotoneFunction::wigner_yanase()] {
        for path in [ProbePath::Susceptibility, ProbePath::Admittance] {
            let (measured, direct) = pipeline(&ts, &b, &f, path);
            assert!(common::rel(measured, direct) < 0.02, "{} {path:?}: {measured} vs {direct}", f.name());
        }
    }
}

#[test]
fn four_level_pipeline_both_paths() {
    let (ts, b) = four_level();
    let f = MonotoneFunction::sld();
    for path in [ProbePath::Susceptibility, ProbePath::Admittance] {
        let (measured, direct) = pipeline(&ts, &b, &f, path);
        assert!(common::rel(measured, direct) < 0.02, "{path:?}: {measured} vs {direct}");
    }
}

#[test]
fn commuting_generator_gives_zero() {
    let (ts, _) = qubit();
    let z = qfi_core::linalg::pauli_z();
    let (q, _) = measure_and_reconstruct(&ts, &MonotoneFunction::sld(), &z, &MeasurementConfig::default()).unwrap();
    // rounding noise in ⟨ΔB⟩ divided by the drive amplitude
    assert!(q.scalar().abs() < 1e-9, "{:e}", q.scalar());
}

#[test]
fn oscillator_wigner_yanase_pipeline() {
    let spec = OscillatorSpec::new(1.0, 1.0, 3.0, 1.0).unwrap();
    let ts = spec.thermal_state().unwrap();
    let x = spec.position();
    let config = MeasurementConfig {
        eta: 0.2,
        cutoff: Some(3.0),
        ..Default::default()
    };
    let (q, _) = measure_and_reconstruct(&ts, &MonotoneFunction::wigner_yanase(), &x, &config).unwrap();
    let skew = 0.125 * q.scalar();
    let want = oscillator_oracle(&spec, 0.5).unwrap().skew_x;
    assert!(common::rel(skew, want) < 0.02, "{skew} vs {want}");
}

#[test]
fn off_resonant_sweep_matches_admittance() {
    let (ts, a) = qubit();
    let lines = response_lines(&ts, ResponseKind::Current, &a, &a).unwrap();
    for k in 0..20 {
        let w = 0.1 + 0.05 * k as f64;
        if (w - 1.3).abs() < 0.15 {
            continue;
        }
        let p = DriveProtocol::adiabatic(a.clone(), 1e-4, w, 0.05);
        let r = measure_point(&ts, &p, &a, Observable::Current).unwrap();
        let want = broadened(&lines, 0.05, w);
        assert!((r.chi_hat - want).norm() <= 0.01 * want.norm(), "{w}: {} vs {want}", r.chi_hat);
    }
}

#[test]
fn linearity_on_shipped_examples() {
    let systems = [qubit(), four_level()];
    for (ts, b) in &systems {
        let f = MonotoneFunction::sld();
        let probe = solve_probe_field(ts, &f, b).unwrap();
        for (drive, observable) in [(b, Observable::Displacement), (&probe, Observable::Current)] {
            let amp = 1e-4 / max_abs(drive);
            for w in [0.3, 0.9, 1.7] {
                let p = DriveProtocol::adiabatic(drive.clone(), amp, w, 0.1);
                let cert = linearity_certificate(ts, &p, drive, observable).unwrap();
                assert!(cert < 0.005, "{observable:?} at {w}: {cert}");
            }
        }
    }
}

#[test]
fn evolution_stays_unitary() {
    let (ts, b) = four_level();
    let mut p = DriveProtocol::half_cosine(b.clone(), 0.05, 0.9);
    p.max_dt = Some(0.005);
    let s = evolve_driven(&ts, &p, &b).unwrap();
    assert!(s.steps >= 10_000, "{}", s.steps);
    assert!(s.max_trace_drift <= 1e-10);
    assert!(s.max_hermiticity_drift <= 1e-10);
    assert!(s.eigenvalue_drift <= 1e-10, "{:e}", s.eigenvalue_drift);
}

#[test]
fn resonant_closed_drive_is_refused() {
    let ts = ThermalState::new(&HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1.0, 1.0).unwrap();
    let x = qfi_core::linalg::pauli_x();
    let p = DriveProtocol::half_cosine(x.clone(), 1e-3, 1.0);
    let e = measure_point(&ts, &p, &x, Observable::Displacement).unwrap_err();
    assert!(e.to_string().contains("resonance"), "{e}");
}
