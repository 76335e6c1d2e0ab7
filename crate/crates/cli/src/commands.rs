use std::path::Path;

use anyhow::{bail, Context as _, Result};
use log::warn;
use num_complex::Complex64 as C64;
use qfi_core::covariance::{optimal_estimator, qfi_matrix, qfi_unitary_model, unitary_tangent, QfiResult};
use qfi_core::driven::{self, DriveProtocol, Observable};
use qfi_core::fdt::{self, IntegralForm, ReconstructionResult, ResponseData, FDT_TOLERANCE};
use qfi_core::io::{self, StateInput};
use qfi_core::linalg::CMatrix;
use qfi_core::response::{AdmittanceSpectrum, Provenance, ResponseKind};
use qfi_core::skew::{self, OscillatorSpec};
use qfi_core::spectral::{DensityMatrix, HermitianOperator, ThermalState};
use qfi_core::SuperoperatorKf;
use serde_json::{json, Value};

use crate::config::{positive, Grid};
use crate::report::{complex, estimate, matrix, opt, Report};
use crate::{
    ComputeArgs, Context, DiagnosticFailure, FdtCheckArgs, FormArg, KindArg, OscillatorArgs, ProbeFieldArgs,
    Quadrature, ReconstructArgs, ReconstructKind, SimulateArgs, SkewArgs, UncertaintyArgs,
};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn operator(path: &Path, name: &str) -> Result<CMatrix> {
    io::read_operator(&read(path)?, name).with_context(|| format!("operator {name} from {}", path.display()))
}

fn hermitian(path: &Path, name: &str) -> Result<HermitianOperator> {
    io::read_hermitian(&read(path)?, name).with_context(|| format!("operator {name} from {}", path.display()))
}

fn state(path: &Path) -> Result<StateInput> {
    io::read_state(&read(path)?, "state").with_context(|| format!("state from {}", path.display()))
}

fn spectrum(path: &Path) -> Result<AdmittanceSpectrum> {
    AdmittanceSpectrum::from_csv(&read(path)?, Provenance::File)
        .with_context(|| format!("spectrum {}", path.display()))
}

fn shown(path: &Path) -> Value {
    Value::from(path.display().to_string())
}

fn thermal(ctx: &Context, h: &Path, beta: Option<f64>) -> Result<ThermalState> {
    let h = hermitian(h, "H")?;
    Ok(ThermalState::new(&h, ctx.beta(beta)?, ctx.hbar)?)
}

fn echo_common(ctx: &Context, r: &mut Report) {
    r.input("hbar", ctx.hbar);
    if let Some(s) = ctx.seed {
        r.input("seed", s);
    }
}

fn oscillator_spec(ctx: &Context, text: &str, levels: Option<usize>) -> Result<OscillatorSpec> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("--oscillator `{text}`: expected m,omega,beta"))?;
    let [m, w, b] = v[..] else {
        bail!("--oscillator `{text}`: expected m,omega,beta");
    };
    let spec = OscillatorSpec::new(m, w, b, ctx.hbar)?;
    Ok(match levels {
        Some(n) => spec.with_levels(n)?,
        None => spec,
    })
}

fn qfi_fields(r: &mut Report, q: &QfiResult) {
    let error = q.diagnostics.error_estimate.or(q.diagnostics.two_path_residual).unwrap_or(0.0);
    r.result("J", estimate(q.scalar(), error))
        .result("matrix", matrix(&q.matrix))
        .result("method", q.method.as_str())
        .result("model", q.model.clone())
        .result("function", q.function.clone())
        .diagnostic("condition_number", opt(q.diagnostics.condition_number))
        .diagnostic("two_path_residual", opt(q.diagnostics.two_path_residual))
        .diagnostic("max_term", opt(q.diagnostics.max_term))
        .diagnostic("max_imaginary", q.max_imaginary());
}

pub fn compute(ctx: &Context, a: ComputeArgs) -> Result<()> {
    let f = ctx.f(&a.f)?;
    let rho = state(&a.state)?.density()?;
    if a.generator.is_empty() && a.tangent.is_empty() {
        bail!("give at least one --generator or --tangent");
    }
    let mut r = Report::new("compute");
    echo_common(ctx, &mut r);
    r.input("state", shown(&a.state)).input("f", f.name());
    r.input("generator", a.generator.iter().map(|p| shown(p)).collect::<Vec<_>>());
    r.input("tangent", a.tangent.iter().map(|p| shown(p)).collect::<Vec<_>>());

    let mut drho = Vec::new();
    for (k, p) in a.generator.iter().enumerate() {
        let b = operator(p, &format!("generator {k}"))?;
        rho.check_dim(&format!("generator {k}"), &b)?;
        drho.push(unitary_tangent(&rho, &b));
    }
    for (k, p) in a.tangent.iter().enumerate() {
        let d = operator(p, &format!("tangent {k}"))?;
        rho.check_dim(&format!("tangent {k}"), &d)?;
        drho.push(d);
    }
    let q = if a.generator.len() == 1 && a.tangent.is_empty() {
        qfi_unitary_model(&rho, &f, &operator(&a.generator[0], "generator 0")?)?
    } else {
        qfi_matrix(&rho, &f, &drho)?
    };
    qfi_fields(&mut r, &q);
    r.result("standard", f.is_standard());
    if a.estimator {
        if drho.len() != 1 {
            bail!("--estimator needs exactly one parameter");
        }
        let est = optimal_estimator(&rho, &f, &drho[0])?;
        let k = SuperoperatorKf::new(&rho, &f)?;
        let var = k.inner(&est.operator, &est.operator)?.re;
        r.result(
            "estimator",
            json!({
                "operator": matrix(&est.operator),
                "bound": est.bound,
                "variance_times_fisher": estimate(var * est.fisher, (var * est.fisher - 1.0).abs()),
            }),
        );
    }
    ctx.emit(&r.to_json())
}

pub fn fdt_check(ctx: &Context, a: FdtCheckArgs) -> Result<()> {
    let f = ctx.f(&a.f)?;
    let ts = thermal(ctx, &a.hamiltonian, a.beta)?;
    let am = operator(&a.a, "A")?;
    let an = match &a.b {
        Some(p) => operator(p, "B")?,
        None => am.clone(),
    };
    let tol = positive("tolerance", a.tolerance.or(ctx.config.tolerance).unwrap_or(FDT_TOLERANCE))?;
    let kind = match a.kind {
        KindArg::Current => ResponseKind::Current,
        KindArg::Displacement => ResponseKind::Displacement,
    };
    let rep = fdt::check_gfdt(&ts, &f, &am, &an, kind)?;
    let mut r = Report::new("fdt-check");
    echo_common(ctx, &mut r);
    r.input("h", shown(&a.hamiltonian))
        .input("beta", ts.beta())
        .input("f", f.name())
        .input("A", shown(&a.a))
        .input("B", a.b.as_deref().map_or(Value::Null, shown))
        .input("kind", if kind == ResponseKind::Current { "current" } else { "displacement" });
    let lines: Vec<Value> = rep
        .lines
        .iter()
        .map(|l| {
            json!({
                "omega": l.omega,
                "covariance": complex(l.covariance),
                "response": complex(l.response),
                "predicted_ratio": l.predicted.map_or(Value::Null, complex),
                "deviation": opt(l.deviation),
            })
        })
        .collect();
    let passes = rep.passes(tol);
    r.result("max_deviation", estimate(rep.max_deviation, tol))
        .result("passes", passes)
        .result("lines", lines)
        .diagnostic("insignificant_lines", rep.insignificant.len())
        .diagnostic("checked_lines", rep.lines.len());
    ctx.emit(&r.to_json())?;
    if !passes {
        return Err(DiagnosticFailure(format!(
            "generalized FDT deviation {:e} exceeds tolerance {tol:e}",
            rep.max_deviation
        ))
        .into());
    }
    Ok(())
}

fn reconstruction_fields(r: &mut Report, res: &ReconstructionResult) {
    r.result("value", estimate(res.value.re, res.error_estimate))
        .result("complex_value", complex(res.value))
        .result("method", res.method.as_str())
        .result(
            "form",
            match res.form {
                IntegralForm::Full => "full",
                IntegralForm::Simplified => "simplified",
            },
        );
    if let Some(q) = &res.quadrature {
        r.diagnostic(
            "quadrature",
            json!({
                "points": q.points,
                "omega_min": q.omega_min,
                "omega_max": q.omega_max,
                "eta": q.eta,
                "truncation_error": q.truncation_error,
                "discretization_error": q.discretization_error,
                "low_frequency_fill": q.low_frequency_fill,
                "truncation_flagged": q.truncation_flagged,
            }),
        );
    }
}

pub fn reconstruct(ctx: &Context, a: ReconstructArgs) -> Result<()> {
    let f = ctx.f(&a.f)?;
    let beta = ctx.beta(a.beta)?;
    let mut chi = spectrum(&a.chi)?;
    let mut rev = match &a.chi_reverse {
        Some(p) => Some(spectrum(p)?),
        None => None,
    };
    if let Some(eta) = a.eta.or(ctx.config.eta) {
        chi.eta = positive("eta", eta)?;
        if let Some(r) = rev.as_mut() {
            r.eta = eta;
        }
    }
    let form = match a.form {
        FormArg::Full => IntegralForm::Full,
        FormArg::Simplified => IntegralForm::Simplified,
    };
    let d = ResponseData::Spectrum(&chi);
    let dr = rev.as_ref().map_or(d, ResponseData::Spectrum);
    let res = match a.kind {
        ReconstructKind::Qfi => fdt::qfi_from_susceptibility(d, &f, beta, ctx.hbar)?,
        ReconstructKind::Current => fdt::covariance_from_admittance(d, dr, &f, beta, ctx.hbar, form)?,
        ReconstructKind::Displacement => fdt::covariance_from_susceptibility(d, dr, &f, beta, ctx.hbar, form)?,
    };
    let mut r = Report::new("reconstruct");
    echo_common(ctx, &mut r);
    r.input("chi", shown(&a.chi))
        .input("chi_reverse", a.chi_reverse.as_deref().map_or(Value::Null, shown))
        .input("f", f.name())
        .input("beta", beta)
        .input(
            "kind",
            match a.kind {
                ReconstructKind::Qfi => "qfi",
                ReconstructKind::Current => "current",
                ReconstructKind::Displacement => "displacement",
            },
        )
        .input("eta", chi.eta);
    reconstruction_fields(&mut r, &res);
    ctx.emit(&r.to_json())
}

pub fn skew(ctx: &Context, a: SkewArgs) -> Result<()> {
    let mut r = Report::new("skew");
    echo_common(ctx, &mut r);
    r.input("alpha", a.alpha);
    let (rho, obs, oracle): (DensityMatrix, CMatrix, Option<f64>) = match (&a.state, &a.oscillator) {
        (Some(p), None) => {
            let Some(ap) = &a.a else { bail!("--A is required with --state") };
            r.input("state", shown(p)).input("A", shown(ap));
            (state(p)?.density()?, operator(ap, "A")?, None)
        }
        (None, Some(text)) => {
            let spec = oscillator_spec(ctx, text, a.levels)?;
            let o = skew::oscillator_oracle(&spec, a.alpha)?;
            r.input("oscillator", text.as_str())
                .input("levels", spec.levels)
                .input("observable", if a.observable == Quadrature::X { "x" } else { "p" });
            let (op, exact) = match a.observable {
                Quadrature::X => (spec.position(), o.skew_x),
                Quadrature::P => (spec.momentum(), o.skew_p),
            };
            (spec.thermal_state()?.rho().clone(), op, Some(exact))
        }
        _ => bail!("give exactly one of --state or --oscillator"),
    };
    rho.check_dim("A", &obs)?;
    let direct = skew::wyd_skew_direct(&rho, a.alpha, &obs)?.value;
    let via = skew::wyd_skew_via_qfi(&rho, a.alpha, &obs)?.value;
    r.result("skew", estimate(direct, (direct - via).abs()))
        .result("skew_via_qfi", via)
        .result("variance", skew::variance(&rho, &obs)?)
        .result("uncertainty", skew::uncertainty_quantity(&rho, a.alpha, &obs)?)
        .diagnostic("two_path_difference", (direct - via).abs());
    if let Some(exact) = oracle {
        r.result("analytic", exact).diagnostic("analytic_difference", (direct - exact).abs());
    }
    if a.f.is_some() || ctx.config.f.is_some() {
        let f = ctx.f(&a.f)?;
        r.input("f", f.name());
        r.result("metric_adjusted", skew::metric_adjusted_skew(&rho, &f, &obs)?.value);
    }
    ctx.emit(&r.to_json())
}

pub fn uncertainty(ctx: &Context, a: UncertaintyArgs) -> Result<()> {
    let alphas = Grid::parse(a.alpha.as_deref().or(ctx.config.grid.as_deref()).unwrap_or("0.1:0.9:9"))?.points;
    let (rho, am, bm, spec) = match (&a.state, &a.oscillator) {
        (Some(p), None) => {
            let (Some(ap), Some(bp)) = (&a.a, &a.b) else { bail!("--A and --B are required with --state") };
            (state(p)?.density()?, operator(ap, "A")?, operator(bp, "B")?, None)
        }
        (None, Some(text)) => {
            let spec = oscillator_spec(ctx, text, a.levels)?;
            (spec.thermal_state()?.rho().clone(), spec.position(), spec.momentum(), Some(spec))
        }
        _ => bail!("give exactly one of --state or --oscillator"),
    };
    rho.check_dim("A", &am)?;
    rho.check_dim("B", &bm)?;
    let mut out = String::from("alpha,lhs,rhs,gap,satisfied");
    if spec.is_some() {
        out.push_str(",analytic_gap");
    }
    out.push('\n');
    for alpha in alphas {
        let y = skew::yanagi_check(&rho, alpha, &am, &bm)?;
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            alpha, y.lhs, y.rhs, y.gap, y.satisfied
        ));
        if let Some(s) = &spec {
            out.push_str(&format!(",{:.16e}", skew::oscillator_oracle(s, alpha)?.gap));
        }
        out.push('\n');
    }
    ctx.emit(&out)
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> Result<()> {
    let ts = thermal(ctx, &a.hamiltonian, a.beta)?;
    let probe = operator(&a.probe, "probe")?;
    let observed = match &a.observe {
        Some(p) => operator(p, "observable")?,
        None => probe.clone(),
    };
    let grid = match a.omega_grid.as_deref().or(ctx.config.grid.as_deref()) {
        Some(g) => Grid::parse(g)?.points,
        None => bail!("--omega-grid is required"),
    };
    if let Some(w) = grid.iter().find(|w| !(**w > 0.0)) {
        bail!("drive frequencies must be positive, got {w}");
    }
    let eta = match a.eta.or(ctx.config.eta) {
        Some(e) => Some(positive("eta", e)?),
        None => None,
    };
    let amplitude = positive("amplitude", a.amplitude)?;
    let protocols: Vec<DriveProtocol> = grid
        .iter()
        .map(|&w| match eta {
            Some(e) => DriveProtocol::adiabatic(probe.clone(), amplitude, w, e),
            None => DriveProtocol::half_cosine(probe.clone(), amplitude, w),
        })
        .collect();
    let observable = match a.kind {
        KindArg::Current => Observable::Current,
        KindArg::Displacement => Observable::Displacement,
    };
    let results = driven::sweep(&ts, &protocols, &observed, observable)?;
    for res in &results {
        if res.residual > 1e-3 {
            warn!("fit residual {:.3e} at omega = {}", res.residual, res.omega);
        }
    }
    let values: Vec<C64> = results.iter().map(|r| r.chi_hat).collect();
    let s = AdmittanceSpectrum::new(grid, values, eta.unwrap_or(0.0), Provenance::Simulated)?;
    ctx.emit(&s.to_csv())
}

pub fn oscillator(ctx: &Context, a: OscillatorArgs) -> Result<()> {
    let beta = ctx.beta(a.beta)?;
    let mut spec = OscillatorSpec::new(a.m, a.omega, beta, ctx.hbar)?;
    if let Some(n) = a.levels {
        spec = spec.with_levels(n)?;
    }
    let o = skew::oscillator_oracle(&spec, a.alpha)?;
    let rho = spec.thermal_state()?.rho().clone();
    let (x, p) = (spec.position(), spec.momentum());
    let ix = skew::wyd_skew_direct(&rho, a.alpha, &x)?.value;
    let ip = skew::wyd_skew_direct(&rho, a.alpha, &p)?.value;
    let y = skew::yanagi_check(&rho, a.alpha, &x, &p)?;
    let mut r = Report::new("oscillator");
    echo_common(ctx, &mut r);
    r.input("m", a.m)
        .input("omega", a.omega)
        .input("beta", beta)
        .input("alpha", a.alpha)
        .input("levels", spec.levels);
    r.result("I_x", estimate(o.skew_x, (ix - o.skew_x).abs()))
        .result("I_p", estimate(o.skew_p, (ip - o.skew_p).abs()))
        .result("V_x", o.variance_x)
        .result("V_p", o.variance_p)
        .result("U_x", o.uncertainty_x)
        .result("U_p", o.uncertainty_p)
        .result("lhs", estimate(o.lhs, (y.lhs - o.lhs).abs()))
        .result("rhs", o.rhs)
        .result("gap", estimate(o.gap, (y.gap - o.gap).abs()))
        .result(
            "truncated",
            json!({ "I_x": ix, "I_p": ip, "lhs": y.lhs, "rhs": y.rhs, "gap": y.gap }),
        )
        .diagnostic("tail_population_ratio", (-spec.alpha() * (spec.levels - 1) as f64).exp());
    ctx.emit(&r.to_json())
}

pub fn probe_field(ctx: &Context, a: ProbeFieldArgs) -> Result<()> {
    let f = ctx.f(&a.f)?;
    let ts = thermal(ctx, &a.hamiltonian, a.beta)?;
    let b = operator(&a.b, "B")?;
    ts.rho().check_dim("B", &b)?;
    let probe = fdt::solve_probe_field(&ts, &f, &b)?;
    let residual = fdt::probe_field_residual(&ts, &f, &b, &probe)?;
    if let Some(p) = &a.operator {
        std::fs::write(p, io::write_operator(&probe) + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let mut r = Report::new("probe-field");
    echo_common(ctx, &mut r);
    r.input("h", shown(&a.hamiltonian))
        .input("beta", ts.beta())
        .input("f", f.name())
        .input("B", shown(&a.b));
    r.result("probe", serde_json::to_value(io::OperatorJson::from_matrix(&probe))?)
        .result("residual", estimate(residual, FDT_TOLERANCE));
    ctx.emit(&r.to_json())
}
