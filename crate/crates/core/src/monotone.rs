//! Operator monotone functions `f` with `f(1) = 1`: the catalog used by the
//! quantum Fisher information family, duals, FDT coefficients and
//! generalized means.
//!
//! Every function is evaluated three ways: `eval(x)`, `eval_log(u) = f(e^u)`
//! and `ln_eval_log(u) = ln f(e^u)`. The superoperator kernels only use the
//! last one, so population ratios never overflow.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{QfiError, Result};
use crate::linalg::{ln_abs_expm1, ln_add_exp};

/// Below this `|x - 1|` (equivalently `|ln x|`) removable singularities switch
/// to a Taylor expansion.
pub const SERIES_RADIUS: f64 = 1e-4;

const CUSTOM_NORMALIZATION_TOL: f64 = 1e-12;
const STANDARD_TOL: f64 = 1e-12;
const ZERO_PROBE: f64 = 1e-12;
const ZERO_PROBE_CHECK: f64 = 1e-10;

/// Anything that can weight a superoperator kernel `p_i g(p_j / p_i)`.
pub trait KernelFunction {
    /// `ln g(e^u)`; `-inf` where `g` vanishes.
    fn ln_eval_log(&self, u: f64) -> f64;
}

#[derive(Clone)]
pub struct MonotoneFunction {
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Sld,
    Bkm,
    Rld,
    Lld,
    Harmonic,
    WignerYanase,
    Wyd(f64),
    Custom(Arc<CustomFunction>),
    Dual(Box<MonotoneFunction>),
}

struct CustomFunction {
    source: String,
    expr: meval::Expr,
}

struct Variable(f64);

impl meval::ContextProvider for Variable {
    fn get_var(&self, name: &str) -> Option<f64> {
        (name == "x").then_some(self.0)
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, meval::FuncEvalError> {
        let unary = |g: fn(f64) -> f64| match args {
            [a] => Ok(g(*a)),
            [] => Err(meval::FuncEvalError::TooFewArguments),
            _ => Err(meval::FuncEvalError::TooManyArguments),
        };
        match name {
            "log" => unary(f64::ln),
            "exp" => unary(f64::exp),
            "sqrt" => unary(f64::sqrt),
            _ => Err(meval::FuncEvalError::UnknownFunction),
        }
    }
}

impl CustomFunction {
    fn raw(&self, x: f64) -> f64 {
        self.expr.eval_with_context(Variable(x)).unwrap_or(f64::NAN)
    }

    fn eval(&self, x: f64) -> f64 {
        let v = self.raw(x);
        if !v.is_finite() && (x - 1.0).abs() < SERIES_RADIUS {
            // Removable singularity at 1: Richardson on symmetric averages.
            let avg = |h: f64| 0.5 * (self.raw((-h).exp()) + self.raw(h.exp()));
            return (4.0 * avg(5e-4) - avg(1e-3)) / 3.0;
        }
        v
    }
}

impl fmt::Debug for MonotoneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MonotoneFunction({})", self.name())
    }
}

impl fmt::Display for MonotoneFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `(e^u - 1)/u` for `|u|` below the series radius.
fn expm1_over_u_series(u: f64) -> f64 {
    1.0 + u * (0.5 + u * (1.0 / 6.0 + u / 24.0))
}

fn wyd_series(alpha: f64, u: f64) -> f64 {
    let a2 = alpha * (1.0 - alpha);
    1.0 + u * (0.5 + u * ((2.0 + a2) / 12.0 + u * (1.0 + a2) / 24.0))
}

impl MonotoneFunction {
    /// Symmetric logarithmic derivative, `(x + 1)/2`.
    pub fn sld() -> Self {
        Self { kind: Kind::Sld }
    }

    /// Bogoliubov-Kubo-Mori, `(x - 1)/ln x`.
    pub fn bkm() -> Self {
        Self { kind: Kind::Bkm }
    }

    /// Right logarithmic derivative, `x`.
    pub fn rld() -> Self {
        Self { kind: Kind::Rld }
    }

    /// Left logarithmic derivative, `1`.
    pub fn lld() -> Self {
        Self { kind: Kind::Lld }
    }

    /// Real part of the RLD, `2x/(x + 1)`.
    pub fn harmonic() -> Self {
        Self { kind: Kind::Harmonic }
    }

    /// Wigner-Yanase skew information, `(√x + 1)²/4`.
    pub fn wigner_yanase() -> Self {
        Self {
            kind: Kind::WignerYanase,
        }
    }

    /// The six named entries of the coefficient table.
    pub fn catalog() -> Vec<Self> {
        vec![
            Self::sld(),
            Self::bkm(),
            Self::rld(),
            Self::lld(),
            Self::harmonic(),
            Self::wigner_yanase(),
        ]
    }

    /// A user-supplied closed form in `x` using `+ - * / ^`, `log`, `exp`,
    /// `sqrt`. Only scalar sanity conditions are checked; operator
    /// monotonicity is taken on trust.
    pub fn custom(source: &str) -> Result<Self> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e: meval::Error| QfiError::InvalidExpression(format!("{source}: {e}")))?;
        if let Err(e) = expr.eval_with_context(Variable(1.0)) {
            return Err(QfiError::InvalidExpression(format!("{source}: {e}")));
        }
        let f = Self {
            kind: Kind::Custom(Arc::new(CustomFunction {
                source: source.to_string(),
                expr,
            })),
        };
        f.validate()?;
        Ok(f)
    }

    /// Parses a CLI name: `sld`, `bkm`, `rld`, `lld`, `harmonic`, `wy`,
    /// `wyd:ALPHA` or `expr:...`.
    pub fn parse(name: &str) -> Result<Self> {
        let trimmed = name.trim();
        if let Some(alpha) = trimmed.strip_prefix("wyd:") {
            let a: f64 = alpha.trim().parse().map_err(|_| QfiError::UnknownFunction {
                name: name.to_string(),
            })?;
            return wyd(a);
        }
        if let Some(src) = trimmed.strip_prefix("expr:") {
            return Self::custom(src.trim().trim_matches('"'));
        }
        match trimmed.to_ascii_lowercase().as_str() {
            "sld" => Ok(Self::sld()),
            "bkm" => Ok(Self::bkm()),
            "rld" => Ok(Self::rld()),
            "lld" => Ok(Self::lld()),
            "harmonic" => Ok(Self::harmonic()),
            "wy" => Ok(Self::wigner_yanase()),
            _ => Err(QfiError::UnknownFunction {
                name: name.to_string(),
            }),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Sld => "sld".into(),
            Kind::Bkm => "bkm".into(),
            Kind::Rld => "rld".into(),
            Kind::Lld => "lld".into(),
            Kind::Harmonic => "harmonic".into(),
            Kind::WignerYanase => "wy".into(),
            Kind::Wyd(a) => format!("wyd:{a}"),
            Kind::Custom(c) => format!("expr:{}", c.source),
            Kind::Dual(g) => format!("dual({})", g.name()),
        }
    }

    /// `α` when this is a member of the Wigner-Yanase-Dyson family.
    pub fn wyd_alpha(&self) -> Option<f64> {
        match self.kind {
            Kind::Wyd(a) => Some(a),
            Kind::WignerYanase => Some(0.5),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Sld => 0.5 * (x + 1.0),
            Kind::Rld => x,
            Kind::Lld => 1.0,
            Kind::Harmonic => 2.0 * x / (x + 1.0),
            Kind::WignerYanase => {
                let s = x.sqrt() + 1.0;
                0.25 * s * s
            }
            Kind::Bkm => {
                if (x - 1.0).abs() < SERIES_RADIUS {
                    expm1_over_u_series(x.ln())
                } else {
                    (x - 1.0) / x.ln()
                }
            }
            Kind::Wyd(_) => self.eval_log(x.ln()),
            Kind::Custom(c) => c.eval(x),
            Kind::Dual(g) => x * g.eval(1.0 / x),
        }
    }

    /// `f(e^u)`
    pub fn eval_log(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Sld => 0.5 * (u.exp() + 1.0),
            Kind::Rld => u.exp(),
            Kind::Lld => 1.0,
            Kind::Harmonic => 2.0 / (1.0 + (-u).exp()),
            Kind::WignerYanase => {
                let s = (0.5 * u).exp() + 1.0;
                0.25 * s * s
            }
            Kind::Bkm => {
                if u.abs() < SERIES_RADIUS {
                    expm1_over_u_series(u)
                } else if u < 700.0 {
                    u.exp_m1() / u
                } else {
                    self.ln_eval_log(u).exp()
                }
            }
            Kind::Wyd(a) => {
                if u.abs() < SERIES_RADIUS {
                    wyd_series(*a, u)
                } else {
                    self.ln_eval_log(u).exp()
                }
            }
            Kind::Custom(c) => c.eval(u.exp()),
            Kind::Dual(g) => u.exp() * g.eval_log(-u),
        }
    }

    /// `ln f(e^u)`
    pub fn ln_eval_log(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Sld => ln_add_exp(u, 0.0) - LN_2,
            Kind::Rld => u,
            Kind::Lld => 0.0,
            Kind::Harmonic => LN_2 - ln_add_exp(0.0, -u),
            Kind::WignerYanase => 2.0 * (ln_add_exp(0.5 * u, 0.0) - LN_2),
            Kind::Bkm => {
                if u.abs() < SERIES_RADIUS {
                    expm1_over_u_series(u).ln()
                } else {
                    ln_abs_expm1(u) - u.abs().ln()
                }
            }
            Kind::Wyd(a) => {
                if u.abs() < SERIES_RADIUS {
                    wyd_series(*a, u).ln()
                } else {
                    (a * (1.0 - a)).ln() + 2.0 * ln_abs_expm1(u)
                        - ln_abs_expm1(a * u)
                        - ln_abs_expm1((1.0 - a) * u)
                }
            }
            Kind::Custom(c) => c.eval(u.exp()).ln(),
            Kind::Dual(g) => u + g.ln_eval_log(-u),
        }
    }

    /// `lim_{x→0+} f(x)`; exact for the catalog, extrapolated otherwise.
    pub fn at_zero(&self) -> f64 {
        match &self.kind {
            Kind::Sld => 0.5,
            Kind::Bkm | Kind::Rld | Kind::Harmonic => 0.0,
            Kind::Lld => 1.0,
            Kind::WignerYanase => 0.25,
            Kind::Wyd(a) => a * (1.0 - a),
            Kind::Custom(_) | Kind::Dual(_) => {
                let near = self.eval(ZERO_PROBE);
                let check = self.eval(ZERO_PROBE_CHECK);
                let slope = (check - near) / (ZERO_PROBE_CHECK - ZERO_PROBE);
                let extrapolated = near - slope * ZERO_PROBE;
                if (check - near).abs() > 1e-6 * near.abs().max(1e-300) && (check - near).abs() > 1e-9 {
                    log::warn!(
                        "f(0+) for {} is not settled: f(1e-12)={near:e}, f(1e-10)={check:e}",
                        self.name()
                    );
                }
                extrapolated.max(0.0)
            }
        }
    }

    /// `f̃(x) = x f(1/x)`
    pub fn dual(&self) -> Self {
        let kind = match &self.kind {
            Kind::Rld => Kind::Lld,
            Kind::Lld => Kind::Rld,
            Kind::Wyd(a) => Kind::Wyd(1.0 - a),
            Kind::Dual(g) => return (**g).clone(),
            Kind::Custom(_) => Kind::Dual(Box::new(self.clone())),
            k => k.clone(),
        };
        Self { kind }
    }

    /// `f = f̃`. Known exactly for the catalog; checked on a grid otherwise.
    pub fn is_standard(&self) -> bool {
        match &self.kind {
            Kind::Rld | Kind::Lld => false,
            Kind::Custom(_) | Kind::Dual(_) => self.standard_defect() <= STANDARD_TOL,
            _ => true,
        }
    }

    /// `max |f - f̃| / max(1, |f|)` over a log grid on `[1e-6, 1e6]`.
    pub fn standard_defect(&self) -> f64 {
        let dual = self.dual();
        log_grid(1e-6, 1e6, 100)
            .map(|x| {
                let a = self.eval(x);
                (a - dual.eval(x)).abs() / a.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Scalar necessary conditions: normalization, positivity and
    /// monotonicity on a log grid over `[1e-8, 1e8]`.
    pub fn validate(&self) -> Result<()> {
        let one = self.eval(1.0);
        if !((one - 1.0).abs() <= CUSTOM_NORMALIZATION_TOL) {
            return Err(QfiError::InvalidExpression(format!(
                "{}: f(1) = {one}, expected 1",
                self.name()
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for x in log_grid(1e-8, 1e8, 161) {
            let v = self.eval(x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(QfiError::InvalidExpression(format!(
                    "{}: f({x:e}) = {v} is not positive",
                    self.name()
                )));
            }
            if v < prev * (1.0 - 1e-12) {
                return Err(QfiError::InvalidExpression(format!(
                    "{}: f decreases near x = {x:e}",
                    self.name()
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

impl KernelFunction for MonotoneFunction {
    fn ln_eval_log(&self, u: f64) -> f64 {
        MonotoneFunction::ln_eval_log(self, u)
    }
}

/// Log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
}

pub fn dual(f: &MonotoneFunction) -> MonotoneFunction {
    f.dual()
}

/// The Wigner-Yanase-Dyson function
/// `f_α(x) = α(1-α)(x-1)² / ((x^α - 1)(x^{1-α} - 1))`.
pub fn wyd(alpha: f64) -> Result<MonotoneFunction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(QfiError::InvalidParameter(format!("WYD alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(MonotoneFunction {
        kind: Kind::Wyd(alpha),
    })
}

/// `c_f(α) = f(e^{-α}) / (1 - e^{-α})` with `α = βħω`.
pub fn fdt_coefficient(f: &MonotoneFunction, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Err(QfiError::SingularCoefficient);
    }
    let magnitude = (f.ln_eval_log(-alpha) - ln_abs_expm1(-alpha)).exp();
    Ok(magnitude.copysign(alpha))
}

/// `ħω c_f(βħω)`, continued to `1/β` at `ω = 0`.
pub fn energy_coefficient(f: &MonotoneFunction, beta: f64, hbar: f64, omega: f64) -> f64 {
    if omega == 0.0 {
        return 1.0 / beta;
    }
    let alpha = beta * hbar * omega;
    hbar * omega * fdt_coefficient(f, alpha).unwrap_or(f64::NAN)
}

/// `(n̄ + 1) f(n̄ / (n̄ + 1))`, the generalized mean of `n̄` and `n̄ + 1`.
pub fn generalized_mean(f: &MonotoneFunction, nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(QfiError::InvalidParameter(format!("nbar must be >= 0, got {nbar}")));
    }
    if nbar == 0.0 {
        return Ok(f.at_zero());
    }
    Ok((nbar + 1.0) * f.eval(nbar / (nbar + 1.0)))
}

/// `g(x) = (x - 1)² / f(x)`, the kernel of the unitary-model Fisher
/// information as a covariance. Not monotone in general.
#[derive(Debug, Clone)]
pub struct CovarianceWeight {
    f: MonotoneFunction,
}

pub fn qfi_to_covariance_function(f: &MonotoneFunction) -> CovarianceWeight {
    CovarianceWeight { f: f.clone() }
}

impl CovarianceWeight {
    pub fn function(&self) -> &MonotoneFunction {
        &self.f
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 1.0 {
            return 0.0;
        }
        let d = x - 1.0;
        d * d / self.f.eval(x)
    }

    pub fn eval_log(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.ln_eval_log(u).exp()
    }
}

impl KernelFunction for CovarianceWeight {
    fn ln_eval_log(&self, u: f64) -> f64 {
        if u == 0.0 {
            return f64::NEG_INFINITY;
        }
        2.0 * ln_abs_expm1(u) - self.f.ln_eval_log(u)
    }
}
