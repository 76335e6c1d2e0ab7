use thiserror::Error;

pub type Result<T> = std::result::Result<T, QfiError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QfiError {
    #[error("operator is not Hermitian: worst violation {deviation:e} at row {row}, column {col}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("dimension mismatch: {what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density matrix trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("density matrix has negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("eigen-solver did not converge for a {dim}x{dim} operator")]
    EigenSolverFailed { dim: usize },

    #[error(
        "population floor violated: smallest population {min:e} is below the floor {floor:e} \
         (lower the floor explicitly to opt in)"
    )]
    PopulationFloor { min: f64, floor: f64 },

    #[error("state not thermalizable at finite beta: smallest eigenvalue {min:e}")]
    NotThermalizable { min: f64 },

    #[error("superoperator kernel underflow at (j={j}, i={i}): k = {value:e}")]
    KernelUnderflow { i: usize, j: usize, value: f64 },

    #[error("coefficient singular at zero frequency")]
    SingularCoefficient,

    #[error("parameter not identifiable: Fisher information {value:e}")]
    NotIdentifiable { value: f64 },

    #[error("divergence guard: term {term:e} for pair (i={i}, j={j}) exceeds {limit:e}")]
    Divergence {
        i: usize,
        j: usize,
        term: f64,
        limit: f64,
    },

    #[error("metric adjusted skew information undefined, f(0)=0 for {name}")]
    SkewUndefined { name: String },

    #[error(
        "generator has conserved off-diagonal component at (i={i}, j={j}); \
         parameter direction unreachable by this probe"
    )]
    UnreachableDirection { i: usize, j: usize },

    #[error("unknown monotone function `{name}`; catalog: sld, bkm, rld, lld, harmonic, wy, wyd:ALPHA, expr:\"...\"")]
    UnknownFunction { name: String },

    #[error("invalid monotone function expression: {0}")]
    InvalidExpression(String),

    #[error("oscillator truncation N={n} inadequate at this temperature; use at least N={suggested}")]
    TruncationInadequate { n: usize, suggested: usize },

    #[error("integrator step too large: local error {error:e} exceeds {tolerance:e}; try dt <= {suggested_dt:e}")]
    StepTooLarge {
        error: f64,
        tolerance: f64,
        suggested_dt: f64,
    },

    #[error("drive on resonance of closed system; detune or reduce window (trend ratio {trend:e})")]
    Resonance { trend: f64 },

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("format error: {0}")]
    Format(String),
}

impl QfiError {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            QfiError::EigenSolverFailed { .. }
                | QfiError::KernelUnderflow { .. }
                | QfiError::Divergence { .. }
                | QfiError::StepTooLarge { .. }
                | QfiError::Resonance { .. }
                | QfiError::InternalConsistency(_)
                | QfiError::NotIdentifiable { .. }
        )
    }
}
