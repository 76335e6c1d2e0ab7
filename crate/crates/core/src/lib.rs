//! Numerical engine for monotone quantum Fisher information, generalized
//! fluctuation-dissipation relations and metric adjusted skew information.

pub mod covariance;
pub mod driven;
pub mod error;
pub mod fdt;
pub mod io;
pub mod linalg;
pub mod monotone;
pub mod response;
pub mod skew;
pub mod spectral;

pub use covariance::{
    generalized_covariance, logarithmic_derivative, optimal_estimator, qfi_matrix, qfi_unitary_model,
    unitary_tangent, QfiResult, SuperoperatorKf,
};
pub use error::{QfiError, Result};
pub use linalg::CMatrix;
pub use monotone::MonotoneFunction;
pub use spectral::{DensityMatrix, HermitianOperator, ThermalState};
