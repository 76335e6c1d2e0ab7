//! JSON formats for operators and states.
//!
//! Operators are `{"dim": n, "re": [[..]], "im": [[..]]}` with row-major
//! real and imaginary parts; `im` may be omitted for real matrices. A state
//! is either such an operator (a density matrix) or
//! `{"hamiltonian": <operator>, "beta": b}` with optional `"hbar"`.

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{QfiError, Result};
use crate::linalg::CMatrix;
use crate::spectral::{DensityMatrix, HermitianOperator, ThermalState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl OperatorJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |part: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    /// Checks the declared dimension against both arrays; `name` labels errors.
    pub fn to_matrix(&self, name: &str) -> Result<CMatrix> {
        let n = self.dim;
        if n == 0 {
            return Err(QfiError::Format(format!("{name}: dim must be positive")));
        }
        let check = |part: &str, rows: &[Vec<f64>]| -> Result<()> {
            if rows.len() != n {
                return Err(QfiError::Format(format!(
                    "{name}: `{part}` has {} rows, dim is {n}",
                    rows.len()
                )));
            }
            for (i, r) in rows.iter().enumerate() {
                if r.len() != n {
                    return Err(QfiError::Format(format!(
                        "{name}: `{part}` row {i} has {} entries, dim is {n}",
                        r.len()
                    )));
                }
            }
            Ok(())
        };
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        }))
    }
}

/// Parses JSON; syntax errors carry line and column.
pub fn parse_json<T: DeserializeOwned>(text: &str, name: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| QfiError::Format(format!("{name}: {e}")))
}

pub fn read_operator(text: &str, name: &str) -> Result<CMatrix> {
    parse_json::<OperatorJson>(text, name)?.to_matrix(name)
}

pub fn read_hermitian(text: &str, name: &str) -> Result<HermitianOperator> {
    HermitianOperator::new(read_operator(text, name)?)
}

pub fn write_operator(m: &CMatrix) -> String {
    serde_json::to_string_pretty(&OperatorJson::from_matrix(m)).expect("operator serializes")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalJson {
    hamiltonian: OperatorJson,
    beta: f64,
    #[serde(default)]
    hbar: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum StateInput {
    Density(DensityMatrix),
    Thermal {
        hamiltonian: HermitianOperator,
        beta: f64,
        hbar: Option<f64>,
    },
}

impl StateInput {
    pub fn density(&self) -> Result<DensityMatrix> {
        match self {
            StateInput::Density(rho) => Ok(rho.clone()),
            StateInput::Thermal { hamiltonian, beta, hbar } => {
                Ok(ThermalState::new(hamiltonian, *beta, hbar.unwrap_or(1.0))?.rho().clone())
            }
        }
    }

    /// Thermal form. A bare density matrix needs `beta` to define its
    /// effective Hamiltonian; a stored `beta` or `hbar` wins over the
    /// defaults passed here.
    pub fn thermal(&self, beta: Option<f64>, hbar: f64) -> Result<ThermalState> {
        match self {
            StateInput::Density(rho) => {
                let beta = beta.ok_or_else(|| {
                    QfiError::InvalidParameter("a density-matrix state needs --beta for its effective Hamiltonian".into())
                })?;
                ThermalState::from_density(rho, beta, hbar)
            }
            StateInput::Thermal {
                hamiltonian,
                beta: b,
                hbar: h,
            } => ThermalState::new(hamiltonian, *b, h.unwrap_or(hbar)),
        }
    }
}

pub fn read_state(text: &str, name: &str) -> Result<StateInput> {
    let value: serde_json::Value = parse_json(text, name)?;
    if value.get("hamiltonian").is_some() {
        let t: ThermalJson = serde_json::from_value(value).map_err(|e| QfiError::Format(format!("{name}: {e}")))?;
        if !(t.beta > 0.0) || !t.beta.is_finite() {
            return Err(QfiError::InvalidParameter(format!("{name}: beta must be > 0, got {}", t.beta)));
        }
        Ok(StateInput::Thermal {
            hamiltonian: HermitianOperator::new(t.hamiltonian.to_matrix(name)?)?,
            beta: t.beta,
            hbar: t.hbar,
        })
    } else {
        let op: OperatorJson = serde_json::from_value(value).map_err(|e| QfiError::Format(format!("{name}: {e}")))?;
        Ok(StateInput::Density(DensityMatrix::new(op.to_matrix(name)?)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_y, max_abs};

    #[test]
    fn operator_round_trip_is_exact() {
        let m = pauli_y() * C64::new(0.1, 0.0) + CMatrix::identity(2, 2) * C64::new(1.0 / 3.0, 0.0);
        let back = read_operator(&write_operator(&m), "B").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = read_operator("{\"dim\": 2,\n \"re\": [[1, 0], [0 1]]}", "H").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 2") && msg.contains("column"), "{msg}");
    }

    #[test]
    fn shape_and_hermiticity_are_checked() {
        let e = read_operator(r#"{"dim": 2, "re": [[1, 0]]}"#, "A").unwrap_err();
        assert!(e.to_string().contains("A: `re` has 1 rows"));
        let e = read_hermitian(r#"{"dim": 2, "re": [[1, 0.5], [0, 1]]}"#, "A").unwrap_err();
        assert!(matches!(e, QfiError::NotHermitian { .. }));
        assert!(read_operator(r#"{"dim": 1, "re": [[1]], "extra": 1}"#, "A").is_err());
    }

    #[test]
    fn thermal_and_density_states() {
        let t = read_state(r#"{"hamiltonian": {"dim": 2, "re": [[0, 0], [0, 1]]}, "beta": 2}"#, "s").unwrap();
        let rho = t.density().unwrap();
        let p1 = 1.0 / (1.0 + 2f64.exp());
        assert!((rho.matrix()[(1, 1)].re - p1).abs() < 1e-15);
        let d = read_state(r#"{"dim": 2, "re": [[0.75, 0], [0, 0.25]]}"#, "s").unwrap();
        assert!(d.thermal(None, 1.0).is_err());
        let ts = d.thermal(Some(1.0), 1.0).unwrap();
        assert!(max_abs(&(ts.rho().matrix() - d.density().unwrap().matrix())) < 1e-14);
        let e = read_state(r#"{"hamiltonian": {"dim": 1, "re": [[0]]}, "beta": -1}"#, "s").unwrap_err();
        assert!(matches!(e, QfiError::InvalidParameter(_)));
    }
}
