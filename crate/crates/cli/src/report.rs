use num_complex::Complex64 as C64;
use qfi_core::linalg::CMatrix;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "qfi-report/1";

/// JSON report. Object keys serialize in sorted order, so identical runs
/// produce identical bytes.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub diagnostics: Map<String, Value>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Map::new(),
            results: Map::new(),
            diagnostics: Map::new(),
        }
    }

    pub fn input(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.into(), v.into());
        self
    }

    pub fn result(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.results.insert(key.into(), v.into());
        self
    }

    pub fn diagnostic(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.diagnostics.insert(key.into(), v.into());
        self
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "schema": SCHEMA,
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A value paired with its error estimate or tolerance.
pub fn estimate(value: f64, error: f64) -> Value {
    json!({ "value": value, "error": error })
}

pub fn complex(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn matrix(m: &CMatrix) -> Value {
    let part = |g: fn(&C64) -> f64| -> Value {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| g(&m[(i, j)])).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into()
    };
    json!({ "re": part(|z| z.re), "im": part(|z| z.im) })
}

pub fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, Value::from)
}
