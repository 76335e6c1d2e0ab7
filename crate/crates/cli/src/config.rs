use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// Defaults read from `--config`; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must name the subcommand being run.
    pub subcommand: Option<String>,
    pub f: Option<String>,
    pub beta: Option<f64>,
    pub hbar: Option<f64>,
    pub eta: Option<f64>,
    pub grid: Option<String>,
    pub tolerance: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text).with_context(|| format!("config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("hbar", self.hbar), ("eta", self.eta), ("tolerance", self.tolerance)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let Some(g) = &self.grid {
            Grid::parse(g)?;
        }
        Ok(())
    }

    pub fn check_subcommand(&self, name: &str) -> Result<()> {
        match &self.subcommand {
            Some(s) if s != name => bail!("config is for subcommand `{s}`, not `{name}`"),
            _ => Ok(()),
        }
    }
}

pub fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        bail!("--{name} must be a positive finite number, got {v}");
    }
    Ok(v)
}

/// `min:max:count`, inclusive, or a single value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("grid `{text}`: cannot parse `{s}`"))
        };
        let points = match parts.as_slice() {
            [v] => vec![num(v)?],
            [lo, hi, n] => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                let n: usize = n
                    .trim()
                    .parse()
                    .with_context(|| format!("grid `{text}`: count must be a positive integer"))?;
                if n == 0 || (n > 1 && !(hi > lo)) {
                    bail!("grid `{text}`: need count >= 1 and max > min");
                }
                if n == 1 {
                    vec![lo]
                } else {
                    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
                }
            }
            _ => bail!("grid `{text}`: expected min:max:count"),
        };
        Ok(Self { points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(Grid::parse("0.1:0.5:5").unwrap().points.len(), 5);
        assert_eq!(Grid::parse("0.5").unwrap().points, vec![0.5]);
        assert!(Grid::parse("1:0:3").is_err());
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("0:1:x").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"beta": 1, "temperature": 2}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"beta": 1, "f": "wy"}"#).unwrap();
        assert_eq!(c.f.as_deref(), Some("wy"));
        let c: RunConfig = serde_json::from_str(r#"{"beta": -1}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
