use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed hyperparameters of the dynamical system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    /// Shape offset `ε0θ` of the gamma states; zero gives the sparse variant.
    pub eps_theta: f64,
    /// Shape offset `ε0λ` of the component weights.
    pub eps_lambda: f64,
    pub alpha0: f64,
    pub a0: f64,
    pub b0: f64,
    /// Number of components `K`.
    pub k: usize,
    /// One shared `ρ` instead of one per time step.
    pub stationary: bool,
}

impl Default for ModelHyper {
    fn default() -> Self {
        ModelHyper {
            eps_theta: 1.0,
            eps_lambda: 1.0,
            alpha0: 10.0,
            a0: 0.01,
            b0: 0.01,
            k: 100,
            stationary: false,
        }
    }
}

const KEYS: [&str; 7] = ["eps_theta", "eps_lambda", "alpha0", "a0", "b0", "K", "stationary"];

impl ModelHyper {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")))
            }
        };
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be a finite value > 0, got {v}")))
            }
        };
        nonneg("eps_theta", self.eps_theta)?;
        nonneg("eps_lambda", self.eps_lambda)?;
        pos("alpha0", self.alpha0)?;
        pos("a0", self.a0)?;
        pos("b0", self.b0)?;
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses `key=value` lines; unspecified keys keep their defaults.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut h = ModelHyper::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {raw:?}", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), n + 1).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
            }
            let real = || {
                value
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("line {}: {key} is not a number: {value:?}", n + 1)))
            };
            match key {
                "eps_theta" => h.eps_theta = real()?,
                "eps_lambda" => h.eps_lambda = real()?,
                "alpha0" => h.alpha0 = real()?,
                "a0" => h.a0 = real()?,
                "b0" => h.b0 = real()?,
                "K" => {
                    h.k = value
                        .parse()
                        .map_err(|_| Error::Config(format!("line {}: K is not a positive integer", n + 1)))?
                }
                "stationary" => {
                    h.stationary = match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        _ => return Err(Error::Config(format!("line {}: stationary must be true or false", n + 1))),
                    }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key}; expected one of {}",
                        n + 1,
                        KEYS.join(", ")
                    )))
                }
            }
        }
        h.validate()?;
        Ok(h)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eps_theta={}", self.eps_theta);
        let _ = writeln!(s, "eps_lambda={}", self.eps_lambda);
        let _ = writeln!(s, "alpha0={}", self.alpha0);
        let _ = writeln!(s, "a0={}", self.a0);
        let _ = writeln!(s, "b0={}", self.b0);
        let _ = writeln!(s, "K={}", self.k);
        let _ = writeln!(s, "stationary={}", self.stationary);
        s
    }
}
