use rand::Rng;
use serde::{Deserialize, Serialize};

use super::functions::{ln_bessel_i, ln_bessel_series, ln_gamma};
use super::table::DiscreteTable;
use crate::error::{Error, Result};

/// Bessel distribution on `{0, 1, 2, ...}` with
/// `P(n) ∝ (a/2)^(2n+v) / (n! Γ(n+v+1))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselParams {
    order: f64,
    scale: f64,
}

impl BesselParams {
    pub fn new(order: f64, scale: f64) -> Result<Self> {
        if !(order > -1.0) || !order.is_finite() {
            return Err(Error::domain(format!("Bessel order must exceed -1, got {order}")));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!("Bessel scale must be >= 0, got {scale}")));
        }
        Ok(BesselParams { order, scale })
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn half_scale_sq(&self) -> f64 {
        let half = 0.5 * self.scale;
        half * half
    }

    /// `P(n+1) / P(n)`.
    pub fn ratio(&self, n: u64) -> f64 {
        let n = n as f64;
        self.half_scale_sq() / ((n + 1.0) * (n + self.order + 1.0))
    }

    /// `(a/2) I_{v+1}(a) / I_v(a)`.
    pub fn mean(&self) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let ln_ratio = ln_bessel_i(self.order + 1.0, self.scale) - ln_bessel_i(self.order, self.scale);
        0.5 * self.scale * ln_ratio.exp()
    }

    /// Probability table anchored at the mode.
    pub fn table(&self) -> DiscreteTable {
        if self.scale == 0.0 {
            return DiscreteTable::point(0);
        }
        let v = self.order;
        let root = ((v * v + self.scale * self.scale).sqrt() - v - 2.0) / 2.0;
        let guess = root.max(0.0).ceil() as u64;
        DiscreteTable::build(0, guess, |n| self.ratio(n))
            .expect("Bessel mass ratios are finite for validated parameters")
    }
}

/// `ln P(n)` evaluated in log space; the normalizer is `I_v(a)` by series.
pub fn bessel_log_pmf(params: &BesselParams, n: u64) -> f64 {
    if params.scale == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let x = params.half_scale_sq();
    let nf = n as f64;
    nf * x.ln() - ln_gamma(nf + 1.0) - ln_gamma(nf + params.order + 1.0)
        - ln_bessel_series(params.order, x)
}

pub fn bessel_sample<R: Rng + ?Sized>(params: &BesselParams, rng: &mut R) -> u64 {
    if params.scale == 0.0 {
        return 0;
    }
    params.table().sample(rng)
}
