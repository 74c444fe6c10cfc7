//! Held-out predictive scoring.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samples::PosteriorSampleSet;
use crate::special::functions::ln_gamma;
use crate::tensor::{HoldoutMask, SparseCountSequence, Subset};

/// Largest number of cells scored per held-out step.
pub const MAX_SCORED_CELLS: u128 = 1 << 26;

/// `ln Pois(y; μ)` via `ln Γ`; `μ = 0` gives `0` for `y = 0` and `-∞` otherwise.
pub fn poisson_log_pmf(y: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let yf = y as f64;
    yf * mu.ln() - mu - ln_gamma(yf + 1.0)
}

/// `ln((1/n) Σ e^{x_i})`, stable for any finite inputs.
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|x| (x - max).exp()).sum();
    max + (sum / xs.len() as f64).ln()
}

/// Information rate over one subset of held-out cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub subset: Subset,
    /// Nats per held-out cell.
    pub rate: f64,
    pub n_cells: u64,
    /// Held-out steps scored.
    pub steps: Vec<usize>,
}

/// Running log-sum-exp per cell.
struct Accumulator {
    max: Vec<f64>,
    scaled: Vec<f64>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            max: vec![f64::NEG_INFINITY; n],
            scaled: vec![0.0; n],
        }
    }

    fn add(&mut self, i: usize, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max[i] {
            self.scaled[i] += (x - self.max[i]).exp();
        } else {
            self.scaled[i] = self.scaled[i] * (self.max[i] - x).exp() + 1.0;
            self.max[i] = x;
        }
    }

    fn log_sum(&self, i: usize) -> f64 {
        if self.max[i] == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max[i] + self.scaled[i].ln()
        }
    }
}

/// `R(Δ) = -(1/|Δ|) Σ_{(t,i) ∈ Δ} ln[(1/S) Σ_s Pois(y^(t)_i; μ^(t)_{i,s})]`.
///
/// `Δ` is every cell, zeros included, of the held-out steps in `subset`.
/// The archive must have been fit under the same mask.
pub fn information_rate(
    samples: &PosteriorSampleSet,
    data: &SparseCountSequence,
    mask: &HoldoutMask,
    subset: Subset,
) -> Result<RateReport> {
    if samples.is_empty() {
        return Err(Error::Config("sample archive is empty".into()));
    }
    if samples.mask.as_ref() != Some(mask) {
        return Err(Error::HoldoutMismatch(
            "archive was fit under a different held-out mask".into(),
        ));
    }
    if &samples.schema != data.schema() {
        return Err(Error::Dimension("archive and data shapes differ".into()));
    }
    let steps = mask.steps(subset);
    if steps.is_empty() {
        return Err(Error::EmptyHoldout(format!("no {subset} steps in the mask")));
    }
    let cells = data.schema().cells_per_step();
    if cells > MAX_SCORED_CELLS {
        return Err(Error::Config(format!("{cells} cells per step exceeds the scoring limit")));
    }
    let cells = cells as usize;
    let dims = data.dims();
    let n_s = samples.len() as f64;

    let mut total = 0.0;
    for &t in &steps {
        let mut y = vec![0u64; cells];
        for (idx, count) in data.step(t).iter() {
            let lin = idx.iter().zip(dims).fold(0usize, |acc, (&i, &d)| acc * d + i as usize);
            y[lin] = count;
        }
        let mut acc = Accumulator::new(cells);
        for s in &samples.samples {
            let mu = s.params.step_rates(t);
            for (i, (&yi, &m)) in y.iter().zip(&mu).enumerate() {
                acc.add(i, poisson_log_pmf(yi, m));
            }
        }
        for i in 0..cells {
            total -= acc.log_sum(i) - n_s.ln();
        }
    }
    let n_cells = (cells * steps.len()) as u64;
    Ok(RateReport {
        subset,
        rate: total / n_cells as f64,
        n_cells,
        steps,
    })
}

/// `baseline_rate - model_rate`.
pub fn gain(model_rate: f64, baseline_rate: f64) -> f64 {
    baseline_rate - model_rate
}

/// Gain of `model` over `baseline`; both must score the same cells.
pub fn information_gain(model: &RateReport, baseline: &RateReport) -> Result<f64> {
    if model.subset != baseline.subset || model.steps != baseline.steps || model.n_cells != baseline.n_cells {
        return Err(Error::HoldoutMismatch(
            "model and baseline rates cover different held-out cells".into(),
        ));
    }
    Ok(gain(model.rate, baseline.rate))
}

/// One row of the evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub dataset: String,
    pub mask_seed: u64,
    pub subset: Subset,
    pub rate: f64,
    pub gain: f64,
}

pub fn write_eval_csv(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mean_exp_is_stable() {
        assert!((log_mean_exp(&[1000.0, 1000.0]) - 1000.0).abs() < 1e-12);
        assert!((log_mean_exp(&[0.0, (3f64).ln()]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_mean_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn poisson_log_pmf_handles_large_arguments() {
        let v = poisson_log_pmf(1_000_000, 1e6);
        assert!(v.is_finite() && v < 0.0);
        assert_eq!(poisson_log_pmf(0, 0.0), 0.0);
        assert_eq!(poisson_log_pmf(1, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn accumulator_matches_batch() {
        let xs = [-3.0, 2.0, -700.0, 5.5, 1.0];
        let mut acc = Accumulator::new(1);
        for &x in &xs {
            acc.add(0, x);
        }
        let want = log_mean_exp(&xs) + (xs.len() as f64).ln();
        assert!((acc.log_sum(0) - want).abs() < 1e-13);
    }

    #[test]
    fn gain_is_antisymmetric() {
        assert_eq!(gain(1.2, 1.5), 1.5 - 1.2);
        assert_eq!(gain(1.0, 1.0), 0.0);
        assert_eq!(gain(0.7, 0.3), -gain(0.3, 0.7));
    }
}
