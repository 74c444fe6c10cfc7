//! Joint-distribution tests comparing prior simulation with Gibbs transitions.
//!
//! The forward stream draws `(state, data)` from the prior and likelihood.
//! The Gibbs stream starts each replicate from such a draw and applies
//! `n_transitions` rounds of (transition, re-simulate data). A transition
//! that leaves the posterior invariant keeps the joint law unchanged, so the
//! two streams must agree on every monitored statistic. Replicates are
//! independent, which keeps the two-sample tests exact.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::ks::{ks_two_sample, qq_max_deviation};
use crate::error::{Error, Result};
use crate::gibbs::chain_rng;
use crate::model::{sample_prior, simulate_data, sweep, ModelHyper, ModelState};
use crate::random::ChainRng;
use crate::tensor::{Schema, SparseCountSequence};

/// A Markov transition on the latent state given data.
pub type Transition = dyn Fn(&mut ModelState, &ModelHyper, &SparseCountSequence, &mut ChainRng) -> Result<()> + Sync;

/// A scalar function of a joint draw.
#[derive(Clone, Copy)]
pub struct Monitor {
    pub name: &'static str,
    pub eval: fn(&ModelState, &SparseCountSequence) -> f64,
}

pub const DEFAULT_MONITORS: [Monitor; 7] = [
    Monitor {
        name: "gamma",
        eval: |s, _| s.gamma,
    },
    Monitor {
        name: "beta",
        eval: |s, _| s.beta,
    },
    Monitor {
        name: "tau",
        eval: |s, _| s.tau,
    },
    Monitor {
        name: "sum_lambda",
        eval: |s, _| s.lambda.iter().sum(),
    },
    Monitor {
        name: "sum_theta",
        eval: |s, _| s.theta.iter().sum(),
    },
    Monitor {
        name: "sum_h",
        eval: |s, _| s.h.iter().sum::<u64>() as f64,
    },
    Monitor {
        name: "total_count",
        eval: |_, d| d.total() as f64,
    },
];

#[derive(Debug, Clone)]
pub struct GewekeConfig {
    pub label: String,
    pub hyper: ModelHyper,
    pub schema: Schema,
    /// Replicates per stream.
    pub n_samples: usize,
    /// Rounds of (transition, re-simulate) per Gibbs replicate.
    pub n_transitions: usize,
    /// Family-wise level, split evenly across monitors.
    pub alpha: f64,
    pub seed: u64,
}

impl GewekeConfig {
    /// Tiny instance with `K = 2`, `T = 3` and `2 × 2` modes.
    pub fn tiny(label: &str, eps_theta: f64, stationary: bool, seed: u64) -> Self {
        GewekeConfig {
            label: label.into(),
            hyper: ModelHyper {
                eps_theta,
                eps_lambda: 1.0,
                alpha0: 10.0,
                a0: 1.0,
                b0: 1.0,
                k: 2,
                stationary,
            },
            schema: Schema::new(3, vec![2, 2]).expect("valid schema"),
            n_samples: 10_000,
            n_transitions: 15,
            alpha: 0.001,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GewekeRow {
    pub config: String,
    pub statistic: String,
    pub ks: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub qq_deviation: f64,
    pub forward_mean: f64,
    pub gibbs_mean: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct GewekeReport {
    pub label: String,
    pub n_samples: usize,
    pub rows: Vec<GewekeRow>,
}

impl GewekeReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn min_p_value(&self) -> f64 {
        self.rows.iter().map(|r| r.p_value).fold(1.0, f64::min)
    }
}

impl fmt::Display for GewekeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "geweke {} ({} samples per stream)", self.label, self.n_samples)?;
        for r in &self.rows {
            writeln!(
                f,
                "  {:<12} ks={:.4} p={:.3e} (min {:.1e}) qq={:.3} means {:.4}/{:.4} {}",
                r.statistic,
                r.ks,
                r.p_value,
                r.threshold,
                r.qq_deviation,
                r.forward_mean,
                r.gibbs_mean,
                if r.passed { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Full Gibbs sweep in strict mode.
pub fn gibbs_transition(state: &mut ModelState, hyper: &ModelHyper, data: &SparseCountSequence, rng: &mut ChainRng) -> Result<()> {
    sweep(state, hyper, data, false, rng)
}

fn evaluate(monitors: &[Monitor], state: &ModelState, data: &SparseCountSequence) -> Vec<f64> {
    monitors.iter().map(|m| (m.eval)(state, data)).collect()
}

/// Runs both streams and compares every monitor.
///
/// A monitor passes when its two-sample KS p-value clears the
/// Bonferroni-corrected level; the quantile deviation is reported only.
/// `transition` defaults to a full strict sweep.
pub fn geweke_test(config: &GewekeConfig, monitors: &[Monitor], transition: Option<&Transition>) -> Result<GewekeReport> {
    config.hyper.validate()?;
    if config.n_samples < 2 || monitors.is_empty() {
        return Err(Error::Config("geweke needs at least two samples and one monitor".into()));
    }
    let transition: &Transition = transition.unwrap_or(&gibbs_transition);
    let hyper = &config.hyper;
    let forward: Vec<Vec<f64>> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = chain_rng(config.seed, 2 * i);
            let state = sample_prior(hyper, &config.schema, &mut rng);
            let data = simulate_data(&state, &mut rng)?;
            Ok(evaluate(monitors, &state, &data))
        })
        .collect::<Result<_>>()?;
    let gibbs: Vec<Vec<f64>> = (0..config.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = chain_rng(config.seed, 2 * i + 1);
            let mut state = sample_prior(hyper, &config.schema, &mut rng);
            let mut data = simulate_data(&state, &mut rng)?;
            for _ in 0..config.n_transitions {
                transition(&mut state, hyper, &data, &mut rng)?;
                data = simulate_data(&state, &mut rng)?;
            }
            Ok(evaluate(monitors, &state, &data))
        })
        .collect::<Result<_>>()?;

    let threshold = config.alpha / monitors.len() as f64;
    let rows = monitors
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let a: Vec<f64> = forward.iter().map(|r| r[j]).collect();
            let b: Vec<f64> = gibbs.iter().map(|r| r[j]).collect();
            let ks = ks_two_sample(&a, &b);
            let qq = qq_max_deviation(&a, &b);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            GewekeRow {
                config: config.label.clone(),
                statistic: m.name.into(),
                ks: ks.statistic,
                p_value: ks.p_value,
                threshold,
                qq_deviation: qq,
                forward_mean: mean(&a),
                gibbs_mean: mean(&b),
                passed: ks.p_value >= threshold,
            }
        })
        .collect();
    Ok(GewekeReport {
        label: config.label.clone(),
        n_samples: config.n_samples,
        rows,
    })
}

/// Writes the rows of several reports as one CSV table.
pub fn write_geweke_csv(path: &Path, reports: &[GewekeReport]) -> Result<()> {
    let fail = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for row in reports.iter().flat_map(|r| &r.rows) {
        w.serialize(row).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
