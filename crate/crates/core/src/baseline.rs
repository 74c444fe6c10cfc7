//! Static reference models whose rates do not change over time.
//!
//! The tensor baseline is Poisson CP factorization,
//! `y^(t)_i ~ Pois(Σ_k λ_k Π_m φ^(m)_{k,i_m})` with `λ_k ~ Gam(s, β)`,
//! `β ~ Gam(α0, α0)` and Dirichlet factor rows, fit by Gibbs sampling. For
//! single-mode data there is also an exact conjugate per-cell model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{chain_rng, run_chains, GibbsModel, McmcConfig, RunOptions};
use crate::model::sample_cp_counts;
use crate::random::{dirichlet, gamma, multinomial, ChainRng};
use crate::samples::{ArchiveMeta, PosteriorSampleSet, Sample, SnapshotParams, StaticSnapshot, ARCHIVE_VERSION};
use crate::tensor::{component_weights, FactorMatrix, HoldoutMask, Schema, SparseCountSequence, StepEntries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticHyper {
    pub k: usize,
    /// Shape `s` of the component weights.
    pub lambda_shape: f64,
    pub alpha0: f64,
    /// Dirichlet concentration of the factor rows.
    pub a0: f64,
}

impl Default for StaticHyper {
    fn default() -> Self {
        StaticHyper {
            k: 100,
            lambda_shape: 1.0,
            alpha0: 10.0,
            a0: 0.01,
        }
    }
}

impl StaticHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k > 0
            && [self.lambda_shape, self.alpha0, self.a0]
                .iter()
                .all(|v| *v > 0.0 && v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid static hyperparameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticState {
    pub lambda: Vec<f64>,
    pub factors: Vec<FactorMatrix>,
    pub beta: f64,
    pub y_sources: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct StaticModel {
    pub hyper: StaticHyper,
}

impl GibbsModel for StaticModel {
    type State = StaticState;

    fn name(&self) -> &'static str {
        "static"
    }

    fn init(&self, schema: &Schema, rng: &mut ChainRng) -> Result<StaticState> {
        self.hyper.validate()?;
        let h = &self.hyper;
        let beta = gamma(h.alpha0, h.alpha0, rng);
        let lambda = (0..h.k).map(|_| gamma(h.lambda_shape, beta, rng)).collect();
        let factors = schema
            .dims
            .iter()
            .map(|&d| {
                let mut f = FactorMatrix::zeros(h.k, d);
                let alpha = vec![h.a0; d];
                let mut row = vec![0.0; d];
                for kk in 0..h.k {
                    dirichlet(&alpha, &mut row, rng);
                    f.set_row(kk, &row);
                }
                f
            })
            .collect();
        Ok(StaticState {
            lambda,
            factors,
            beta,
            y_sources: vec![Vec::new(); schema.n_steps],
        })
    }

    fn impute_step(&self, state: &StaticState, _t: usize, rng: &mut ChainRng) -> Result<StepEntries> {
        sample_cp_counts(1.0, &state.lambda, &vec![1.0; state.lambda.len()], &state.factors, rng)
    }

    fn sweep(&self, state: &mut StaticState, data: &SparseCountSequence, lenient: bool, rng: &mut ChainRng) -> Result<()> {
        static_sweep(state, &self.hyper, data, lenient, rng)
    }

    fn snapshot(&self, state: &StaticState) -> SnapshotParams {
        SnapshotParams::Static(StaticSnapshot {
            lambda: state.lambda.clone(),
            factors: state.factors.clone(),
        })
    }

    fn first_invalid(&self, state: &StaticState) -> Option<String> {
        let bad = |x: &f64| !x.is_finite() || *x < 0.0;
        if state.lambda.iter().any(bad) {
            return Some("lambda".into());
        }
        if state.factors.iter().any(|f| f.values().iter().any(bad)) {
            return Some("phi".into());
        }
        if bad(&state.beta) {
            return Some("beta".into());
        }
        None
    }

    fn describe(&self) -> Vec<(String, String)> {
        let h = &self.hyper;
        vec![
            ("K".into(), h.k.to_string()),
            ("lambda_shape".into(), h.lambda_shape.to_string()),
            ("alpha0".into(), h.alpha0.to_string()),
            ("a0".into(), h.a0.to_string()),
        ]
    }
}

/// One Gibbs sweep of the static CP model: allocation, `λ`, `Φ`, `β`.
pub fn static_sweep<R: Rng + ?Sized>(
    state: &mut StaticState,
    hyper: &StaticHyper,
    data: &SparseCountSequence,
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let k = hyper.k;
    let ones = vec![1.0; k];
    let mut weights = vec![0.0; k];
    let mut y_k = vec![0u64; k];
    let mut mode_counts: Vec<Vec<u64>> = data.dims().iter().map(|&d| vec![0; d * k]).collect();
    if state.y_sources.len() != data.n_steps() {
        state.y_sources = vec![Vec::new(); data.n_steps()];
    }
    for t in 0..data.n_steps() {
        let step = data.step(t);
        let sources = &mut state.y_sources[t];
        sources.clear();
        sources.resize(step.nnz() * k, 0);
        for (j, (idx, y)) in step.iter().enumerate() {
            component_weights(&state.lambda, &ones, &state.factors, idx, &mut weights);
            let out = &mut sources[j * k..(j + 1) * k];
            if let Err(e) = multinomial(y, &weights, out, rng) {
                if !lenient {
                    return Err(e);
                }
                weights.fill(1.0);
                multinomial(y, &weights, out, rng)?;
            }
            for (a, s) in y_k.iter_mut().zip(out.iter()) {
                *a += s;
            }
            for (counts, &i) in mode_counts.iter_mut().zip(idx) {
                for (a, s) in counts[i as usize * k..(i as usize + 1) * k].iter_mut().zip(out.iter()) {
                    *a += s;
                }
            }
        }
    }

    let mut mass = vec![1.0; k];
    for f in &state.factors {
        for (m, s) in mass.iter_mut().zip(f.row_sums()) {
            *m *= s;
        }
    }
    let steps = data.n_steps() as f64;
    for kk in 0..k {
        state.lambda[kk] = gamma(hyper.lambda_shape + y_k[kk] as f64, state.beta + steps * mass[kk], rng);
    }

    for (f, counts) in state.factors.iter_mut().zip(&mode_counts) {
        let d = f.dim();
        let mut alpha = vec![0.0; d];
        let mut row = vec![0.0; d];
        for kk in 0..k {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = hyper.a0 + counts[i * k + kk] as f64;
            }
            dirichlet(&alpha, &mut row, rng);
            f.set_row(kk, &row);
        }
    }

    let shape = hyper.alpha0 + k as f64 * hyper.lambda_shape;
    let rate = hyper.alpha0 + state.lambda.iter().sum::<f64>();
    state.beta = gamma(shape, rate, rng);
    Ok(())
}

/// Fits the static CP baseline under the same chain protocol as the dynamic model.
pub fn fit_static_cp(
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    hyper: &StaticHyper,
    config: &McmcConfig,
) -> Result<PosteriorSampleSet> {
    run_chains(&StaticModel { hyper: hyper.clone() }, data, mask, config, &RunOptions::default())
}

/// Posterior `Gam(a0 + Σ_{observed t} y^(t)_v, b0 + #observed)` of each cell rate.
pub fn univariate_posterior(
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    a0: f64,
    b0: f64,
) -> Result<Vec<(f64, f64)>> {
    if data.dims().len() != 1 {
        return Err(Error::Dimension(format!(
            "the per-cell model needs single-mode data, got {} modes",
            data.dims().len()
        )));
    }
    let d = data.dims()[0];
    let mut totals = vec![0u64; d];
    let mut observed = 0usize;
    for t in 0..data.n_steps() {
        if mask.is_some_and(|m| m.is_heldout(t)) {
            continue;
        }
        observed += 1;
        for (idx, y) in data.step(t).iter() {
            totals[idx[0] as usize] += y;
        }
    }
    Ok(totals
        .into_iter()
        .map(|y| (a0 + y as f64, b0 + observed as f64))
        .collect())
}

/// Exact posterior draws of the per-cell rates of single-mode data.
pub fn fit_static_univariate(
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    a0: f64,
    b0: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PosteriorSampleSet> {
    let post = univariate_posterior(data, mask, a0, b0)?;
    let mut rng = chain_rng(seed, 0);
    let samples = (0..n_samples)
        .map(|s| Sample {
            chain: 0,
            iteration: s + 1,
            params: SnapshotParams::PerCell {
                rates: post.iter().map(|&(a, b)| gamma(a, b, &mut rng)).collect(),
            },
        })
        .collect();
    let flags = [("a0", a0.to_string()), ("b0", b0.to_string()), ("samples", n_samples.to_string())]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(PosteriorSampleSet {
        meta: ArchiveMeta {
            version: ARCHIVE_VERSION,
            model: "static-univariate".into(),
            seed,
            flags,
        },
        schema: data.schema().clone(),
        mask: mask.cloned(),
        samples,
    })
}
