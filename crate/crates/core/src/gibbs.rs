//! Multi-chain Gibbs orchestration with held-out imputation and checkpoints.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_cp_counts, sample_prior, sweep, ModelHyper, ModelState};
use crate::random::ChainRng;
use crate::samples::{read_json, write_json, ArchiveMeta, PosteriorSampleSet, PrgdsSnapshot, Sample, SnapshotParams, ARCHIVE_VERSION};
use crate::tensor::{HoldoutMask, Schema, SparseCountSequence, StepEntries};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            n_iterations: 4000,
            burn_in: 1000,
            thin: 50,
            n_chains: 2,
            seed: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 || self.thin == 0 || self.n_chains == 0 {
            return Err(Error::Config("iterations, thin and chains must be positive".into()));
        }
        if self.burn_in >= self.n_iterations {
            return Err(Error::Config(format!(
                "burn-in {} leaves no iterations out of {}",
                self.burn_in, self.n_iterations
            )));
        }
        Ok(())
    }

    pub fn saved_per_chain(&self) -> usize {
        (self.n_iterations - self.burn_in) / self.thin
    }

    /// Whether the state after 1-based iteration `it` is kept.
    pub fn keeps(&self, it: usize) -> bool {
        it > self.burn_in && (it - self.burn_in).is_multiple_of(self.thin)
    }
}

/// Independent generator for chain `chain` of a run seeded with `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChainRng {
    let mut rng = ChainRng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// A model the chain engine can drive.
pub trait GibbsModel: Sync {
    type State: Clone + Serialize + DeserializeOwned + Send;

    fn name(&self) -> &'static str;

    /// Starting state drawn from the prior.
    fn init(&self, schema: &Schema, rng: &mut ChainRng) -> Result<Self::State>;

    /// Counts of step `t` drawn from the current rates.
    fn impute_step(&self, state: &Self::State, t: usize, rng: &mut ChainRng) -> Result<StepEntries>;

    fn sweep(&self, state: &mut Self::State, data: &SparseCountSequence, lenient: bool, rng: &mut ChainRng) -> Result<()>;

    fn snapshot(&self, state: &Self::State) -> SnapshotParams;

    fn first_invalid(&self, state: &Self::State) -> Option<String>;

    /// Flags describing the model, recorded in archive headers.
    fn describe(&self) -> Vec<(String, String)>;
}

#[derive(Debug, Clone)]
pub struct PrgdsModel {
    pub hyper: ModelHyper,
}

impl GibbsModel for PrgdsModel {
    type State = ModelState;

    fn name(&self) -> &'static str {
        "prgds"
    }

    fn init(&self, schema: &Schema, rng: &mut ChainRng) -> Result<ModelState> {
        self.hyper.validate()?;
        Ok(sample_prior(&self.hyper, schema, rng))
    }

    fn impute_step(&self, state: &ModelState, t: usize, rng: &mut ChainRng) -> Result<StepEntries> {
        sample_cp_counts(state.rho[t], &state.lambda, state.theta_at(t), &state.factors, rng)
    }

    fn sweep(&self, state: &mut ModelState, data: &SparseCountSequence, lenient: bool, rng: &mut ChainRng) -> Result<()> {
        sweep(state, &self.hyper, data, lenient, rng)
    }

    fn snapshot(&self, s: &ModelState) -> SnapshotParams {
        SnapshotParams::Prgds(PrgdsSnapshot {
            lambda: s.lambda.clone(),
            theta: s.theta.clone(),
            h: s.h.clone(),
            rho: s.rho.clone(),
            pi: s.pi.clone(),
            factors: s.factors.clone(),
            tau: s.tau,
            beta: s.beta,
            gamma: s.gamma,
        })
    }

    fn first_invalid(&self, state: &ModelState) -> Option<String> {
        state.first_invalid()
    }

    fn describe(&self) -> Vec<(String, String)> {
        let h = &self.hyper;
        vec![
            ("eps_theta".into(), h.eps_theta.to_string()),
            ("eps_lambda".into(), h.eps_lambda.to_string()),
            ("alpha0".into(), h.alpha0.to_string()),
            ("a0".into(), h.a0.to_string()),
            ("b0".into(), h.b0.to_string()),
            ("K".into(), h.k.to_string()),
            ("stationary".into(), h.stationary.to_string()),
        ]
    }
}

/// Draws fresh counts for every held-out step of `mask`.
pub fn impute_heldout<M: GibbsModel>(
    model: &M,
    state: &M::State,
    mask: &HoldoutMask,
    rng: &mut ChainRng,
) -> Result<Vec<(usize, StepEntries)>> {
    mask.steps(crate::tensor::Subset::All)
        .into_iter()
        .map(|t| Ok((t, model.impute_step(state, t, rng)?)))
        .collect()
}

/// Execution knobs that do not change the result.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for per-chain checkpoints; existing ones are resumed.
    pub checkpoint_dir: Option<PathBuf>,
    /// Iterations between checkpoints (0 writes only at the end).
    pub checkpoint_every: usize,
    /// Iterations between progress lines (0 disables them).
    pub progress_every: usize,
    /// Stop every chain after this many total iterations, leaving a checkpoint.
    pub stop_after: Option<usize>,
    /// Worker threads for chain-level parallelism.
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "S: Serialize + DeserializeOwned")]
struct ChainCheckpoint<S> {
    version: u32,
    run_key: String,
    chain: usize,
    completed: usize,
    state: S,
    rng: ChainRng,
    samples: Vec<Sample>,
}

fn checkpoint_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("chain-{chain}.ckpt.json"))
}

fn run_key<M: GibbsModel>(model: &M, config: &McmcConfig, mask: Option<&HoldoutMask>, data: &SparseCountSequence) -> String {
    serde_json::json!({
        "model": model.name(),
        "flags": model.describe(),
        "config": config,
        "mask": mask,
        "schema": data.schema(),
        "nnz": data.nnz(),
        "total": data.total(),
    })
    .to_string()
}

fn check_inputs(data: &SparseCountSequence, mask: Option<&HoldoutMask>, config: &McmcConfig) -> Result<()> {
    config.validate()?;
    if let Some(mask) = mask {
        if mask.n_steps() != data.n_steps() {
            return Err(Error::Config(format!(
                "mask covers {} steps but the data has {}",
                mask.n_steps(),
                data.n_steps()
            )));
        }
    }
    Ok(())
}

/// Runs every chain of `config` and collects the saved samples.
pub fn run_chains<M: GibbsModel>(
    model: &M,
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    config: &McmcConfig,
    options: &RunOptions,
) -> Result<PosteriorSampleSet> {
    check_inputs(data, mask, config)?;
    if let Some(dir) = &options.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let key = run_key(model, config, mask, data);
    let work = |chain: usize| run_chain(model, data, mask, config, options, &key, chain);
    let per_chain: Vec<Vec<Sample>> = match options.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| (0..config.n_chains).into_par_iter().map(work).collect::<Result<_>>())?
        }
        None => (0..config.n_chains).into_par_iter().map(work).collect::<Result<_>>()?,
    };
    let mut flags: std::collections::BTreeMap<String, String> = model.describe().into_iter().collect();
    flags.insert("iterations".into(), config.n_iterations.to_string());
    flags.insert("burn_in".into(), config.burn_in.to_string());
    flags.insert("thin".into(), config.thin.to_string());
    flags.insert("chains".into(), config.n_chains.to_string());
    Ok(PosteriorSampleSet {
        meta: ArchiveMeta {
            version: ARCHIVE_VERSION,
            model: model.name().into(),
            seed: config.seed,
            flags,
        },
        schema: data.schema().clone(),
        mask: mask.cloned(),
        samples: per_chain.into_iter().flatten().collect(),
    })
}

fn run_chain<M: GibbsModel>(
    model: &M,
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    config: &McmcConfig,
    options: &RunOptions,
    key: &str,
    chain: usize,
) -> Result<Vec<Sample>> {
    let ckpt_file = options.checkpoint_dir.as_deref().map(|d| checkpoint_path(d, chain));
    let resumed: Option<ChainCheckpoint<M::State>> = match &ckpt_file {
        Some(p) if p.exists() => Some(read_json(p)?),
        _ => None,
    };
    let (mut state, mut rng, mut samples, start) = match resumed {
        Some(c) => {
            if c.version != ARCHIVE_VERSION || c.run_key != key || c.chain != chain {
                return Err(Error::Config(format!(
                    "checkpoint for chain {chain} was written by a different run"
                )));
            }
            log::info!("{chain} {} resume 0.000", c.completed);
            (c.state, c.rng, c.samples, c.completed)
        }
        None => {
            let mut rng = chain_rng(config.seed, chain);
            let state = model.init(data.schema(), &mut rng)?;
            (state, rng, Vec::new(), 0)
        }
    };

    let mut work = data.clone();
    let clock = Instant::now();
    let end = options.stop_after.map_or(config.n_iterations, |s| s.min(config.n_iterations));
    let save = |state: &M::State, rng: &ChainRng, samples: &Vec<Sample>, completed: usize| -> Result<()> {
        if let Some(p) = &ckpt_file {
            write_json(
                p,
                &ChainCheckpoint {
                    version: ARCHIVE_VERSION,
                    run_key: key.to_string(),
                    chain,
                    completed,
                    state: state.clone(),
                    rng: rng.clone(),
                    samples: samples.clone(),
                },
            )?;
        }
        Ok(())
    };

    for it in start..end {
        if let Some(mask) = mask {
            for (t, step) in impute_heldout(model, &state, mask, &mut rng)? {
                work.set_step(t, step)?;
            }
        }
        model.sweep(&mut state, &work, it == 0, &mut rng)?;
        if let Some(what) = model.first_invalid(&state) {
            return Err(Error::NonFinite {
                what,
                chain,
                iteration: it + 1,
                dump: serde_json::to_value(&state).ok().map(Box::new),
            });
        }
        let done = it + 1;
        if config.keeps(done) {
            samples.push(Sample {
                chain,
                iteration: done,
                params: model.snapshot(&state),
            });
        }
        if options.progress_every > 0 && done % options.progress_every == 0 {
            log::info!("{chain} {done} sweep {:.3}", clock.elapsed().as_secs_f64());
        }
        if options.checkpoint_every > 0 && done % options.checkpoint_every == 0 {
            save(&state, &rng, &samples, done)?;
        }
    }
    save(&state, &rng, &samples, end)?;
    if end < config.n_iterations {
        return Err(Error::Interrupted(format!(
            "chain {chain} stopped after {end} of {} iterations; rerun to resume",
            config.n_iterations
        )));
    }
    log::info!("{chain} {end} done {:.3}", clock.elapsed().as_secs_f64());
    Ok(samples)
}

/// Fits the dynamical system with default execution options.
pub fn fit(
    data: &SparseCountSequence,
    mask: Option<&HoldoutMask>,
    hyper: &ModelHyper,
    config: &McmcConfig,
) -> Result<PosteriorSampleSet> {
    run_chains(&PrgdsModel { hyper: hyper.clone() }, data, mask, config, &RunOptions::default())
}
