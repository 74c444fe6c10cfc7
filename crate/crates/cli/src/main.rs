use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use prgds::baseline::{fit_static_univariate, StaticHyper, StaticModel};
use prgds::diagnostics::write_geweke_csv;
use prgds::eval::{information_gain, information_rate, write_eval_csv, EvalRow};
use prgds::gibbs::{chain_rng, run_chains, McmcConfig, PrgdsModel, RunOptions};
use prgds::model::{sample_prior, simulate_data, ModelHyper};
use prgds::samples::{read_json, write_json, ArchiveMeta, MaskRecord, PosteriorSampleSet, StateRecord, ARCHIVE_VERSION};
use prgds::selftest::{geweke_suite, run_suite, Suite};
use prgds::tensor::{make_holdout_mask, read_coordinate_file, write_coordinate_file, Schema, Subset};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "prgds", version, about = "Poisson-randomized gamma dynamical systems for count tensor sequences")]
struct Cli {
    /// Worker threads for chain-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a state from the prior and counts from it.
    Simulate(SimulateArgs),
    /// Fit a model by Gibbs sampling with held-out time steps.
    Fit(FitArgs),
    /// Score sample archives on held-out steps.
    Evaluate(EvaluateArgs),
    /// Run a built-in correctness suite.
    Selftest(SelftestArgs),
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    hyper_file: Option<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    dims: Vec<usize>,
    #[arg(long = "T")]
    n_steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides K from the hyperparameter file.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    epsilon_theta: Option<f64>,
    #[arg(long)]
    stationary_rho: bool,
    /// Pins every ρ^(t) to this value instead of drawing it.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Generating state (default: `<out>.state.json`).
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Prgds,
    Static,
    StaticUnivariate,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Prgds => "prgds",
            ModelKind::Static => "static",
            ModelKind::StaticUnivariate => "static-univariate",
        }
    }
}

#[derive(clap::Args)]
struct FitArgs {
    #[arg(long, value_enum, default_value = "prgds")]
    model: ModelKind,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    hyper_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
    #[arg(long, default_value_t = 6)]
    n_smoothing: usize,
    /// Fit to every step without holding any out.
    #[arg(long)]
    no_holdout: bool,
    #[arg(long)]
    epsilon_theta: Option<f64>,
    #[arg(long)]
    stationary_rho: bool,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long, default_value_t = 4000)]
    iters: usize,
    #[arg(long, default_value_t = 1000)]
    burnin: usize,
    #[arg(long, default_value_t = 50)]
    thin: usize,
    #[arg(long, default_value_t = 2)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_samples: PathBuf,
    /// Mask file (default: `<out-samples>.mask.json`).
    #[arg(long)]
    out_mask: Option<PathBuf>,
    /// Per-chain checkpoints; an interrupted run resumes from them.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    checkpoint_every: usize,
    #[arg(long, default_value_t = 100)]
    progress_every: usize,
    /// Stop every chain after this many iterations, leaving checkpoints.
    #[arg(long, hide = true)]
    stop_after: Option<usize>,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long, num_args = 1.., required = true)]
    samples: Vec<PathBuf>,
    #[arg(long)]
    baseline_samples: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
    /// Dataset label for the CSV (default: the data file stem).
    #[arg(long)]
    dataset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Distributions,
    Geweke,
    Scaling,
}

#[derive(clap::Args)]
struct SelftestArgs {
    #[arg(long, value_enum)]
    suite: SuiteArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per-statistic Geweke table.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a, cli.threads),
        Command::Evaluate(a) => evaluate(a),
        Command::Selftest(a) => selftest(a, cli.threads),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain, skipping causes already quoted by their parent.
fn render(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.ends_with(&msg) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&msg);
    }
    out
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use prgds::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Config(_)) | None => 1,
        Some(
            E::Parse { .. }
            | E::Bounds { .. }
            | E::Dimension(_)
            | E::Io { .. }
            | E::Json { .. }
            | E::HoldoutMismatch(_)
            | E::EmptyHoldout(_),
        ) => 2,
        Some(_) => 3,
    }
}

fn load_hyper(path: Option<&Path>) -> Result<ModelHyper> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| prgds::Error::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            Ok(ModelHyper::parse_kv(&text).with_context(|| format!("reading {}", p.display()))?)
        }
        None => Ok(ModelHyper::default()),
    }
}

fn apply_overrides(hyper: &mut ModelHyper, k: Option<usize>, eps: Option<f64>, stationary: bool) -> Result<()> {
    if let Some(k) = k {
        hyper.k = k;
    }
    if let Some(e) = eps {
        hyper.eps_theta = e;
    }
    hyper.stationary |= stationary;
    hyper.validate()?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let mut hyper = load_hyper(a.hyper_file.as_deref())?;
    apply_overrides(&mut hyper, a.k, a.epsilon_theta, a.stationary_rho)?;
    if let Some(rho) = a.rho {
        if !(rho > 0.0 && rho.is_finite()) {
            bail!(prgds::Error::Config(format!("--rho must be positive, got {rho}")));
        }
    }
    let schema = Schema::new(a.n_steps, a.dims.clone())?;
    let mut rng = chain_rng(a.seed, 0);
    let mut state = sample_prior(&hyper, &schema, &mut rng);
    if let Some(rho) = a.rho {
        state.rho.fill(rho);
    }
    let data = simulate_data(&state, &mut rng)?;

    let mut flags = BTreeMap::new();
    flags.insert("dims".to_string(), format!("{:?}", a.dims));
    flags.insert("T".to_string(), a.n_steps.to_string());
    if let Some(rho) = a.rho {
        flags.insert("rho".to_string(), rho.to_string());
    }
    for line in hyper.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            flags.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let mut comments = vec![format!("prgds {VERSION} simulate seed={}", a.seed)];
    comments.extend(flags.iter().map(|(k, v)| format!("{k}={v}")));
    write_coordinate_file(&a.out, &data, &comments)?;
    let state_path = a.state_out.unwrap_or_else(|| with_suffix(&a.out, ".state.json"));
    let record = StateRecord {
        meta: ArchiveMeta {
            version: ARCHIVE_VERSION,
            model: "prgds".into(),
            seed: a.seed,
            flags,
        },
        hyper,
        state,
    };
    write_json(&state_path, &record)?;
    log::info!(
        "wrote {} ({} non-zeros, total {}) and {}",
        a.out.display(),
        data.nnz(),
        data.total(),
        state_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn fit(a: FitArgs, threads: Option<usize>) -> Result<ExitCode> {
    let data = read_coordinate_file(&a.data, None)?;
    let mask = if a.no_holdout {
        None
    } else {
        let mut rng = chain_rng(a.mask_seed, 0);
        Some(make_holdout_mask(data.n_steps(), a.n_smoothing, &mut rng)?)
    };
    let config = McmcConfig {
        n_iterations: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        n_chains: a.chains,
        seed: a.seed,
    };
    config.validate()?;
    let options = RunOptions {
        checkpoint_dir: a.checkpoint_dir.clone(),
        checkpoint_every: a.checkpoint_every,
        progress_every: a.progress_every,
        stop_after: a.stop_after,
        threads,
    };
    let mut hyper = load_hyper(a.hyper_file.as_deref())?;
    apply_overrides(&mut hyper, a.k, a.epsilon_theta, a.stationary_rho)?;

    let mut set = match a.model {
        ModelKind::Prgds => run_chains(&PrgdsModel { hyper }, &data, mask.as_ref(), &config, &options)?,
        ModelKind::Static => {
            let model = StaticModel {
                hyper: StaticHyper {
                    k: hyper.k,
                    alpha0: hyper.alpha0,
                    a0: hyper.a0,
                    ..StaticHyper::default()
                },
            };
            run_chains(&model, &data, mask.as_ref(), &config, &options)?
        }
        ModelKind::StaticUnivariate => {
            let n = config.n_chains * config.saved_per_chain();
            fit_static_univariate(&data, mask.as_ref(), hyper.a0, hyper.b0, n, config.seed)?
        }
    };
    set.meta.flags.insert("data".into(), a.data.display().to_string());
    set.meta.flags.insert("mask_seed".into(), a.mask_seed.to_string());
    set.meta.flags.insert("n_smoothing".into(), a.n_smoothing.to_string());
    set.meta.flags.insert("no_holdout".into(), a.no_holdout.to_string());
    set.meta.flags.insert("version".into(), VERSION.into());
    set.save(&a.out_samples)?;
    if let Some(mask) = mask {
        let path = a.out_mask.unwrap_or_else(|| with_suffix(&a.out_samples, ".mask.json"));
        write_json(
            &path,
            &MaskRecord {
                version: ARCHIVE_VERSION,
                seed: a.mask_seed,
                mask,
            },
        )?;
    }
    log::info!("saved {} samples of {} to {}", set.len(), a.model.name(), a.out_samples.display());
    Ok(ExitCode::SUCCESS)
}

fn evaluate(a: EvaluateArgs) -> Result<ExitCode> {
    let data = read_coordinate_file(&a.data, None)?;
    let record: MaskRecord = read_json(&a.mask)?;
    let baseline = PosteriorSampleSet::load(&a.baseline_samples)?;
    let dataset = a.dataset.clone().unwrap_or_else(|| {
        a.data
            .file_stem()
            .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut rows = Vec::new();
    for path in &a.samples {
        let set = PosteriorSampleSet::load(path)?;
        for subset in Subset::EACH {
            if record.mask.steps(subset).is_empty() {
                log::warn!("mask has no {subset} steps; skipping");
                continue;
            }
            let model = information_rate(&set, &data, &record.mask, subset)
                .with_context(|| format!("scoring {}", path.display()))?;
            let base = information_rate(&baseline, &data, &record.mask, subset)
                .with_context(|| format!("scoring {}", a.baseline_samples.display()))?;
            rows.push(EvalRow {
                model: set.meta.model.clone(),
                dataset: dataset.clone(),
                mask_seed: record.seed,
                subset,
                rate: model.rate,
                gain: information_gain(&model, &base)?,
            });
        }
    }
    write_eval_csv(&a.out_csv, &rows)?;
    let meta = ArchiveMeta {
        version: ARCHIVE_VERSION,
        model: "evaluate".into(),
        seed: record.seed,
        flags: [
            ("data", a.data.display().to_string()),
            ("mask", a.mask.display().to_string()),
            ("baseline", a.baseline_samples.display().to_string()),
            (
                "samples",
                a.samples.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
            ),
            ("version", VERSION.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect(),
    };
    write_json(&with_suffix(&a.out_csv, ".meta.json"), &meta)?;
    for r in &rows {
        println!("{} {} {} rate={:.6} gain={:.6}", r.model, r.dataset, r.subset, r.rate, r.gain);
    }
    Ok(ExitCode::SUCCESS)
}

fn selftest(a: SelftestArgs, threads: Option<usize>) -> Result<ExitCode> {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let suite = match a.suite {
        SuiteArg::Distributions => Suite::Distributions,
        SuiteArg::Geweke => Suite::Geweke,
        SuiteArg::Scaling => Suite::Scaling,
    };
    let checks = if suite == Suite::Geweke {
        let (checks, reports) = geweke_suite(10_000, a.seed)?;
        for r in &reports {
            print!("{r}");
        }
        if let Some(path) = &a.out_csv {
            write_geweke_csv(path, &reports)?;
        }
        checks
    } else {
        run_suite(suite, a.seed)?
    };
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{}: {} checks, {failed} failed", suite.name(), checks.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(4) })
}
