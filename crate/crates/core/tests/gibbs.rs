use prgds::gibbs::{chain_rng, fit, impute_heldout, run_chains, McmcConfig, PrgdsModel, RunOptions};
use prgds::model::{sample_prior, simulate_data, ModelHyper};
use prgds::samples::{PosteriorSampleSet, SnapshotParams};
use prgds::tensor::{make_holdout_mask, FactorMatrix, HoldoutMask, Schema, SparseCountSequence};
use prgds::Error;

fn hyper(eps: f64) -> ModelHyper {
    ModelHyper {
        eps_theta: eps,
        k: 3,
        a0: 1.0,
        b0: 1.0,
        ..ModelHyper::default()
    }
}

fn config(seed: u64) -> McmcConfig {
    McmcConfig {
        n_iterations: 40,
        burn_in: 10,
        thin: 5,
        n_chains: 2,
        seed,
    }
}

fn problem(seed: u64) -> (SparseCountSequence, HoldoutMask) {
    let schema = Schema::new(10, vec![4, 3]).unwrap();
    let truth = sample_prior(&hyper(1.0), &schema, &mut chain_rng(seed, 0));
    let data = simulate_data(&truth, &mut chain_rng(seed, 1)).unwrap();
    let mask = make_holdout_mask(10, 2, &mut chain_rng(seed, 2)).unwrap();
    (data, mask)
}

#[test]
fn default_schedule_saves_sixty_per_chain() {
    let c = McmcConfig::default();
    assert_eq!((c.n_iterations, c.burn_in, c.thin, c.n_chains), (4000, 1000, 50, 2));
    assert_eq!(c.n_chains * c.saved_per_chain(), 120);
    let kept = (1..=c.n_iterations).filter(|&it| c.keeps(it)).count();
    assert_eq!(kept, 60);
    assert!(!c.keeps(1000) && c.keeps(1050) && c.keeps(4000));
}

#[test]
fn invalid_schedules_are_rejected() {
    for bad in [
        McmcConfig { thin: 0, ..McmcConfig::default() },
        McmcConfig { n_chains: 0, ..McmcConfig::default() },
        McmcConfig { burn_in: 4000, ..McmcConfig::default() },
        McmcConfig { n_iterations: 0, ..McmcConfig::default() },
    ] {
        assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
    }
}

#[test]
fn fit_saves_thinned_samples_from_every_chain() {
    let (data, mask) = problem(1);
    let c = McmcConfig { n_chains: 3, ..config(2) };
    let set = fit(&data, Some(&mask), &hyper(1.0), &c).unwrap();
    assert_eq!(set.len(), 3 * c.saved_per_chain());
    assert_eq!(set.chains(), vec![0, 1, 2]);
    for chain in 0..3 {
        let iters: Vec<usize> = set.chain(chain).samples.iter().map(|s| s.iteration).collect();
        assert_eq!(iters, vec![15, 20, 25, 30, 35, 40]);
    }
    assert_eq!(set.mask.as_ref(), Some(&mask));
    assert_eq!(&set.schema, data.schema());
    assert_eq!(set.meta.model, "prgds");
    assert_eq!(set.meta.flags["thin"], "5");
}

#[test]
fn same_seed_gives_identical_archives() {
    let (data, mask) = problem(3);
    for eps in [0.0, 1.0] {
        let a = fit(&data, Some(&mask), &hyper(eps), &config(4)).unwrap();
        let b = fit(&data, Some(&mask), &hyper(eps), &config(4)).unwrap();
        assert_eq!(a, b);
        let c = fit(&data, Some(&mask), &hyper(eps), &config(5)).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let (data, mask) = problem(6);
    let model = PrgdsModel { hyper: hyper(0.0) };
    let one = RunOptions {
        threads: Some(1),
        ..RunOptions::default()
    };
    let four = RunOptions {
        threads: Some(4),
        ..RunOptions::default()
    };
    let a = run_chains(&model, &data, Some(&mask), &config(7), &one).unwrap();
    let b = run_chains(&model, &data, Some(&mask), &config(7), &four).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fitting_leaves_observed_data_untouched() {
    let (data, mask) = problem(8);
    let before = data.clone();
    fit(&data, Some(&mask), &hyper(1.0), &config(9)).unwrap();
    assert_eq!(data, before);
}

#[test]
fn empty_data_runs() {
    let data = SparseCountSequence::empty(Schema::new(6, vec![2, 2]).unwrap());
    for eps in [0.0, 1.0] {
        let set = fit(&data, None, &hyper(eps), &config(10)).unwrap();
        assert_eq!(set.len(), 12);
        for s in &set.samples {
            let SnapshotParams::Prgds(p) = &s.params else { panic!("wrong snapshot kind") };
            assert!(p.theta.iter().chain(&p.lambda).all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}

#[test]
fn mask_must_cover_the_data() {
    let (data, _) = problem(11);
    let short = HoldoutMask::new(6, vec![]).unwrap();
    assert!(matches!(fit(&data, Some(&short), &hyper(1.0), &config(12)), Err(Error::Config(_))));
}

#[test]
fn interrupted_run_resumes_bit_exactly() {
    let (data, mask) = problem(13);
    let model = PrgdsModel { hyper: hyper(0.0) };
    let c = config(14);
    let full = run_chains(&model, &data, Some(&mask), &c, &RunOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let partial = RunOptions {
        checkpoint_dir: Some(dir.path().to_path_buf()),
        checkpoint_every: 7,
        stop_after: Some(23),
        ..RunOptions::default()
    };
    assert!(matches!(
        run_chains(&model, &data, Some(&mask), &c, &partial),
        Err(Error::Interrupted(_))
    ));
    assert!(dir.path().join("chain-0.ckpt.json").exists());
    let resume = RunOptions {
        stop_after: None,
        ..partial
    };
    let resumed = run_chains(&model, &data, Some(&mask), &c, &resume).unwrap();
    assert_eq!(resumed, full);
}

#[test]
fn checkpoint_from_another_run_is_refused() {
    let (data, mask) = problem(15);
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        checkpoint_dir: Some(dir.path().to_path_buf()),
        stop_after: Some(5),
        ..RunOptions::default()
    };
    let model = PrgdsModel { hyper: hyper(1.0) };
    assert!(run_chains(&model, &data, Some(&mask), &config(16), &opts).is_err());
    let other = PrgdsModel { hyper: hyper(0.0) };
    assert!(matches!(
        run_chains(&other, &data, Some(&mask), &config(16), &opts),
        Err(Error::Config(_))
    ));
}

#[test]
fn archives_round_trip_through_disk() {
    let (data, mask) = problem(17);
    let set = fit(&data, Some(&mask), &hyper(1.0), &config(18)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for name in ["s.json", "s.json.gz"] {
        let p = dir.path().join(name);
        set.save(&p).unwrap();
        assert_eq!(PosteriorSampleSet::load(&p).unwrap(), set);
    }
}

fn single_component_state(theta: f64, dims: &[usize]) -> prgds::model::ModelState {
    let schema = Schema::new(6, dims.to_vec()).unwrap();
    let mut s = sample_prior(&ModelHyper { k: 1, ..ModelHyper::default() }, &schema, &mut chain_rng(0, 0));
    s.lambda = vec![1.0];
    s.theta.fill(theta);
    s.rho.fill(1.0);
    s.factors = dims
        .iter()
        .map(|&d| FactorMatrix::from_rows(&[vec![1.0 / d as f64; d]]).unwrap())
        .collect();
    s
}

#[test]
fn imputation_of_silent_steps_is_empty() {
    let model = PrgdsModel { hyper: ModelHyper { k: 1, ..ModelHyper::default() } };
    let state = single_component_state(0.0, &[3, 3]);
    let mask = HoldoutMask::new(6, vec![1, 2]).unwrap();
    let steps = impute_heldout(&model, &state, &mask, &mut chain_rng(19, 0)).unwrap();
    assert_eq!(steps.iter().map(|(t, _)| *t).collect::<Vec<_>>(), vec![1, 2, 4, 5]);
    assert!(steps.iter().all(|(_, s)| s.is_empty()));
}

#[test]
fn imputed_counts_have_poisson_mean() {
    // 1000 cells per step at rate 2
    let model = PrgdsModel { hyper: ModelHyper { k: 1, ..ModelHyper::default() } };
    let state = single_component_state(2000.0, &[1000]);
    let mask = HoldoutMask::new(6, vec![1, 2, 3]).unwrap();
    let mut rng = chain_rng(20, 0);
    let mut ys = Vec::new();
    for _ in 0..40 {
        for (_, step) in impute_heldout(&model, &state, &mask, &mut rng).unwrap() {
            let mut dense = vec![0.0; 1000];
            for (idx, y) in step.iter() {
                dense[idx[0] as usize] = y as f64;
            }
            ys.extend(dense);
        }
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let se = (ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 2.0).abs() < 3.0 * se, "{mean}");

    let again = impute_heldout(&model, &state, &mask, &mut chain_rng(21, 0)).unwrap();
    assert_eq!(again, impute_heldout(&model, &state, &mask, &mut chain_rng(21, 0)).unwrap());
}
