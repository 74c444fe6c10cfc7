use prgds::baseline::{fit_static_cp, fit_static_univariate, univariate_posterior, StaticHyper};
use prgds::diagnostics::quad::integrate;
use prgds::eval::{information_rate, poisson_log_pmf};
use prgds::gibbs::{chain_rng, fit, McmcConfig};
use prgds::model::ModelHyper;
use prgds::random::{dirichlet, gamma, poisson};
use prgds::samples::SnapshotParams;
use prgds::tensor::{make_holdout_mask, HoldoutMask, Schema, SparseCountSequence, Subset};
use prgds::Error;

fn univariate_data() -> SparseCountSequence {
    // cell 0 totals 10 over steps 0..5, cell 1 is silent, steps 5..7 are noisy
    let entries = vec![
        (0, vec![0], 3),
        (1, vec![0], 1),
        (3, vec![0], 4),
        (4, vec![0], 2),
        (5, vec![0], 50),
        (6, vec![1], 9),
        (7, vec![0], 11),
    ];
    SparseCountSequence::from_entries(Schema::new(8, vec![3]).unwrap(), entries).unwrap()
}

#[test]
fn univariate_posterior_is_conjugate_update() {
    let data = univariate_data();
    let mask = HoldoutMask::new(8, vec![5]).unwrap();
    let post = univariate_posterior(&data, Some(&mask), 0.01, 0.01).unwrap();
    // observed steps 0..5: cell 0 totals 10 over 5 steps
    assert_eq!(post[0], (10.01, 5.01));
    assert_eq!(post[1], (0.01, 5.01));
    assert_eq!(post[2], (0.01, 5.01));
    let all = univariate_posterior(&data, None, 0.01, 0.01).unwrap();
    assert_eq!(all[0], (0.01 + 71.0, 8.01));
    assert_eq!(all[1], (9.01, 8.01));
}

#[test]
fn univariate_posterior_without_observations_is_prior() {
    let data = SparseCountSequence::empty(Schema::new(6, vec![2]).unwrap());
    let post = univariate_posterior(&data, None, 0.5, 2.0).unwrap();
    assert_eq!(post, vec![(0.5, 8.0); 2]);
    let mask = HoldoutMask::new(5, vec![1]).unwrap();
    let data = SparseCountSequence::from_entries(Schema::new(5, vec![1]).unwrap(), [(1, vec![0], 7), (4, vec![0], 2)]).unwrap();
    assert_eq!(univariate_posterior(&data, Some(&mask), 0.5, 2.0).unwrap(), vec![(0.5, 4.0)]);
}

#[test]
fn univariate_posterior_mean_matches_quadrature() {
    let data = univariate_data();
    let mask = HoldoutMask::new(8, vec![5]).unwrap();
    let (a0, b0) = (0.01, 0.01);
    let post = univariate_posterior(&data, Some(&mask), a0, b0).unwrap();
    for (v, &(a, b)) in post.iter().enumerate() {
        let ys: Vec<u64> = (0..8)
            .filter(|&t| !mask.is_heldout(t))
            .map(|t| data.step(t).get(&[v as u32]))
            .collect();
        // μ = u^(1/a0) absorbs the prior's μ^(a0 - 1) into the measure
        let log_lik = |mu: f64| -b0 * mu + ys.iter().map(|&y| poisson_log_pmf(y, mu)).sum::<f64>();
        let peak = (a / b).max(1e-3);
        let scale = log_lik(peak);
        let hi = (a / b + 60.0 * a.sqrt() / b + 60.0 / b).powf(a0);
        let weight = |u: f64| if u == 0.0 { (log_lik(0.0) - scale).exp() } else { (log_lik(u.powf(1.0 / a0)) - scale).exp() };
        let z = integrate(weight, 0.0, hi, 1e-15);
        let m1 = integrate(|u| u.powf(1.0 / a0) * weight(u), 0.0, hi, 1e-15);
        assert!((m1 / z - a / b).abs() < 1e-10 * (a / b), "cell {v}: {} vs {}", m1 / z, a / b);
    }
}

#[test]
fn univariate_samples_follow_posterior() {
    let data = univariate_data();
    let mask = HoldoutMask::new(8, vec![5]).unwrap();
    let set = fit_static_univariate(&data, Some(&mask), 0.01, 0.01, 20_000, 3).unwrap();
    assert_eq!(set.len(), 20_000);
    assert_eq!(set.meta.model, "static-univariate");
    let draws: Vec<f64> = set
        .samples
        .iter()
        .map(|s| match &s.params {
            SnapshotParams::PerCell { rates } => rates[0],
            _ => panic!("wrong snapshot kind"),
        })
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let sd = (10.01f64).sqrt() / 5.01;
    assert!((mean - 10.01 / 5.01).abs() < 3.0 * sd / n.sqrt(), "{mean}");
    assert_eq!(set, fit_static_univariate(&data, Some(&mask), 0.01, 0.01, 20_000, 3).unwrap());
}

#[test]
fn univariate_model_needs_single_mode() {
    let data = SparseCountSequence::empty(Schema::new(6, vec![2, 2]).unwrap());
    assert!(matches!(univariate_posterior(&data, None, 1.0, 1.0), Err(Error::Dimension(_))));
    assert!(fit_static_univariate(&data, None, 1.0, 1.0, 5, 1).is_err());
}

fn small_config(seed: u64) -> McmcConfig {
    McmcConfig {
        n_iterations: 60,
        burn_in: 20,
        thin: 10,
        n_chains: 2,
        seed,
    }
}

#[test]
fn static_fit_on_one_step_is_plain_factorization() {
    let data = SparseCountSequence::from_entries(
        Schema::new(1, vec![3, 2]).unwrap(),
        [(0, vec![0, 0], 5), (0, vec![2, 1], 2)],
    )
    .unwrap();
    let hyper = StaticHyper { k: 2, ..StaticHyper::default() };
    let set = fit_static_cp(&data, None, &hyper, &small_config(1)).unwrap();
    assert_eq!(set.len(), 8);
    assert_eq!(set.meta.model, "static");
    for s in &set.samples {
        let rates = s.params.step_rates(0);
        assert_eq!(rates.len(), 6);
        assert!(rates.iter().all(|r| r.is_finite() && *r >= 0.0));
    }
}

#[test]
fn static_fit_is_deterministic_and_time_invariant() {
    let data = SparseCountSequence::from_entries(
        Schema::new(5, vec![4]).unwrap(),
        [(0, vec![1], 3), (2, vec![3], 1), (4, vec![1], 6)],
    )
    .unwrap();
    let hyper = StaticHyper { k: 3, ..StaticHyper::default() };
    let a = fit_static_cp(&data, None, &hyper, &small_config(2)).unwrap();
    assert_eq!(a, fit_static_cp(&data, None, &hyper, &small_config(2)).unwrap());
    for s in &a.samples {
        assert_eq!(s.params.step_rates(0), s.params.step_rates(4));
    }
}

#[test]
fn static_hyper_is_validated() {
    let data = SparseCountSequence::empty(Schema::new(5, vec![4]).unwrap());
    let bad = StaticHyper { a0: 0.0, ..StaticHyper::default() };
    assert!(matches!(fit_static_cp(&data, None, &bad, &small_config(3)), Err(Error::Config(_))));
}

/// Counts from a time-invariant CP model with `K = 3`.
fn static_cp_data(seed: u64) -> SparseCountSequence {
    let schema = Schema::new(20, vec![8, 6]).unwrap();
    let mut rng = chain_rng(seed, 0);
    let k = 3;
    let lambda: Vec<f64> = (0..k).map(|_| gamma(20.0, 1.0, &mut rng)).collect();
    let rows: Vec<Vec<Vec<f64>>> = schema
        .dims
        .iter()
        .map(|&d| {
            (0..k)
                .map(|_| {
                    let mut row = vec![0.0; d];
                    dirichlet(&vec![0.5; d], &mut row, &mut rng);
                    row
                })
                .collect()
        })
        .collect();
    let mut entries = Vec::new();
    for t in 0..schema.n_steps {
        for i in 0..8 {
            for j in 0..6 {
                let mu: f64 = (0..k).map(|kk| lambda[kk] * rows[0][kk][i] * rows[1][kk][j]).sum();
                let y = poisson(mu, &mut rng);
                if y > 0 {
                    entries.push((t, vec![i as u32, j as u32], y));
                }
            }
        }
    }
    SparseCountSequence::from_entries(schema, entries).unwrap()
}

#[test]
fn static_baseline_is_competitive_on_static_data() {
    let data = static_cp_data(4);
    let mask = make_holdout_mask(20, 4, &mut chain_rng(5, 0)).unwrap();
    let config = McmcConfig {
        n_iterations: 400,
        burn_in: 200,
        thin: 10,
        n_chains: 2,
        seed: 6,
    };
    let static_set = fit_static_cp(&data, Some(&mask), &StaticHyper { k: 3, ..StaticHyper::default() }, &config).unwrap();
    let hyper = ModelHyper {
        k: 3,
        stationary: true,
        ..ModelHyper::default()
    };
    let dyn_set = fit(&data, Some(&mask), &hyper, &config).unwrap();
    let r_static = information_rate(&static_set, &data, &mask, Subset::All).unwrap().rate;
    let r_dyn = information_rate(&dyn_set, &data, &mask, Subset::All).unwrap().rate;
    assert!(r_static <= r_dyn + 0.05, "static {r_static} vs dynamic {r_dyn}");
}
