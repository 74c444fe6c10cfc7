//! Built-in correctness and scaling suites.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::Serialize;

use crate::diagnostics::quad::cdf_at_sorted;
use crate::diagnostics::{
    discrete_gof, geweke_test, ks_statistic_sorted, pgp_h_posterior_oracle, GewekeConfig, GewekeReport, Transition,
    DEFAULT_MONITORS,
};
use crate::error::{Error, Result};
use crate::eval::poisson_log_pmf;
use crate::gibbs::chain_rng;
use crate::model::conditionals::{tau_posterior, update_y_sources};
use crate::model::{sample_prior, sample_weights, step_forward, sweep, ModelHyper, ModelState};
use crate::random::{gamma, ChainRng};
use crate::special::{
    bessel_log_pmf, bessel_sample, rg1_log_pdf, rg1_sample, sch_log_pmf, sch_sample, BesselParams, MarginalH, PgpChain,
    Rg1Params, SchParams,
};
use crate::tensor::{Schema, SparseCountSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Distributions,
    Geweke,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Distributions, Suite::Geweke, Suite::Scaling];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Distributions => "distributions",
            Suite::Geweke => "geweke",
            Suite::Scaling => "scaling",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.group, self.name, self.detail)
    }
}

fn check(group: &str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        group: group.into(),
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Distributions => {
            let mut out = discrete_samplers(1_000_000, seed)?;
            out.extend(marginal_h_oracle(1_000_000, seed)?);
            out.extend(rg1_equivalence(200_000, 1_000_000, seed)?);
            out.extend(moment_identities(1_000_000, seed)?);
            Ok(out)
        }
        Suite::Geweke => Ok(geweke_suite(10_000, seed)?.0),
        Suite::Scaling => Ok(vec![allocation_scaling(seed)?]),
    }
}

/// Chi-square fit of the Bessel and SCH samplers on a parameter grid, plus
/// normalization of their log-PMFs.
pub fn discrete_samplers(n_draws: usize, seed: u64) -> Result<Vec<Check>> {
    const ALPHA: f64 = 0.01;
    let mut out = Vec::new();
    let mut stream = 0;
    for order in [-0.5, 0.0, 2.0] {
        for scale in [0.2, 5.0, 100.0] {
            let p = BesselParams::new(order, scale)?;
            let mut rng = chain_rng(seed, stream);
            stream += 1;
            let r = discrete_gof(|| bessel_sample(&p, &mut rng), |n| bessel_log_pmf(&p, n), n_draws);
            let norm = (r.mass - 1.0).abs();
            out.push(check(
                "discrete",
                format!("bessel(v={order}, a={scale})"),
                r.p_value >= ALPHA && norm <= 1e-6,
                format!("chi2={:.2} dof={} p={:.4} |mass-1|={norm:.1e}", r.statistic, r.dof, r.p_value),
            ));
        }
    }
    for m in [1u64, 2, 10, 100] {
        for zeta in [0.1, 5.0, 200.0] {
            let p = SchParams::new(m, zeta)?;
            let mut rng = chain_rng(seed, stream);
            stream += 1;
            let r = discrete_gof(
                || sch_sample(&p, &mut rng),
                |h| sch_log_pmf(&p, h).unwrap_or(f64::NEG_INFINITY),
                n_draws,
            );
            let norm = (r.mass - 1.0).abs();
            out.push(check(
                "discrete",
                format!("sch(m={m}, zeta={zeta})"),
                r.p_value >= ALPHA && norm <= 1e-6,
                format!("chi2={:.2} dof={} p={:.4} |mass-1|={norm:.1e}", r.statistic, r.dof, r.p_value),
            ));
        }
    }
    Ok(out)
}

/// `(m, c1, c2, c3)` settings for the marginal source check.
pub const MARGINAL_SETTINGS: [(u64, f64, f64, f64); 12] = [
    (0, 2.0, 1.0, 0.5),
    (1, 0.5, 1.0, 1.0),
    (1, 5.0, 2.0, 0.3),
    (2, 1.0, 1.0, 1.0),
    (3, 10.0, 0.5, 2.0),
    (5, 0.1, 1.0, 1.0),
    (10, 3.0, 1.0, 0.2),
    (10, 50.0, 2.0, 5.0),
    (25, 2.0, 0.3, 0.7),
    (50, 20.0, 1.0, 1.0),
    (100, 5.0, 1.0, 0.1),
    (100, 100.0, 4.0, 1.0),
];

/// The closed-form `h | m` law of the sparse chain against numerical
/// integration over `θ`, in total variation, exactly and from draws.
pub fn marginal_h_oracle(n_draws: usize, seed: u64) -> Result<Vec<Check>> {
    const TOL: f64 = 0.01;
    let mut out = Vec::new();
    for (s, &(m, c1, c2, c3)) in MARGINAL_SETTINGS.iter().enumerate() {
        let oracle = pgp_h_posterior_oracle(m, 0.0, c1, c2, c3);
        let law = PgpChain::new(0.0, c1, c2, c3)?.h_marginal(m)?;
        let pmf = |h: u64| match &law {
            MarginalH::Poisson(z) => poisson_log_pmf(h, *z).exp(),
            MarginalH::Sch(p) => sch_log_pmf(p, h).map_or(0.0, f64::exp),
        };
        let mut covered = 0.0;
        let mut tv = 0.0;
        for (h, q) in oracle.iter().enumerate() {
            let p = pmf(h as u64);
            covered += p;
            tv += (p - q).abs();
        }
        let exact_tv = 0.5 * (tv + (1.0 - covered).max(0.0));

        let mut rng = chain_rng(seed, 100 + s);
        let mut counts = vec![0u64; oracle.len()];
        let mut outside = 0u64;
        for _ in 0..n_draws {
            match counts.get_mut(law.sample(&mut rng) as usize) {
                Some(c) => *c += 1,
                None => outside += 1,
            }
        }
        let n = n_draws as f64;
        let emp_tv = 0.5
            * (counts
                .iter()
                .zip(&oracle)
                .map(|(&c, q)| (c as f64 / n - q).abs())
                .sum::<f64>()
                + outside as f64 / n);
        out.push(check(
            "marginal-h",
            format!("m={m} c1={c1} c2={c2} c3={c3}"),
            exact_tv < TOL && emp_tv < TOL,
            format!("tv(pmf)={exact_tv:.2e} tv(draws)={emp_tv:.2e}"),
        ));
    }
    Ok(out)
}

/// Compound Poisson–gamma draws against the closed-form RG1 density (KS) and
/// the zero atom of the zero-offset case.
pub fn rg1_equivalence(n_ks: usize, n_atom: usize, seed: u64) -> Result<Vec<Check>> {
    const ALPHA: f64 = 0.01;
    let mut out = Vec::new();
    for (s, (eps, intensity, rate)) in [(0.5, 1.0, 1.0), (1.0, 3.0, 2.0), (3.0, 5.0, 0.5)].into_iter().enumerate() {
        let p = Rg1Params::new(eps, intensity, rate)?;
        let mut rng = chain_rng(seed, 200 + s);
        let mut xs: Vec<f64> = (0..n_ks).map(|_| rg1_sample(&p, &mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let cdf = cdf_at_sorted(&xs, 0.0, |x| rg1_log_pdf(&p, x).map_or(0.0, f64::exp));
        let d = ks_statistic_sorted(&xs, &cdf);
        let sn = (n_ks as f64).sqrt();
        let pv = crate::diagnostics::kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
        out.push(check(
            "rg1",
            format!("eps={eps} intensity={intensity} rate={rate}"),
            pv >= ALPHA,
            format!("ks={d:.5} p={pv:.4} cdf(max)={:.8}", cdf.last().copied().unwrap_or(0.0)),
        ));
    }
    let intensity = 1.5;
    let p = Rg1Params::new(0.0, intensity, 1.0)?;
    let mut rng = chain_rng(seed, 210);
    let zeros = (0..n_atom).filter(|_| rg1_sample(&p, &mut rng) == 0.0).count();
    let want = (-intensity).exp();
    let frac = zeros as f64 / n_atom as f64;
    let se = (want * (1.0 - want) / n_atom as f64).sqrt();
    out.push(check(
        "rg1",
        format!("eps=0 atom (intensity={intensity})"),
        (frac - want).abs() <= 3.0 * se,
        format!("zero fraction {frac:.5} vs {want:.5} (3 SE = {:.5})", 3.0 * se),
    ));
    Ok(out)
}

fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    (mean, (m2 / (n - 1.0) / n).sqrt())
}

/// Monte Carlo checks of the conditional mean of the latent chain and of the
/// expected total weight.
pub fn moment_identities(n_reps: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = 3;
    let pi = [0.6, 0.1, 0.3, 0.3, 0.7, 0.2, 0.1, 0.2, 0.5];
    let theta_prev = [0.5, 2.0, 4.0];
    let tau = 2.0;
    for (s, eps) in [1.0, 0.0].into_iter().enumerate() {
        let mut rng = chain_rng(seed, 300 + s);
        let mut draws = vec![0.0; n_reps * k];
        let (mut split, mut h, mut theta) = (vec![0; k * k], vec![0; k], vec![0.0; k]);
        for r in 0..n_reps {
            step_forward(&theta_prev, &pi, tau, eps, &mut split, &mut h, &mut theta, &mut rng);
            draws[r * k..(r + 1) * k].copy_from_slice(&theta);
        }
        for c in 0..k {
            let want = eps / tau + (0..k).map(|j| pi[c * k + j] * theta_prev[j]).sum::<f64>();
            let (mean, se) = mean_and_se(draws.iter().skip(c).step_by(k).copied());
            out.push(check(
                "moments",
                format!("E[theta_{c} | prev], eps={eps}"),
                (mean - want).abs() <= 3.0 * se,
                format!("{mean:.5} vs {want:.5} (3 SE = {:.5})", 3.0 * se),
            ));
        }
    }
    let (eps_lambda, gamma_, beta) = (1.0, 3.0, 2.0);
    let want = (eps_lambda + gamma_) / beta;
    for (s, kk) in [1usize, 10, 100].into_iter().enumerate() {
        let mut rng = chain_rng(seed, 310 + s);
        let (mean, se) = mean_and_se((0..n_reps).map(|_| sample_weights(eps_lambda, kk, gamma_, beta, &mut rng).1.iter().sum()));
        out.push(check(
            "moments",
            format!("E[sum lambda], K={kk}"),
            (mean - want).abs() <= 3.0 * se,
            format!("{mean:.5} vs {want:.5} (3 SE = {:.5})", 3.0 * se),
        ));
    }
    Ok(out)
}

/// Sweep with the `τ` draw replaced by one from a doubled rate.
pub fn broken_tau_transition() -> Box<Transition> {
    Box::new(|state, hyper, data, rng| {
        sweep(state, hyper, data, false, rng)?;
        let (shape, rate) = tau_posterior(state, hyper);
        state.tau = gamma(shape, 2.0 * rate, rng);
        Ok(())
    })
}

/// The four Geweke configurations and the broken-`τ` mutation.
pub fn geweke_suite(n_samples: usize, seed: u64) -> Result<(Vec<Check>, Vec<GewekeReport>)> {
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for (eps, stationary) in [(1.0, false), (1.0, true), (0.0, false), (0.0, true)] {
        let label = format!("eps_theta={eps} {}", if stationary { "stationary" } else { "per-step" });
        let mut config = GewekeConfig::tiny(&label, eps, stationary, seed);
        config.n_samples = n_samples;
        let report = geweke_test(&config, &DEFAULT_MONITORS, None)?;
        checks.push(check(
            "geweke",
            label,
            report.passed(),
            format!("min p={:.2e} vs {:.1e}", report.min_p_value(), report.rows[0].threshold),
        ));
        reports.push(report);
    }
    let broken = broken_tau_transition();
    let mut config = GewekeConfig::tiny("mutation: tau rate doubled", 1.0, false, seed);
    config.n_samples = n_samples;
    let report = geweke_test(&config, &DEFAULT_MONITORS, Some(broken.as_ref()))?;
    checks.push(check(
        "geweke",
        "mutation detected",
        !report.passed(),
        format!("min p={:.2e}", report.min_p_value()),
    ));
    reports.push(report);
    Ok((checks, reports))
}

/// A single-step problem with `nnz` non-zeros ready for timed allocation passes.
pub struct AllocationBench {
    state: ModelState,
    data: SparseCountSequence,
    rng: ChainRng,
}

impl AllocationBench {
    pub fn new(nnz: usize, k: usize, seed: u64) -> Result<Self> {
        let side = 4096usize;
        let schema = Schema::new(1, vec![side, side])?;
        let hyper = ModelHyper {
            a0: 1.0,
            b0: 1.0,
            k,
            ..ModelHyper::default()
        };
        let mut rng = chain_rng(seed, 400);
        let mut state = sample_prior(&hyper, &schema, &mut rng);
        state.lambda.fill(1.0);
        state.theta.fill(1.0);
        let entries = sample_indices(&mut rng, side * side, nnz).into_iter().map(|c| {
            let idx = vec![(c / side) as u32, (c % side) as u32];
            (0usize, idx, 1 + rng.random_range(0..4u64))
        });
        let entries: Vec<_> = entries.collect();
        let data = SparseCountSequence::from_entries(schema, entries)?;
        update_y_sources(&mut state, &data, false, &mut rng)?;
        Ok(AllocationBench { state, data, rng })
    }

    /// Wall time of one allocation pass.
    pub fn time_pass(&mut self) -> Result<f64> {
        let start = Instant::now();
        update_y_sources(&mut self.state, &self.data, false, &mut self.rng)?;
        Ok(start.elapsed().as_secs_f64())
    }
}

/// Fastest of five allocation passes over a single step with `nnz` non-zeros.
pub fn allocation_time(nnz: usize, k: usize, seed: u64) -> Result<f64> {
    let mut bench = AllocationBench::new(nnz, k, seed)?;
    (0..5).try_fold(f64::INFINITY, |best, _| Ok(best.min(bench.time_pass()?)))
}

/// Doubling the non-zeros at fixed `K` should roughly double allocation time.
///
/// Each repetition alternates passes over both sizes and keeps the fastest
/// of each; the reported ratio is the median over repetitions.
pub fn allocation_scaling(seed: u64) -> Result<Check> {
    let (small, large, k, reps) = (1usize << 18, 1usize << 19, 16, 5);
    let mut ratios = Vec::with_capacity(reps);
    let (mut ts_small, mut ts_large) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
    for r in 0..reps as u64 {
        let mut a = AllocationBench::new(small, k, seed + r)?;
        let mut b = AllocationBench::new(large, k, seed + r)?;
        let (mut best_a, mut best_b) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..5 {
            best_a = best_a.min(a.time_pass()?);
            best_b = best_b.min(b.time_pass()?);
        }
        ts_small.push(best_a);
        ts_large.push(best_b);
        ratios.push(best_b / best_a);
    }
    let median = |mut ts: Vec<f64>| {
        ts.sort_by(f64::total_cmp);
        ts[reps / 2]
    };
    let t_small = median(ts_small);
    let t_large = median(ts_large);
    let ratio = median(ratios);
    Ok(check(
        "scaling",
        format!("allocation S={small} -> {large}, K={k}"),
        (1.6..=2.5).contains(&ratio),
        format!("median {:.4}s -> {:.4}s, median ratio {ratio:.3}", t_small, t_large),
    ))
}
