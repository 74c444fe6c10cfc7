use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Pooled-tail chi-square comparison of draws against a log-PMF.
#[derive(Debug, Clone, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: usize,
    /// Sum of the PMF over the enumerated support.
    pub mass: f64,
}

/// Largest support point enumerated.
const MAX_SUPPORT: u64 = 50_000_000;

/// Chi-square goodness of fit of `n_draws` draws from `sample` against `log_pmf`.
///
/// The PMF is enumerated from zero until its tail is negligible. Adjacent
/// support points are pooled until each bin expects at least five draws; the
/// first bin is open below and the last open above, so draws outside the
/// enumerated support still count against the fit.
pub fn discrete_gof(mut sample: impl FnMut() -> u64, log_pmf: impl Fn(u64) -> f64, n_draws: usize) -> GofReport {
    let mut probs = Vec::new();
    let mut peak = 0.0f64;
    let mut mass = 0.0;
    for n in 0..=MAX_SUPPORT {
        let p = log_pmf(n).exp();
        let p = if p.is_finite() { p } else { 0.0 };
        let falling = probs.last().is_some_and(|&q: &f64| p <= q);
        probs.push(p);
        mass += p;
        peak = peak.max(p);
        if peak > 0.0 && falling && p < 1e-17 * peak.max(1e-300) && mass > 0.5 {
            break;
        }
    }

    let n = n_draws as f64;
    let mut edges = Vec::new();
    let mut expected = Vec::new();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p * n;
        if acc >= 5.0 {
            edges.push(i as u64);
            expected.push(acc);
            acc = 0.0;
        }
    }
    if edges.is_empty() {
        edges.push(probs.len() as u64 - 1);
        expected.push(acc);
    } else if let Some(last) = expected.last_mut() {
        *last += acc;
    }
    let n_bins = edges.len();
    *edges.last_mut().expect("at least one bin") = u64::MAX;

    let mut observed = vec![0u64; n_bins];
    for _ in 0..n_draws {
        let x = sample();
        let b = edges.partition_point(|&e| e < x);
        observed[b.min(n_bins - 1)] += 1;
    }
    let total_expected: f64 = expected.iter().sum();
    let statistic: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let e = e * n / total_expected;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = n_bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(statistic)
    };
    GofReport {
        statistic,
        dof,
        p_value,
        bins: n_bins,
        mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{poisson, ChainRng};
    use rand::SeedableRng;

    fn pois_log_pmf(mean: f64) -> impl Fn(u64) -> f64 {
        move |n| {
            let n = n as f64;
            n * mean.ln() - mean - statrs::function::gamma::ln_gamma(n + 1.0)
        }
    }

    #[test]
    fn point_mass_passes_trivially() {
        let r = discrete_gof(|| 3, |n| if n == 3 { 0.0 } else { f64::NEG_INFINITY }, 1000);
        assert_eq!(r.dof, 0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn exact_sampler_passes_and_shift_fails() {
        let mut rng = ChainRng::seed_from_u64(4);
        let ok = discrete_gof(|| poisson(6.0, &mut rng), pois_log_pmf(6.0), 100_000);
        assert!(ok.p_value > 0.001, "{ok:?}");
        assert!((ok.mass - 1.0).abs() < 1e-12);
        let bad = discrete_gof(|| poisson(6.0, &mut rng) + 1, pois_log_pmf(6.0), 100_000);
        assert!(bad.p_value < 1e-10, "{bad:?}");
    }
}
