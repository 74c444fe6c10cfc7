/// Kolmogorov–Smirnov statistic with its asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn p_value(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// `sup |F_n - F|` given sorted samples and the model CDF at each of them.
pub fn ks_statistic_sorted(sorted: &[f64], cdf: &[f64]) -> f64 {
    assert_eq!(sorted.len(), cdf.len());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let below = i as f64 / n;
        let above = (j + 1) as f64 / n;
        d = d.max((cdf[j] - below).abs()).max((above - cdf[j]).abs());
        i = j + 1;
    }
    d
}

pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsReport {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<f64> = sorted.iter().map(|&x| cdf(x)).collect();
    let statistic = ks_statistic_sorted(&sorted, &values);
    KsReport {
        statistic,
        p_value: p_value(statistic, sorted.len() as f64),
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsReport {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    KsReport {
        statistic: d,
        p_value: p_value(d, na * nb / (na + nb)),
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Largest gap between matching quantiles (5%..95%), in units of the pooled
/// standard deviation.
pub fn qq_max_deviation(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let pooled: Vec<f64> = a.iter().chain(&b).copied().collect();
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let var = pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / pooled.len() as f64;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (5..=95)
        .map(|i| {
            let p = i as f64 / 100.0;
            (quantile(&a, p) - quantile(&b, p)).abs() / scale
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gamma, ChainRng};
    use rand::{Rng, SeedableRng};

    #[test]
    fn kolmogorov_tail_reference_points() {
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn uniform_samples_fit_uniform_cdf() {
        let mut rng = ChainRng::seed_from_u64(1);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let r = ks_one_sample(&xs, |x| x);
        assert!(r.p_value > 0.001, "{r:?}");
        let shifted = ks_one_sample(&xs, |x| (x * 1.05).min(1.0));
        assert!(shifted.p_value < 1e-6);
    }

    #[test]
    fn two_sample_detects_scale_change() {
        let mut rng = ChainRng::seed_from_u64(2);
        let a: Vec<f64> = (0..5000).map(|_| gamma(2.0, 1.0, &mut rng)).collect();
        let b: Vec<f64> = (0..5000).map(|_| gamma(2.0, 1.0, &mut rng)).collect();
        let c: Vec<f64> = (0..5000).map(|_| gamma(2.0, 1.2, &mut rng)).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.001);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
        assert!(qq_max_deviation(&a, &b) < qq_max_deviation(&a, &c));
    }

    #[test]
    fn ties_are_handled() {
        let a = [1.0, 1.0, 2.0, 2.0];
        assert_eq!(ks_two_sample(&a, &a).statistic, 0.0);
        assert_eq!(ks_statistic_sorted(&[0.5, 0.5], &[0.5, 0.5]), 0.5);
    }
}
