//! Variate generators shared by the samplers.
//!
//! Two conventions matter throughout the crate: a gamma draw with shape zero
//! is exactly `0.0`, and a Poisson draw with mean zero is exactly `0`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Seeded generator used for every chain, simulation and test stream.
pub type ChainRng = rand_chacha::ChaCha8Rng;

/// Draws `Gamma(shape, rate)`; shape zero yields exactly zero.
pub fn gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape >= 0.0 && rate > 0.0, "gamma({shape}, {rate})");
    if shape == 0.0 {
        return 0.0;
    }
    match Gamma::new(shape, 1.0 / rate) {
        Ok(d) => d.sample(rng),
        Err(_) => f64::NAN,
    }
}

/// Log of a `Gamma(shape, 1)` draw, computed without underflow for tiny shapes.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        // G(a) = G(a + 1) * U^(1/a)
        let boosted = gamma(shape + 1.0, 1.0, rng);
        let u: f64 = rng.random::<f64>();
        boosted.ln() + (1.0 - u).ln() / shape
    } else {
        gamma(shape, 1.0, rng).ln()
    }
}

/// Draws `Poisson(mean)` as an integer; mean zero yields zero.
pub fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean >= 0.0, "poisson({mean})");
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        Err(_) => u64::MAX,
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).map(|d| d.sample(rng)).unwrap_or(0)
}

/// Draws an index with probability proportional to `weights`; `total` is their sum.
pub fn categorical<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return k;
            }
            u -= w;
            last = k;
        }
    }
    last
}

const SMALL_COUNT: u64 = 8;

/// Splits `n` across `weights` multinomially, writing into `out` (overwritten).
///
/// Components with zero weight receive nothing. Fails if `n > 0` and every
/// weight is zero.
pub fn multinomial<R: Rng + ?Sized>(
    n: u64,
    weights: &[f64],
    out: &mut [u64],
    rng: &mut R,
) -> Result<()> {
    debug_assert_eq!(weights.len(), out.len());
    out.fill(0);
    if n == 0 {
        return Ok(());
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Inconsistent(format!(
            "cannot allocate count {n} across weights summing to {total}"
        )));
    }
    if n <= SMALL_COUNT {
        for _ in 0..n {
            out[categorical(weights, total, rng)] += 1;
        }
        return Ok(());
    }
    let last = weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("positive total implies a positive weight");
    let mut remaining = n;
    let mut mass = total;
    for (k, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if w <= 0.0 {
            continue;
        }
        if k == last {
            out[k] = remaining;
            break;
        }
        let x = binomial(remaining, w / mass, rng);
        out[k] = x;
        remaining -= x;
        mass -= w;
    }
    Ok(())
}

/// Draws from `Dirichlet(alpha)` into `out` by normalizing gamma variates.
///
/// When every gamma draw underflows (small concentrations), the draw is
/// repeated in log space so the result is always a proper simplex point.
pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], out: &mut [f64], rng: &mut R) {
    debug_assert_eq!(alpha.len(), out.len());
    let mut total = 0.0;
    for (o, &a) in out.iter_mut().zip(alpha) {
        *o = gamma(a, 1.0, rng);
        total += *o;
    }
    if total > 0.0 && total.is_finite() {
        out.iter_mut().for_each(|o| *o /= total);
        return;
    }
    for (o, &a) in out.iter_mut().zip(alpha) {
        *o = ln_gamma_variate(a, rng);
    }
    let max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_shape_gamma_is_exact_zero() {
        let mut rng = ChainRng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(gamma(0.0, 3.0, &mut rng), 0.0);
        }
    }

    #[test]
    fn gamma_mean() {
        let mut rng = ChainRng::seed_from_u64(2);
        let n = 200_000;
        let (shape, rate) = (3.0, 2.0);
        let xs: Vec<f64> = (0..n).map(|_| gamma(shape, rate, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = (shape / (rate * rate) / n as f64).sqrt();
        assert!((mean - 1.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn multinomial_preserves_total_and_skips_zero_weights() {
        let mut rng = ChainRng::seed_from_u64(3);
        let w = [0.0, 2.0, 0.0, 1.0];
        let mut out = [0u64; 4];
        for n in [0u64, 1, 2, 17, 1000] {
            multinomial(n, &w, &mut out, &mut rng).unwrap();
            assert_eq!(out.iter().sum::<u64>(), n);
            assert_eq!(out[0], 0);
            assert_eq!(out[2], 0);
        }
    }

    #[test]
    fn multinomial_rejects_all_zero_weights() {
        let mut rng = ChainRng::seed_from_u64(4);
        let mut out = [0u64; 2];
        assert!(multinomial(3, &[0.0, 0.0], &mut out, &mut rng).is_err());
        assert!(multinomial(0, &[0.0, 0.0], &mut out, &mut rng).is_ok());
    }

    #[test]
    fn dirichlet_tiny_concentration_is_on_simplex() {
        let mut rng = ChainRng::seed_from_u64(5);
        let alpha = [1e-3; 6];
        let mut out = [0.0; 6];
        for _ in 0..1000 {
            dirichlet(&alpha, &mut out, &mut rng);
            let s: f64 = out.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(out.iter().all(|&x| x >= 0.0 && x.is_finite()));
        }
    }
}
