use rand::Rng;
use serde::{Deserialize, Serialize};

use super::functions::ln_bessel_series;
use crate::error::{Error, Result};
use crate::random;

/// Randomized gamma distribution of the first type: `θ ~ Gam(ε + h, β)`
/// with `h ~ Pois(intensity)` integrated out.
///
/// With `ε = 0` the law has an atom of mass `e^{-intensity}` at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rg1Params {
    shape: f64,
    intensity: f64,
    rate: f64,
}

impl Rg1Params {
    pub fn new(shape: f64, intensity: f64, rate: f64) -> Result<Self> {
        if !(shape >= 0.0) || !shape.is_finite() {
            return Err(Error::domain(format!("RG1 shape offset must be >= 0, got {shape}")));
        }
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::domain(format!("RG1 intensity must be >= 0, got {intensity}")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::domain(format!("RG1 rate must be > 0, got {rate}")));
        }
        Ok(Rg1Params {
            shape,
            intensity,
            rate,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Mass of the atom at zero.
    pub fn zero_mass(&self) -> f64 {
        if self.shape == 0.0 {
            (-self.intensity).exp()
        } else {
            0.0
        }
    }

    pub fn mean(&self) -> f64 {
        (self.shape + self.intensity) / self.rate
    }
}

pub fn rg1_sample<R: Rng + ?Sized>(params: &Rg1Params, rng: &mut R) -> f64 {
    let h = random::poisson(params.intensity, rng);
    random::gamma(params.shape + h as f64, params.rate, rng)
}

/// Log density on `θ > 0`.
///
/// `ln p(θ) = -λ - βθ + ε ln β + (ε-1) ln θ + ln Σ_h (λβθ)^h / (h! Γ(h+ε))`,
/// the last term being `I_{ε-1}(2√(λβθ))` up to a power of its argument.
/// Not defined for `ε = 0`, where the law is mixed.
pub fn rg1_log_pdf(params: &Rg1Params, theta: f64) -> Result<f64> {
    if params.shape == 0.0 {
        return Err(Error::Contract(
            "RG1 with zero shape offset has an atom at zero; use the mixed representation"
                .into(),
        ));
    }
    if !(theta > 0.0) {
        return Err(Error::domain(format!("RG1 density needs theta > 0, got {theta}")));
    }
    let (eps, lam, beta) = (params.shape, params.intensity, params.rate);
    Ok(-lam - beta * theta + eps * beta.ln() + (eps - 1.0) * theta.ln()
        + ln_bessel_series(eps - 1.0, lam * beta * theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::ChainRng;
    use rand::SeedableRng;

    #[test]
    fn zero_intensity_reduces_to_gamma() {
        let p = Rg1Params::new(1.0, 0.0, 2.0).unwrap();
        let got = rg1_log_pdf(&p, 1.0).unwrap();
        assert!((got - (2f64.ln() - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn zero_shape_density_is_refused() {
        let p = Rg1Params::new(0.0, 1.0, 1.0).unwrap();
        assert!(matches!(rg1_log_pdf(&p, 1.0), Err(Error::Contract(_))));
        assert_eq!(p.zero_mass(), (-1f64).exp());
    }

    #[test]
    fn degenerate_draws_are_exact_zero() {
        let p = Rg1Params::new(0.0, 0.0, 1.0).unwrap();
        let mut rng = ChainRng::seed_from_u64(4);
        assert!((0..1000).all(|_| rg1_sample(&p, &mut rng) == 0.0));
    }

    #[test]
    fn sample_mean_is_iterated_expectation() {
        let p = Rg1Params::new(1.0, 2.0, 1.0).unwrap();
        let mut rng = ChainRng::seed_from_u64(5);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rg1_sample(&p, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 3.0).abs() < 3.0 * (var / n as f64).sqrt(), "mean {mean}");
    }
}
