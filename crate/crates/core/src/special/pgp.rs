//! Conditionals of the Poisson–gamma–Poisson chain
//! `m ~ Pois(θ c3), θ ~ Gam(ε + h, c2), h ~ Pois(c1)`.

use rand::Rng;

use super::bessel::{bessel_sample, BesselParams};
use super::sch::{sch_sample, SchParams};
use crate::error::{Error, Result};
use crate::random;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgpChain {
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Law of `h | m` with `θ` integrated out (zero shape offset only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalH {
    Poisson(f64),
    Sch(SchParams),
}

impl MarginalH {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            MarginalH::Poisson(mean) => random::poisson(*mean, rng),
            MarginalH::Sch(p) => sch_sample(p, rng),
        }
    }
}

impl PgpChain {
    /// `c2` must be positive; `c1` and `c3` may be zero (degenerate limits).
    pub fn new(epsilon: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let ok = epsilon >= 0.0
            && epsilon.is_finite()
            && c1 >= 0.0
            && c1.is_finite()
            && c2 > 0.0
            && c2.is_finite()
            && c3 >= 0.0
            && c3.is_finite();
        if !ok {
            return Err(Error::domain(format!(
                "chain constants out of range: eps={epsilon} c1={c1} c2={c2} c3={c3}"
            )));
        }
        Ok(PgpChain { epsilon, c1, c2, c3 })
    }

    /// Shape and rate of `θ | h, m`.
    pub fn theta_posterior(&self, h: u64, m: u64) -> (f64, f64) {
        (self.epsilon + h as f64 + m as f64, self.c2 + self.c3)
    }

    pub fn sample_theta<R: Rng + ?Sized>(&self, h: u64, m: u64, rng: &mut R) -> f64 {
        let (shape, rate) = self.theta_posterior(h, m);
        random::gamma(shape, rate, rng)
    }

    /// `h | θ ~ Bessel(ε - 1, 2 √(θ c2 c1))`; requires `ε > 0`.
    pub fn h_given_theta(&self, theta: f64) -> Result<BesselParams> {
        if self.epsilon == 0.0 {
            return Err(Error::Contract(
                "h | theta with zero shape offset is absorbing at h = 0; sample h with theta \
                 marginalized"
                    .into(),
            ));
        }
        BesselParams::new(self.epsilon - 1.0, 2.0 * (theta * self.c2 * self.c1).sqrt())
    }

    /// `ζ = c1 c2 / (c3 + c2)`.
    pub fn zeta(&self) -> f64 {
        self.c1 * self.c2 / (self.c3 + self.c2)
    }

    /// `h | m` with `θ` integrated out; requires `ε = 0`.
    pub fn h_marginal(&self, m: u64) -> Result<MarginalH> {
        if self.epsilon != 0.0 {
            return Err(Error::Contract(
                "theta-marginalized h conditional is only available for a zero shape offset"
                    .into(),
            ));
        }
        let zeta = self.zeta();
        if m == 0 {
            Ok(MarginalH::Poisson(zeta))
        } else {
            Ok(MarginalH::Sch(SchParams::new(m, zeta)?))
        }
    }

    /// Draws `h`: given `θ` when supplied, otherwise with `θ` integrated out.
    pub fn sample_h<R: Rng + ?Sized>(&self, m: u64, theta: Option<f64>, rng: &mut R) -> Result<u64> {
        match theta {
            Some(theta) => Ok(bessel_sample(&self.h_given_theta(theta)?, rng)),
            None => Ok(self.h_marginal(m)?.sample(rng)),
        }
    }
}

/// Posterior draw of `h` in the chain.
///
/// With `marginalize` the draw integrates `θ` out (requires `epsilon = 0`);
/// otherwise it conditions on `theta` (requires `epsilon > 0`).
#[allow(clippy::too_many_arguments)]
pub fn pgp_posterior_h<R: Rng + ?Sized>(
    m: u64,
    marginalize: bool,
    epsilon: f64,
    theta: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    rng: &mut R,
) -> Result<u64> {
    let chain = PgpChain::new(epsilon, c1, c2, c3)?;
    chain.sample_h(m, (!marginalize).then_some(theta), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::ChainRng;
    use rand::SeedableRng;

    #[test]
    fn zero_offset_without_marginalizing_is_refused() {
        let mut rng = ChainRng::seed_from_u64(0);
        let err = pgp_posterior_h(3, false, 0.0, 1.0, 1.0, 1.0, 1.0, &mut rng);
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn marginal_with_no_count_is_poisson() {
        let chain = PgpChain::new(0.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(chain.h_marginal(0).unwrap(), MarginalH::Poisson(0.5));
        let chain = PgpChain::new(0.0, 2.0, 1.0, 3.0).unwrap();
        match chain.h_marginal(2).unwrap() {
            MarginalH::Sch(p) => {
                assert_eq!(p.m(), 2);
                assert!((p.zeta() - 0.5).abs() < 1e-15);
            }
            other => panic!("expected SCH, got {other:?}"),
        }
    }

    #[test]
    fn vanishing_theta_gives_zero() {
        let mut rng = ChainRng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(pgp_posterior_h(0, false, 1.0, 1e-300, 1.0, 1.0, 1.0, &mut rng).unwrap(), 0);
        }
    }
}
