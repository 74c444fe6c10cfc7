use rand::Rng;
use serde::{Deserialize, Serialize};

use super::functions::{ln_gamma, ln_hyp1f1};
use super::table::DiscreteTable;
use crate::error::{Error, Result};

/// Shifted confluent hypergeometric distribution on `{1, 2, ...}`.
///
/// `P(h) ∝ ζ^h Γ(m+h) / (h! Γ(h))`, normalized by `ζ m! 1F1(m+1; 2; ζ)`.
/// It is the law of `h` given `m ≥ 1` in the chain
/// `m ~ Pois(θ c3), θ ~ Gam(h, c2), h ~ Pois(c1)` once `θ` is integrated
/// out, with `ζ = c1 c2 / (c2 + c3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchParams {
    m: u64,
    zeta: f64,
}

impl SchParams {
    /// `zeta = 0` is accepted as the point mass at `h = 1`.
    pub fn new(m: u64, zeta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("SCH count m must be at least 1"));
        }
        if !(zeta >= 0.0) || !zeta.is_finite() {
            return Err(Error::domain(format!("SCH rate must be >= 0, got {zeta}")));
        }
        Ok(SchParams { m, zeta })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `P(h+1) / P(h)` for `h ≥ 1`.
    pub fn ratio(&self, h: u64) -> f64 {
        let h = h as f64;
        self.zeta * (self.m as f64 + h) / ((h + 1.0) * h)
    }

    pub fn ln_normalizer(&self) -> f64 {
        let m = self.m as f64;
        self.zeta.ln() + ln_gamma(m + 1.0) + ln_hyp1f1(m + 1.0, 2.0, self.zeta)
    }

    pub fn table(&self) -> DiscreteTable {
        if self.zeta == 0.0 {
            return DiscreteTable::point(1);
        }
        let z = self.zeta;
        let root = ((z - 1.0) + ((1.0 - z) * (1.0 - z) + 4.0 * z * self.m as f64).sqrt()) / 2.0;
        let guess = root.max(1.0).floor() as u64;
        DiscreteTable::build(1, guess, |h| self.ratio(h))
            .expect("SCH mass ratios are finite for validated parameters")
    }
}

pub fn sch_log_pmf(params: &SchParams, h: u64) -> Result<f64> {
    if h == 0 {
        return Err(Error::domain("SCH support starts at h = 1"));
    }
    if params.zeta == 0.0 {
        return Ok(if h == 1 { 0.0 } else { f64::NEG_INFINITY });
    }
    let (m, hf) = (params.m as f64, h as f64);
    Ok(hf * params.zeta.ln() + ln_gamma(m + hf) - ln_gamma(hf + 1.0) - ln_gamma(hf)
        - params.ln_normalizer())
}

pub fn sch_sample<R: Rng + ?Sized>(params: &SchParams, rng: &mut R) -> u64 {
    if params.zeta == 0.0 {
        return 1;
    }
    params.table().sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::ChainRng;
    use rand::SeedableRng;

    #[test]
    fn zero_is_outside_support() {
        let p = SchParams::new(2, 0.5).unwrap();
        assert!(sch_log_pmf(&p, 0).is_err());
        assert!(SchParams::new(0, 0.5).is_err());
        assert!(SchParams::new(1, -1.0).is_err());
    }

    #[test]
    fn vanishing_rate_concentrates_on_one() {
        let p = SchParams::new(1, 1e-12).unwrap();
        assert!(sch_log_pmf(&p, 1).unwrap().abs() < 1e-11);
        let mut rng = ChainRng::seed_from_u64(1);
        assert!((0..10_000).all(|_| sch_sample(&p, &mut rng) == 1));
    }

    #[test]
    fn ratio_identity_in_log_space() {
        for (m, z) in [(1, 0.3), (2, 0.5), (10, 7.0), (100, 50.0), (3, 1e-4)] {
            let p = SchParams::new(m, z).unwrap();
            for h in 1..60u64 {
                let lhs = sch_log_pmf(&p, h + 1).unwrap() - sch_log_pmf(&p, h).unwrap();
                let rhs = p.ratio(h).ln();
                assert!((lhs - rhs).abs() < 1e-12, "m={m} z={z} h={h}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn pmf_normalizes_and_matches_table() {
        for (m, z) in [(1, 0.1), (2, 0.5), (10, 2.0), (100, 50.0)] {
            let p = SchParams::new(m, z).unwrap();
            let total: f64 = (1..3000).map(|h| sch_log_pmf(&p, h).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-10, "m={m} z={z} total={total}");
            let t = p.table();
            let (lo, hi) = t.range();
            assert!(lo >= 1);
            for h in lo..=hi {
                assert!((t.prob(h) - sch_log_pmf(&p, h).unwrap().exp()).abs() < 1e-12);
            }
        }
    }
}
