//! Mode-anchored probability tables for log-concave discrete distributions.
//!
//! Given the successive ratio `r(n) = P(n+1) / P(n)`, which must be
//! non-increasing on the support, the table stores unnormalized masses
//! relative to the mode (mass 1) and extends in both directions until the
//! geometric bound on each remaining tail falls below `TAIL_RTOL` of the
//! accumulated mass. Sampling is inverse-CDF over the stored masses.

use rand::Rng;

use crate::error::{Error, Result};

const TAIL_RTOL: f64 = 1e-17;
const MAX_WIDTH: usize = 1 << 26;

#[derive(Debug, Clone)]
pub struct DiscreteTable {
    lo: u64,
    mode: u64,
    weights: Vec<f64>,
    total: f64,
}

impl DiscreteTable {
    /// Point mass at `at`.
    pub fn point(at: u64) -> Self {
        DiscreteTable {
            lo: at,
            mode: at,
            weights: vec![1.0],
            total: 1.0,
        }
    }

    /// Builds the table for support `{support_min, support_min + 1, ...}`.
    ///
    /// `guess` seeds the mode search; the mode itself is certified by the
    /// ratio crossing one, so a poor guess only costs extra steps.
    pub fn build(support_min: u64, guess: u64, ratio: impl Fn(u64) -> f64) -> Result<Self> {
        let mode = locate_mode(support_min, guess.max(support_min), &ratio)?;

        let mut below = Vec::new();
        let mut above = Vec::new();
        let mut total = 1.0;

        // Upward: w(n+1) = w(n) r(n).
        let mut w = 1.0;
        let mut n = mode;
        loop {
            let r = ratio(n);
            check_ratio(r, n)?;
            if r == 0.0 {
                break;
            }
            w *= r;
            above.push(w);
            total += w;
            n += 1;
            let r_next = ratio(n);
            check_ratio(r_next, n)?;
            if r_next < 1.0 && w * r_next / (1.0 - r_next) < TAIL_RTOL * total {
                break;
            }
            if above.len() > MAX_WIDTH {
                return Err(Error::domain("probability table exceeds maximum width"));
            }
        }

        // Downward: w(n-1) = w(n) / r(n-1).
        let mut w = 1.0;
        let mut n = mode;
        while n > support_min {
            let r = ratio(n - 1);
            check_ratio(r, n - 1)?;
            w /= r;
            below.push(w);
            total += w;
            n -= 1;
            if n == support_min {
                break;
            }
            // Subsequent downward ratios 1/r(n-2), ... are no larger than this one.
            let q = 1.0 / ratio(n - 1);
            if q < 1.0 && w * q / (1.0 - q) < TAIL_RTOL * total {
                break;
            }
            if below.len() > MAX_WIDTH {
                return Err(Error::domain("probability table exceeds maximum width"));
            }
        }

        let lo = mode - below.len() as u64;
        let mut weights = below;
        weights.reverse();
        weights.push(1.0);
        weights.extend(above);
        Ok(DiscreteTable {
            lo,
            mode,
            weights,
            total,
        })
    }

    pub fn mode(&self) -> u64 {
        self.mode
    }

    /// Smallest and largest support points carried by the table.
    pub fn range(&self) -> (u64, u64) {
        (self.lo, self.lo + self.weights.len() as u64 - 1)
    }

    /// `ln Σ_n w(n)` with masses measured relative to the mode.
    pub fn ln_total(&self) -> f64 {
        self.total.ln()
    }

    /// Normalized probability of `n` (zero outside the stored range).
    pub fn prob(&self, n: u64) -> f64 {
        if n < self.lo {
            return 0.0;
        }
        self.weights
            .get((n - self.lo) as usize)
            .map_or(0.0, |w| w / self.total)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut u = rng.random::<f64>() * self.total;
        for (i, &w) in self.weights.iter().enumerate() {
            if u < w {
                return self.lo + i as u64;
            }
            u -= w;
        }
        // Rounding left a sliver of mass: fall back to the mode side.
        self.mode
    }
}

fn check_ratio(r: f64, n: u64) -> Result<()> {
    if r.is_nan() || r < 0.0 || r.is_infinite() {
        Err(Error::domain(format!("invalid mass ratio {r} at {n}")))
    } else {
        Ok(())
    }
}

fn locate_mode(support_min: u64, guess: u64, ratio: &impl Fn(u64) -> f64) -> Result<u64> {
    let mut n = guess;
    while n > support_min {
        let r = ratio(n - 1);
        check_ratio(r, n - 1)?;
        if r >= 1.0 {
            break;
        }
        n -= 1;
    }
    loop {
        let r = ratio(n);
        check_ratio(r, n)?;
        if r <= 1.0 {
            return Ok(n);
        }
        n += 1;
    }
}
