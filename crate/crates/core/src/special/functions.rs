//! Log-space series for the modified Bessel function and Kummer's 1F1.
//!
//! Both series have positive terms for the arguments used here, so they are
//! summed in ascending order with a running log-sum-exp and stopped once the
//! geometric bound on the remaining tail drops below `SERIES_RTOL`.

pub use statrs::function::gamma::ln_gamma;

const SERIES_RTOL: f64 = 1e-14;
const MAX_TERMS: usize = 50_000_000;

/// Running log-sum-exp of a stream of log terms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub(crate) fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term <= self.max {
            self.scaled += (ln_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Sums `exp(ln_t0), exp(ln_t1), ...` where `ln_ratio(n) = ln t_{n+1} - ln t_n`.
///
/// The ratio must eventually decrease below one and stay decreasing; the
/// caller passes `settle` as an index beyond which that holds.
fn ascending_series(ln_t0: f64, settle: f64, ln_ratio: impl Fn(f64) -> f64) -> f64 {
    let mut acc = LogSum::new();
    let mut ln_t = ln_t0;
    acc.add(ln_t);
    let ln_tol = SERIES_RTOL.ln();
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let lr = ln_ratio(nf);
        if lr == f64::NEG_INFINITY {
            break;
        }
        ln_t += lr;
        acc.add(ln_t);
        if nf >= settle && lr < 0.0 {
            // Remaining tail <= t * r / (1 - r) with r the next (smaller) ratio.
            let r = lr.exp();
            let ln_tail = ln_t + lr - (-r).ln_1p();
            if ln_tail - acc.value() < ln_tol {
                break;
            }
        }
    }
    acc.value()
}

/// `ln Σ_{n≥0} x^n / (n! Γ(n + v + 1))` for `x ≥ 0`, `v > -1`.
///
/// This is `I_v(2√x) / x^{v/2}` and also the series inside the randomized
/// gamma density.
pub fn ln_bessel_series(v: f64, x: f64) -> f64 {
    debug_assert!(v > -1.0 && x >= 0.0);
    let ln_t0 = -ln_gamma(v + 1.0);
    if x == 0.0 {
        return ln_t0;
    }
    let ln_x = x.ln();
    ascending_series(ln_t0, 0.0, |n| ln_x - ((n + 1.0) * (n + v + 1.0)).ln())
}

/// `ln I_v(a)`, the modified Bessel function of the first kind, for `a > 0`.
pub fn ln_bessel_i(v: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0);
    let half = 0.5 * a;
    v * half.ln() + ln_bessel_series(v, half * half)
}

/// `ln 1F1(a; b; z)` for `a, b > 0` and `z ≥ 0`.
pub fn ln_hyp1f1(a: f64, b: f64, z: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && z >= 0.0);
    if z == 0.0 {
        return 0.0;
    }
    let ln_z = z.ln();
    ascending_series(0.0, a + b, |n| {
        ln_z + (a + n).ln() - (b + n).ln() - (n + 1.0).ln()
    })
}
