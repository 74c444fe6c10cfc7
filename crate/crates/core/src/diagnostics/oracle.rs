use statrs::distribution::{Continuous, Discrete, Gamma, Poisson};

use super::quad::integrate;

/// `P(h | m)` for `m ~ Pois(θ c3)`, `θ ~ Gam(ε + h, c2)`, `h ~ Pois(c1)`,
/// with `θ` integrated out numerically.
///
/// Returns the normalized PMF on `0..len`; the remaining tail is below
/// `1e-16` of the largest term.
pub fn pgp_h_posterior_oracle(m: u64, epsilon: f64, c1: f64, c2: f64, c3: f64) -> Vec<f64> {
    assert!(c1 > 0.0 && c2 > 0.0 && c3 > 0.0 && epsilon >= 0.0);
    let prior = Poisson::new(c1).expect("positive mean");
    let mut log_w = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    for h in 0u64.. {
        let shape = epsilon + h as f64;
        let ln_int = if shape == 0.0 {
            if m == 0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            ln_theta_integral(m, shape, c2, c3)
        };
        let lw = prior.ln_pmf(h) + ln_int;
        let falling = log_w.last().is_some_and(|&p: &f64| lw <= p);
        log_w.push(lw);
        peak = peak.max(lw);
        if h as f64 > c1 && falling && lw < peak - 40.0 {
            break;
        }
        assert!(h < 10_000_000, "oracle support did not terminate");
    }
    let total: f64 = log_w.iter().map(|lw| (lw - peak).exp()).sum();
    log_w.iter().map(|lw| (lw - peak).exp() / total).collect()
}

/// `ln ∫ Gam(θ; shape, c2) Pois(m; θ c3) dθ`.
fn ln_theta_integral(m: u64, shape: f64, c2: f64, c3: f64) -> f64 {
    let prior = Gamma::new(shape, c2).expect("valid gamma");
    let ln_f = |theta: f64| {
        if theta <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let lik = Poisson::new(theta * c3).expect("positive mean").ln_pmf(m);
        prior.ln_pdf(theta) + lik
    };
    let a = shape + m as f64;
    let b = c2 + c3;
    let mode = ((a - 1.0) / b).max(1e-300);
    let sd = a.sqrt() / b;
    let offset = ln_f(mode).max(ln_f(a / b));
    let hi = a / b + 60.0 * sd + 60.0 / b;
    let scaled = integrate(|t| (ln_f(t) - offset).exp(), 0.0, hi, 1e-13 * sd.max(1e-300));
    offset + scaled.ln()
}
