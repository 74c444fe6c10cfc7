//! Numerical integration used by the test oracles.

/// `∫_a^b f` by double-exponential quadrature to absolute error `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::integrate(f, a, b, tol).integral
}

/// `∫_0^b f` after substituting `x = b u⁴`, which smooths a singularity
/// `x^{-p}` at zero for `p ≤ 3/4`.
pub fn integrate_from_zero(f: impl Fn(f64) -> f64, b: f64, tol: f64) -> f64 {
    integrate(|u| 4.0 * b * u.powi(3) * f(b * u.powi(4)), 0.0, 1.0, tol)
}

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683,
    0.538_469_310_105_683,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
    0.236_926_885_056_189,
];

/// Five-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5_NODES
        .iter()
        .zip(&GL5_WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// CDF of a density on `(0, ∞)` at each of the sorted points `xs`, plus
/// `atom` at zero.
///
/// The first interval uses [`integrate_from_zero`]; later gaps use the
/// fixed rule.
pub fn cdf_at_sorted(xs: &[f64], atom: f64, pdf: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = atom;
    let mut prev = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if x > prev {
            acc += if i == 0 || prev == 0.0 {
                integrate_from_zero(&pdf, x, 1e-12)
            } else {
                gauss_legendre5(&pdf, prev, x)
            };
            prev = x;
        }
        out.push(acc.min(1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_known_functions() {
        assert!((integrate(|x| x.exp(), 0.0, 1.0, 1e-14) - (1f64.exp() - 1.0)).abs() < 1e-12);
        assert!((integrate_from_zero(|x| x.powf(-0.5), 1.0, 1e-12) - 2.0).abs() < 1e-12);
        assert!((integrate_from_zero(|x| x.powf(-0.75), 1.0, 1e-12) - 4.0).abs() < 1e-10);
        assert!((gauss_legendre5(|x| x.powi(9), 0.0, 1.0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn exponential_cdf() {
        let xs: Vec<f64> = (1..200).map(|i| i as f64 * 0.05).collect();
        let cdf = cdf_at_sorted(&xs, 0.0, |x| (-x).exp());
        for (x, c) in xs.iter().zip(cdf) {
            assert!((c - (1.0 - (-x).exp())).abs() < 1e-10);
        }
    }
}
