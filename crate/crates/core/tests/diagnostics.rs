use prgds::diagnostics::quad::{gauss_legendre5, integrate};
use prgds::diagnostics::{discrete_gof, kolmogorov_sf, ks_one_sample, ks_two_sample};
use prgds::random::{poisson, ChainRng};
use prgds::eval::poisson_log_pmf;
use rand::{Rng, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn gof_accepts_the_exact_sampler() {
    let mut passed = 0;
    for seed in 0..100 {
        let mut rng = ChainRng::seed_from_u64(seed);
        let r = discrete_gof(|| poisson(4.0, &mut rng), |n| poisson_log_pmf(n, 4.0), 2_000);
        assert!((r.mass - 1.0).abs() < 1e-12);
        if r.p_value >= 0.01 {
            passed += 1;
        }
    }
    assert!(passed >= 95, "{passed}/100");
}

#[test]
fn gof_rejects_a_shifted_sampler() {
    let mut rng = ChainRng::seed_from_u64(1);
    let r = discrete_gof(|| poisson(4.0, &mut rng) + 1, |n| poisson_log_pmf(n, 4.0), 20_000);
    assert!(r.p_value < 1e-6, "{r:?}");
}

#[test]
fn gof_handles_a_point_mass() {
    let r = discrete_gof(|| 0, |n| if n == 0 { 0.0 } else { f64::NEG_INFINITY }, 1_000);
    assert_eq!(r.bins, 1);
    assert!(r.p_value >= 0.01);
}

#[test]
fn kolmogorov_tail_matches_known_points() {
    // P(K > 1.36) ≈ 0.049, P(K > 1.63) ≈ 0.010
    assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 5e-4);
    assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
    assert_eq!(kolmogorov_sf(0.0), 1.0);
}

#[test]
fn ks_separates_matching_and_shifted_normals() {
    let mut rng = ChainRng::seed_from_u64(2);
    let n = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..5000).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    assert!(ks_one_sample(&xs, |x| n.cdf(x)).p_value > 0.001);
    assert!(ks_one_sample(&xs, |x| n.cdf(x - 0.2)).p_value < 1e-6);
    let ys: Vec<f64> = (0..5000).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    assert!(ks_two_sample(&xs, &ys).p_value > 0.001);
    let zs: Vec<f64> = ys.iter().map(|y| y + 0.3).collect();
    assert!(ks_two_sample(&xs, &zs).p_value < 1e-6);
}

#[test]
fn quadrature_integrates_smooth_functions() {
    assert!((integrate(|x| x.exp(), 0.0, 1.0, 1e-14) - (1f64.exp() - 1.0)).abs() < 1e-12);
    assert!((integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-14) - 2.0).abs() < 1e-12);
    assert!((gauss_legendre5(|x| x.powi(9), 0.0, 1.0) - 0.1).abs() < 1e-14);
}
