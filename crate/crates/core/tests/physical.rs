//! Statistical checks of the sampled geometry and the aligned channels.

use ianet_core::analytic::displacement_pdf;
use ianet_core::params::SystemParams;
use ianet_core::quad::{integrate, QuadOptions};
use ianet_core::selfcheck::*;
use ianet_core::stats::{ks_one_sample, ks_two_sample, mean_ci, poisson_chi_square};
use statrs::distribution::{ContinuousCDF, Gamma};

#[test]
fn annulus_counts_are_poisson() {
    let p = SystemParams::reference(1.0);
    let (a, b) = (2.0, 4.0);
    let counts = annulus_counts(&p, a, b, 4000, 31);
    let mean = p.lambda_p() * std::f64::consts::PI * (b * b - a * a);
    let (_, pval) = poisson_chi_square(&counts, mean);
    assert!(pval > 0.01, "p = {pval}");
}

#[test]
fn daughters_scatter_uniformly_over_the_disc() {
    let p = SystemParams::reference(1.0);
    let radii = daughter_radii(&p, 200, 32);
    assert!(radii.len() > 10_000);
    let ks = ks_one_sample(&radii, |r| (r / p.r).clamp(0.0, 1.0).powi(2));
    assert!(ks.p_value > 0.01, "p = {}", ks.p_value);
}

#[test]
fn palm_members_follow_the_displacement_density() {
    let p = SystemParams { k: 4, ..SystemParams::reference(1.5) };
    let f = |x: f64| (-x * x).exp();
    let sums = palm_sums(&p, f, 20_000, 33);
    let (m, ci) = mean_ci(&sums);
    let opts = QuadOptions::new(1e-12, 1e-10);
    let want = (p.k - 1) as f64 * integrate(|x| f(x) * displacement_pdf(x, p.r), 0.0, 2.0 * p.r, &opts).value;
    assert!((m - want).abs() <= 3.0 * ci, "{m} +- {ci} vs {want}");
}

#[test]
fn alignment_reaches_the_residual_target() {
    for (k, n, ns) in [(3, 2, 1), (3, 4, 2)] {
        let r = alignment_residuals(k, n, ns, 0..25).unwrap();
        let worst = r.iter().copied().fold(0.0, f64::max);
        assert!(worst <= 1e-8, "({k},{n},{ns}): {worst}");
    }
}

#[test]
fn effective_gain_is_gamma_distributed() {
    for (k, n, ns) in [(3, 2, 1), (3, 4, 2)] {
        let (g, skipped) = effective_gains(k, n, ns, 20_000, 34).unwrap();
        assert!(skipped < 10);
        let dist = Gamma::new(ns as f64, 1.0).unwrap();
        let ks = ks_one_sample(&g, |x| dist.cdf(x));
        assert!(ks.p_value > 0.01, "({k},{n},{ns}): p = {}", ks.p_value);
    }
}

#[test]
fn effective_gain_does_not_depend_on_the_stream() {
    let (g, _) = effective_gains(3, 4, 2, 20_000, 35).unwrap();
    let first: Vec<f64> = g.iter().step_by(2).copied().collect();
    let second: Vec<f64> = g.iter().skip(1).step_by(2).copied().collect();
    let ks = ks_two_sample(&first, &second);
    assert!(ks.p_value > 0.01, "p = {}", ks.p_value);
}
