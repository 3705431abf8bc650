//! Randomized invariants of the closed forms.

use ianet_core::analytic::*;
use ianet_core::capacity::{max_density_ia_ns1, max_density_sm};
use ianet_core::params::SystemParams;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn config() -> impl Strategy<Value = SystemParams> {
    (0.5f64..6.0, 0.1f64..0.4, 2.5f64..5.0, 0.5f64..4.0, 2.0f64..60.0).prop_map(|(d_c, frac, alpha, log_gamma, t_t)| SystemParams {
        alpha,
        gamma_o: 10f64.powf(log_gamma),
        d_r: frac * d_c,
        t_t: t_t.round().max(6.0),
        ..SystemParams::reference(d_c)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn transforms_are_probabilities_and_decrease(p in config(), s in 1e-3f64..5.0) {
        let a = laplace_intra(s, &p, IntraMode::Training).unwrap().value;
        let b = laplace_intra(2.0 * s, &p, IntraMode::Training).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&a) && b <= a + 1e-12);
        let a = laplace_inter(s, &p).unwrap().value;
        let b = laplace_inter(2.0 * s, &p).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&a) && b <= a + 1e-12);
    }

    #[test]
    fn success_decreases_in_threshold(p in config(), theta in 0.05f64..50.0) {
        let lo = success_prob_ia(theta, &p).unwrap().value;
        let hi = success_prob_ia(1.5 * theta, &p).unwrap().value;
        prop_assert!((0.0..=1.0).contains(&lo) && hi <= lo + 1e-12);
        let lo = success_prob_sm(theta, &p, Csi::Imperfect).value;
        let hi = success_prob_sm(1.5 * theta, &p, Csi::Imperfect).value;
        prop_assert!((0.0..=1.0).contains(&lo) && hi <= lo + 1e-15);
    }

    #[test]
    fn sm_density_round_trips(p in config(), eps in 0.01f64..0.9) {
        let d = max_density_sm(eps, &p).unwrap();
        prop_assume!(!d.flagged && d.lambda_eps > 0.0);
        let ps = success_prob_sm(p.theta, &p.with_density(d.lambda_eps), Csi::Imperfect).value;
        prop_assert!((ps - (1.0 - eps)).abs() <= 1e-9);
    }

    #[test]
    fn density_is_monotone_in_outage(p in config(), eps in 0.01f64..0.8) {
        let a = max_density_sm(eps, &p).unwrap().lambda_eps;
        let b = max_density_sm(eps + 0.1, &p).unwrap().lambda_eps;
        prop_assert!(b >= a);
        let a = max_density_ia_ns1(eps, &p).unwrap().lambda_eps;
        let b = max_density_ia_ns1(eps + 0.1, &p).unwrap().lambda_eps;
        prop_assert!(b >= a);
    }
}

#[test]
fn bounds_dominate_the_exact_transforms() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..10 {
        let p = config().new_tree(&mut runner).unwrap().current();
        for s in [0.01, 0.3, 2.0] {
            let exact = laplace_inter(s, &p).unwrap().value;
            let bound = laplace_inter_bound(s, &p).unwrap();
            assert!(bound >= exact - 1e-9, "inter bound {bound} < {exact} at s={s}, {p:?}");
            let exact = laplace_intra(s, &p, IntraMode::Training).unwrap().value;
            let bound = laplace_intra_bound(s, &p).unwrap();
            assert!(bound >= exact - 1e-9, "intra bound {bound} < {exact} at s={s}, {p:?}");
        }
    }
}
