use approx::assert_relative_eq;
use ianet_core::disc::disc_average;
use ianet_core::params::{training_bounds, Scheme, SystemParams};
use ianet_core::quad::{integrate, QuadOptions};
use ianet_core::trainopt::*;

fn fig4(r: f64, t_block: f64) -> SystemParams {
    SystemParams { theta: 100.0, t_block, ..SystemParams::reference(r) }
}

#[test]
fn closed_forms_agree_with_the_series_route() {
    for r in [1.0, 5.0] {
        let p = fig4(r, 200.0);
        let c = taylor_coeffs(&p, TaylorScheme::Ia).unwrap();
        let (l1, l2) = log_series_numeric(&p, Scheme::Ia, natural_step(&p)).unwrap();
        let u = p.n as f64 / (p.gamma_o * p.t_block);
        let overhead = (p.k * p.k * p.n) as f64 / p.t_block;
        let (c1, c2) = objective_from_log_series(l1, l2, u, overhead);
        assert_relative_eq!(c.c1_series, c1, max_relative = 1e-5);
        assert_relative_eq!(c.c2_series, c2, max_relative = 1e-4);
        // literal C2 is exactly the series value; literal C1 differs only in a
        // third-order-small A-term
        assert_relative_eq!(c.c2, c.c2_series, max_relative = 1e-12);
        assert_relative_eq!(c.c1, c.c1_series, max_relative = 1e-5);

        let (l1, l2) = log_series_numeric(&p, Scheme::Sm, natural_step(&p)).unwrap();
        let (b1, b2) = objective_from_log_series(l1, l2, u, 0.0);
        assert_relative_eq!(c.b1_series, b1, max_relative = 1e-6);
        assert_relative_eq!(c.b2_series, b2, max_relative = 1e-4);
    }
}

#[test]
fn literal_sm_coefficients_use_training_snr_without_antenna_division() {
    let p = fig4(1.0, 400.0);
    let c = taylor_coeffs(&p, TaylorScheme::Sm).unwrap();
    let n = p.n as f64;
    assert_relative_eq!(c.b2 * n * n, c.b2_series, max_relative = 1e-12);
    assert_relative_eq!((c.b1 + c.b2) * n, c.b1_series + c.b2_series, max_relative = 1e-12);
}

#[test]
fn b1_contains_minus_b2() {
    let p = fig4(1.0, 700.0);
    let c = taylor_coeffs(&p, TaylorScheme::Sm).unwrap();
    let (a, f, g, al, th) = (p.d_r.powf(p.alpha), p.f_d(), p.gamma_o, p.alpha, p.theta);
    let x = ianet_core::params::interference_constant(p.n, al) * th.powf(2.0 / al) * p.d_r * p.d_r * p.lambda_p();
    let n = p.n as f64;
    let rest = a * f / (g * g * al) * (n * al * th * a + n * g * al * th + 2.0 * x * g);
    assert_relative_eq!(c.b1 + c.b2, -rest, max_relative = 1e-12);
}

#[test]
fn high_snr_coefficients_match_their_expansion() {
    let p = fig4(1.0, 1000.0);
    let c = taylor_coeffs(&p, TaylorScheme::IaHighSnr).unwrap();
    let (k, a, eta0) = (p.k as f64, p.d_r.powf(p.alpha), p.theta * p.d_r.powf(p.alpha));
    let l1 = -k * eta0;
    let l2 = eta0 * a + k * eta0 * eta0 / 2.0 + (k - 1.0) * eta0 * c.a1;
    let u = p.n as f64 / (p.gamma_o * p.t_block);
    let (d1, d2) = objective_from_log_series(l1, l2, u, (p.k * p.k * p.n) as f64 / p.t_block);
    assert_relative_eq!(c.d1, d1, max_relative = 1e-12);
    assert_relative_eq!(c.d2, d2, max_relative = 1e-12);
}

#[test]
fn a1_collapses_to_link_distance() {
    let p = SystemParams { r: 1e-4, d_r: 0.7, ..SystemParams::reference(1.0) };
    assert_relative_eq!(integral_a1(&p).unwrap(), 0.7f64.powi(4), max_relative = 1e-3);
}

#[test]
fn a1_quartic_closed_form() {
    // v = x - y: E|v|^2 = R^2, E|v|^4 = 5 R^4 / 3
    // E|v + o|^4 = |o|^4 + 4 |o|^2 E|v|^2 + E|v|^4
    let p = SystemParams::reference(1.0);
    let (r, d) = (p.r, p.d_r);
    let want = d.powi(4) + 4.0 * d * d * r * r + 5.0 * r.powi(4) / 3.0;
    assert_relative_eq!(integral_a1(&p).unwrap(), want, max_relative = 1e-9);
}

#[test]
fn a5_at_two_transmitters_drops_the_bracket() {
    let p = SystemParams { k: 2, n: 2, ..fig4(1.0, 200.0) };
    let (_, _, a5) = integrals_a345(&p).unwrap();
    let shift = p.theta * p.d_r.powf(p.alpha);
    let opts = QuadOptions::new(1e-14, 1e-11);
    let m2 = |d: f64| disc_average(|r: f64| r.powi(4) / (r.powi(4) + shift).powi(2), d, p.r, &opts).value;
    // independent route: plain radial integral in 1/d to map [2R, inf) to [0, 1/2R]
    let near = integrate(|d| std::f64::consts::TAU * d * m2(d).powi(2), 0.0, 2.0 * p.r, &opts).value;
    let far = integrate(
        |v: f64| {
            if v == 0.0 {
                return 0.0;
            }
            let d = 1.0 / v;
            std::f64::consts::TAU * d * m2(d).powi(2) / (v * v)
        },
        0.0,
        0.5 / p.r,
        &opts,
    )
    .value;
    assert_relative_eq!(a5, near + far, max_relative = 1e-7);
}

#[test]
fn a_integrals_are_positive() {
    let c = taylor_coeffs(&fig4(1.0, 200.0), TaylorScheme::Ia).unwrap();
    assert!(c.a1 > 0.0 && c.a3 >= 0.0 && c.a4 >= 0.0 && c.a5 >= 0.0);
}

#[test]
fn goodput_vanishes_without_data_phase() {
    let p = fig4(1.0, 200.0);
    let hi = 1.0 - p.f_d() * (p.k * p.k * p.n) as f64;
    assert_eq!(goodput_ia(hi, &p).unwrap(), 0.0);
    assert_eq!(goodput_sm(1.0, &p).unwrap(), 0.0);
    assert!(goodput_ia(hi + 0.01, &p).is_err());
}

#[test]
fn goodput_scales_with_stream_count() {
    let p = fig4(1.0, 400.0);
    let g1 = goodput_ia(0.05, &p).unwrap();
    let ps = ianet_core::analytic::success_prob_ia_mode(p.theta, &p, ianet_core::analytic::IntraMode::Doppler { delta: 0.05 }).unwrap().value;
    let data = 1.0 - 0.05 - 18.0 / 400.0;
    assert_relative_eq!(g1, data * 3.0 * ps * (101f64).log2(), max_relative = 1e-12);
}

#[test]
fn numeric_optimum_dominates_a_fine_grid_and_goodput_is_unimodal() {
    let p = fig4(5.0, 200.0);
    for scheme in [Scheme::Ia, Scheme::Sm] {
        let sol = optimize_training_numeric(&p, scheme).unwrap();
        let best = goodput(sol.delta_opt, &p, scheme).unwrap();
        let (lo, hi) = delta_bounds(&p, scheme);
        let grid: Vec<f64> = (0..1000).map(|i| goodput(lo + (hi - lo) * i as f64 / 999.0, &p, scheme).unwrap()).collect();
        for (i, g) in grid.iter().enumerate() {
            assert!(best >= g - 1e-9 * g.abs(), "{scheme}: grid point {i} beats the optimum ({g} > {best})");
        }
        let signs: Vec<bool> = grid.windows(2).map(|w| w[1] > w[0]).collect();
        let changes = signs.windows(2).filter(|s| s[0] != s[1]).count();
        assert!(changes <= 1, "{scheme}: {changes} slope sign changes");
    }
}

#[test]
fn numeric_optimum_matches_integer_sweep() {
    for r in [1.0, 5.0] {
        let p = fig4(r, 200.0);
        for scheme in [Scheme::Ia, Scheme::Sm] {
            let sol = optimize_training_numeric(&p, scheme).unwrap();
            let (lo, hi) = training_bounds(&p, scheme);
            let mut best = (lo, f64::MIN);
            let mut t = lo;
            while t <= hi {
                let g = goodput(t / p.t_block, &p, scheme).unwrap();
                if g > best.1 {
                    best = (t, g);
                }
                t += 1.0;
            }
            assert!((sol.t_t_opt - best.0).abs() <= 1.0, "R={r} {scheme}: numeric {} vs sweep {}", sol.t_t_opt, best.0);
        }
    }
}

#[test]
fn vanishing_doppler_sends_the_fraction_to_zero() {
    let p = fig4(1.0, 1e7);
    let sol = optimize_training_numeric(&p, Scheme::Ia).unwrap();
    assert!(sol.delta_opt < 1e-4);
    assert!(sol.t_t_opt >= 6.0);
}

#[test]
fn ia_trains_at_least_as_long_as_sm() {
    for r in [1.0, 5.0] {
        let p = fig4(r, 200.0);
        let ia = optimize_training_numeric(&p, Scheme::Ia).unwrap();
        let sm = optimize_training_numeric(&p, Scheme::Sm).unwrap();
        assert!(sm.t_t_opt <= ia.t_t_opt, "R={r}: SM {} > IA {}", sm.t_t_opt, ia.t_t_opt);
    }
}

#[test]
fn taylor_solution_is_near_optimal_for_small_clusters() {
    let p = fig4(1.0, 200.0);
    let num = optimize_training_numeric(&p, Scheme::Ia).unwrap();
    for scheme in [TaylorScheme::Ia, TaylorScheme::IaHighSnr] {
        let t = optimize_training_taylor(&p, scheme).unwrap();
        assert!(t.goodput >= 0.98 * num.goodput);
    }
    let num = optimize_training_numeric(&p, Scheme::Sm).unwrap();
    let t = optimize_training_taylor(&p, TaylorScheme::Sm).unwrap();
    assert!(t.goodput >= 0.98 * num.goodput);
}

#[test]
fn large_clusters_fall_back_to_the_boundary() {
    // No admissible positive maximizer exists for these coefficients.
    let p = fig4(5.0, 200.0);
    let t = optimize_training_taylor(&p, TaylorScheme::Ia).unwrap();
    assert!(t.fallback && t.clamped);
}

#[test]
fn cubic_roots_solve_the_stationarity_condition() {
    for (c1, c2) in [(-1e-3, 1e-6), (-4e-6, 7e-11), (-2.0, -0.5), (1.0, -3.0)] {
        for d in taylor_maximizers(c1, c2) {
            let resid = d.powi(3) + c1 * d + 2.0 * c2;
            assert!(resid.abs() <= 1e-12 * (1.0 + c1.abs() + c2.abs()), "residual {resid}");
            // local maximum: second differences are negative
            let f = |x: f64| -x + c1 / x + c2 / (x * x);
            let h = 1e-4 * d;
            assert!(f(d + h) + f(d - h) - 2.0 * f(d) < 0.0);
        }
    }
    // c1 = c2 = 0 leaves nothing to trade off
    assert!(taylor_maximizers(0.0, 0.0).is_empty());
}

#[test]
fn clamping_follows_min_of_max() {
    let p = fig4(1.0, 200.0);
    assert_eq!(clamp_training(0.0, &p, Scheme::Ia), (6.0, true));
    assert_eq!(clamp_training(1.0, &p, Scheme::Ia), (182.0, true));
    assert_eq!(clamp_training(0.0501, &p, Scheme::Ia), (10.0, false));
    assert_eq!(clamp_training(0.0, &p, Scheme::Sm), (2.0, true));
    assert_eq!(clamp_training(1.0, &p, Scheme::Sm), (200.0, true));
    // T too short for lo <= hi: the upper bound wins
    let short = SystemParams { t_block: 20.0, ..p };
    assert_eq!(clamp_training(0.5, &short, Scheme::Ia).0, 2.0);
}
