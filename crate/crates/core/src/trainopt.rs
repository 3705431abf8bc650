//! Goodput-optimal training period.
//!
//! Training fractions are written `delta = T_t / T` and `f_d = 1 / T`. The
//! Taylor route replaces goodput by `-delta + C1 / delta + C2 / delta^2`
//! (second order in `f_d`) and maximizes that in closed form.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic::{success_prob_ia_mode, success_prob_sm, Csi, IntraMode};
use crate::disc::disc_average;
use crate::error::{Error, Result};
use crate::params::{derive, interference_constant, training_bounds, Scheme, SystemParams};
use crate::quad::{integrate, integrate_pieces, QuadOptions, QuadValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMethod {
    Numeric,
    Taylor,
    TaylorHighSnr,
}

impl std::fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainMethod::Numeric => "numeric",
            TrainMethod::Taylor => "taylor",
            TrainMethod::TaylorHighSnr => "taylor_high_snr",
        })
    }
}

/// Which closed-form coefficient pair drives the Taylor optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorScheme {
    Ia,
    IaHighSnr,
    Sm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSolution {
    /// Training period in channel uses (integer valued).
    pub t_t_opt: f64,
    /// Continuous maximizer before rounding and clamping.
    pub delta_opt: f64,
    /// Goodput at `t_t_opt`.
    pub goodput: f64,
    pub method: TrainMethod,
    /// `t_t_opt` sits on a boundary of the admissible interval.
    pub clamped: bool,
    /// No admissible maximizing root existed; the better boundary was used.
    pub fallback: bool,
}

/// Appendix-style integrals and objective coefficients.
///
/// `c*`, `d*`, `b*` are the literal closed forms. The `*_series` fields are
/// the same coefficients rebuilt from the log-success expansion
/// `ln P = ln P0 + l1 t + l2 t^2` in `t = N f_d / (gamma_o delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoeffs {
    pub a1: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1_series: f64,
    pub c2_series: f64,
    pub b1_series: f64,
    pub b2_series: f64,
}

impl TaylorCoeffs {
    pub fn pair(&self, scheme: TaylorScheme) -> (f64, f64) {
        match scheme {
            TaylorScheme::Ia => (self.c1, self.c2),
            TaylorScheme::IaHighSnr => (self.d1, self.d2),
            TaylorScheme::Sm => (self.b1, self.b2),
        }
    }
}

/// Admissible training fractions for a scheme.
pub fn delta_bounds(p: &SystemParams, scheme: Scheme) -> (f64, f64) {
    let (lo, hi) = training_bounds(p, scheme);
    (lo / p.t_block, hi / p.t_block)
}

fn check_delta(delta: f64, p: &SystemParams, scheme: Scheme) -> Result<()> {
    let (lo, hi) = delta_bounds(p, scheme);
    let slack = 1e-12;
    if delta >= lo - slack && delta <= hi + slack {
        Ok(())
    } else {
        Err(Error::BadTraining { tt: delta * p.t_block, lo: lo * p.t_block, hi: hi * p.t_block })
    }
}

/// `(1 - delta - f_d K^2 N) K Ns P_s(theta; delta) log2(1 + theta)`.
pub fn goodput_ia(delta: f64, p: &SystemParams) -> Result<f64> {
    check_delta(delta, p, Scheme::Ia)?;
    let f = p.f_d();
    let data = (1.0 - delta - f * (p.k * p.k * p.n) as f64).max(0.0);
    if data == 0.0 {
        return Ok(0.0);
    }
    let ps = success_prob_ia_mode(p.theta, p, IntraMode::Doppler { delta })?.value;
    Ok(data * (p.k * p.ns) as f64 * ps * (1.0 + p.theta).log2())
}

/// `(1 - delta) N P_s^SM(theta; delta T) log2(1 + theta)`.
pub fn goodput_sm(delta: f64, p: &SystemParams) -> Result<f64> {
    check_delta(delta, p, Scheme::Sm)?;
    let ps = success_prob_sm(p.theta, &p.with_training(delta * p.t_block), Csi::Imperfect).value;
    Ok((1.0 - delta).max(0.0) * p.n as f64 * ps * (1.0 + p.theta).log2())
}

pub fn goodput(delta: f64, p: &SystemParams, scheme: Scheme) -> Result<f64> {
    match scheme {
        Scheme::Ia => goodput_ia(delta, p),
        Scheme::Sm => goodput_sm(delta, p),
    }
}

/// `min(max(lo, [delta T]), hi)`.
pub fn clamp_training(delta: f64, p: &SystemParams, scheme: Scheme) -> (f64, bool) {
    let (lo, hi) = training_bounds(p, scheme);
    let t = (delta * p.t_block).round().max(lo).min(hi);
    (t, t <= lo || t >= hi)
}

const PRESCAN: usize = 64;
const DELTA_TOL: f64 = 1e-5;

/// Maximizes `f` on `[lo, hi]`: grid pre-scan, then golden section inside the
/// best grid cell pair.
fn maximize(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let step = (hi - lo) / (PRESCAN - 1) as f64;
    let mut best = (lo, f(lo)?);
    let mut best_i = 0;
    for i in 1..PRESCAN {
        let x = if i == PRESCAN - 1 { hi } else { lo + i as f64 * step };
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let mut a = lo + best_i.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best_i + 1) as f64 * step).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > DELTA_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Maximizes goodput over the continuous training fraction, then rounds and
/// clamps the training period.
pub fn optimize_training_numeric(p: &SystemParams, scheme: Scheme) -> Result<TrainingSolution> {
    derive(p)?;
    let (lo, hi) = delta_bounds(p, scheme);
    if !(lo <= hi) {
        return Err(Error::BadTraining { tt: lo * p.t_block, lo: lo * p.t_block, hi: hi * p.t_block });
    }
    let (delta, _) = maximize(|d| goodput(d, p, scheme), lo, hi)?;
    let (t_t, clamped) = clamp_training(delta, p, scheme);
    Ok(TrainingSolution {
        t_t_opt: t_t,
        delta_opt: delta,
        goodput: goodput(t_t / p.t_block, p, scheme)?,
        method: TrainMethod::Numeric,
        clamped,
        fallback: false,
    })
}

/// Real roots of `x^3 + p x + q = 0`.
pub fn depressed_cubic_roots(p: f64, q: f64) -> Vec<f64> {
    if p == 0.0 {
        return vec![(-q).cbrt()];
    }
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    if disc > 0.0 {
        // three real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q / (p * m)).clamp(-1.0, 1.0)).acos() / 3.0;
        (0..3).map(|k| m * (arg - TAU * k as f64 / 3.0).cos()).collect()
    } else {
        let h = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        vec![(-q / 2.0 + h).cbrt() + (-q / 2.0 - h).cbrt()]
    }
}

/// Positive local maximizers of `-delta + c1 / delta + c2 / delta^2`.
pub fn taylor_maximizers(c1: f64, c2: f64) -> Vec<f64> {
    // derivative * (-delta^3): delta^3 + c1 delta + 2 c2
    depressed_cubic_roots(c1, 2.0 * c2)
        .into_iter()
        .filter(|&d| d > 0.0 && 2.0 * c1 / d.powi(3) + 6.0 * c2 / d.powi(4) < 0.0)
        .collect()
}

fn taylor_objective(d: f64, c1: f64, c2: f64) -> f64 {
    -d + c1 / d + c2 / (d * d)
}

/// Training period from the closed-form coefficients.
pub fn optimize_training_taylor(p: &SystemParams, scheme: TaylorScheme) -> Result<TrainingSolution> {
    let coeffs = taylor_coeffs(p, scheme)?;
    optimize_training_with(p, scheme, &coeffs)
}

pub fn optimize_training_with(p: &SystemParams, scheme: TaylorScheme, coeffs: &TaylorCoeffs) -> Result<TrainingSolution> {
    let (c1, c2) = coeffs.pair(scheme);
    let sch = match scheme {
        TaylorScheme::Sm => Scheme::Sm,
        _ => Scheme::Ia,
    };
    let (lo, hi) = delta_bounds(p, sch);
    let roots = taylor_maximizers(c1, c2);
    let (delta, fallback) = match roots.iter().copied().max_by(|a, b| taylor_objective(*a, c1, c2).total_cmp(&taylor_objective(*b, c1, c2))) {
        Some(d) => (d, false),
        None => {
            log::warn!("{}", Error::NoAdmissibleRoot { c1, c2 });
            let d = if taylor_objective(lo, c1, c2) >= taylor_objective(hi, c1, c2) { lo } else { hi };
            (d, true)
        }
    };
    let (t_t, clamped) = clamp_training(delta, p, sch);
    Ok(TrainingSolution {
        t_t_opt: t_t,
        delta_opt: delta,
        goodput: goodput(t_t / p.t_block, p, sch)?,
        method: if scheme == TaylorScheme::IaHighSnr { TrainMethod::TaylorHighSnr } else { TrainMethod::Taylor },
        clamped,
        fallback,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct V3([f64; 3]);

impl Add for V3 {
    type Output = V3;
    fn add(self, o: V3) -> V3 {
        V3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for V3 {
    type Output = V3;
    fn sub(self, o: V3) -> V3 {
        V3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Mul<f64> for V3 {
    type Output = V3;
    fn mul(self, a: f64) -> V3 {
        V3([self.0[0] * a, self.0[1] * a, self.0[2] * a])
    }
}

impl QuadValue for V3 {
    fn norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

fn inner_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 200 }
}

fn outer_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: 400 }
}

/// Mean of `|x - y - o|^alpha` over independent uniform `x, y` in the
/// cluster disc, `|o| = D_r`.
pub fn integral_a1(p: &SystemParams) -> Result<f64> {
    let (alpha, radius) = (p.alpha, p.r);
    let r = disc_average(
        |rho: f64| disc_average(|u: f64| u.powf(alpha), rho, radius, &inner_opts()).value,
        p.d_r,
        radius,
        &outer_opts(),
    );
    check_quad("A1", r.error, r.value)?;
    Ok(r.value)
}

fn check_quad(context: &'static str, error: f64, value: f64) -> Result<()> {
    let target = 1e-8 * value.abs().max(1e-300);
    if error <= target {
        Ok(())
    } else {
        Err(Error::QuadratureFailure { context, estimate: error, target })
    }
}

/// `(A3, A4, A5)`, with the shared kernel `A2 = |x - y|^alpha + theta D_r^alpha`.
pub fn integrals_a345(p: &SystemParams) -> Result<(f64, f64, f64)> {
    let (alpha, radius) = (p.alpha, p.r);
    let shift = p.theta * p.d_r.powf(alpha);
    let km1 = (p.k - 1) as i32;
    let integrand = |d: f64| {
        let m = disc_average(
            |r: f64| {
                let b = r.powf(alpha);
                let w = 1.0 / (b + shift);
                V3([b * w, b * w * w, b * w * w * w])
            },
            d,
            radius,
            &inner_opts(),
        )
        .value
        .0;
        let (m1, m2, m3) = (m[0], m[1], m[2]);
        let rest = if km1 >= 1 { m1.powi(km1 - 1) } else { 0.0 };
        V3([m3 * m1.powi(km1), m2 * m1.powi(km1), km1 as f64 * m2 * m2 * rest]) * (TAU * d)
    };
    let knee = (2.0 * radius).max(radius + shift.powf(1.0 / alpha));
    let body = integrate_pieces(integrand, &[0.0, radius, 2.0 * radius, knee], &outer_opts());
    // beyond `far` every component is below the A4 tail 2 pi (d - R)^(2 - alpha) / (alpha - 2)
    let tail_bound = |d: f64| TAU * (d - radius).powf(2.0 - alpha) / (alpha - 2.0);
    let scale = body.value.norm().max(1e-300);
    let mut far = 2.0 * knee;
    while tail_bound(far) > 1e-12 * scale && far < 1e30 {
        far *= 2.0;
    }
    let tail = integrate(
        |v: f64| {
            let d = knee * v.exp();
            integrand(d) * d
        },
        0.0,
        (far / knee).ln(),
        &outer_opts(),
    );
    let total = body.value + tail.value;
    check_quad("A3-A5", body.error + tail.error + tail_bound(far), total.0[1])?;
    Ok((total.0[0], total.0[1], total.0[2]))
}

/// Coefficients of `-delta + C1 / delta + C2 / delta^2` from the expansion
/// `ln P = ln P0 + l1 t + l2 t^2`, `t = u / delta`, with data fraction
/// `1 - delta - overhead`.
pub fn objective_from_log_series(l1: f64, l2: f64, u: f64, overhead: f64) -> (f64, f64) {
    let c2 = u * u * (l2 + 0.5 * l1 * l1);
    (u * l1 * (1.0 - overhead) - c2, c2)
}

/// Evaluates every integral and coefficient; the IA coefficients need
/// `Ns = 1`.
pub fn taylor_coeffs(p: &SystemParams, scheme: TaylorScheme) -> Result<TaylorCoeffs> {
    derive(p)?;
    let (k, n) = (p.k as f64, p.n as f64);
    let (theta, gamma, lam, alpha, f) = (p.theta, p.gamma_o, p.lambda_p(), p.alpha, p.f_d());
    let a = p.d_r.powf(alpha);

    // SM
    let j = interference_constant(p.n, alpha);
    let x = j * theta.powf(2.0 / alpha) * p.d_r * p.d_r * lam;
    let b2 = a * a * f * f / (2.0 * gamma.powi(4) * alpha * alpha)
        * ((alpha * n * theta * (gamma + a) + 2.0 * gamma * x).powi(2) - 2.0 * gamma * gamma * alpha * x * (2.0 / alpha - 1.0));
    let b1 = -b2 - a * f / (gamma * gamma * alpha) * (n * alpha * theta * a + n * gamma * alpha * theta + 2.0 * x * gamma);
    let sm_l1 = -x * (2.0 / alpha) * a - theta * a * n * (a / gamma + 1.0);
    let sm_l2 = -x * (2.0 / alpha) * (2.0 / alpha - 1.0) * a * a / 2.0;
    let (b1_series, b2_series) = objective_from_log_series(sm_l1, sm_l2, n * f / gamma, 0.0);

    if scheme == TaylorScheme::Sm && p.ns != 1 {
        return Ok(TaylorCoeffs {
            a1: f64::NAN,
            a3: f64::NAN,
            a4: f64::NAN,
            a5: f64::NAN,
            c1: f64::NAN,
            c2: f64::NAN,
            d1: f64::NAN,
            d2: f64::NAN,
            b1,
            b2,
            c1_series: f64::NAN,
            c2_series: f64::NAN,
            b1_series,
            b2_series,
        });
    }
    if p.ns != 1 {
        return Err(Error::DomainError("closed-form IA training coefficients need Ns = 1"));
    }

    let a1 = integral_a1(p)?;
    let (a3, a4, a5) = integrals_a345(p)?;

    let g2 = gamma * gamma;
    let c1 = theta * a * f * n / (2.0 * gamma.powi(4))
        * (-2.0 * theta * a * a * f * k * n * gamma * (a4 * k * lam * gamma + 1.0)
            + 2.0 * g2 * (-a1 * f * (k - 1.0) * n + k * gamma * (f * k * k * n - 1.0))
            - a * g2 * (2.0 + 2.0 * a4 * k * lam * gamma + f * n * (2.0 + k * (k + 1.0) * (theta - 2.0) - 2.0 * a4 * k.powi(3) * lam * gamma))
            - theta * a.powi(3) * f * n * (1.0 + k * lam * gamma * (2.0 * a4 + (a5 + a4 * (2.0 + a4 * k * lam)) * gamma)));
    let c2 = n * n * theta * a * f * f / (2.0 * gamma.powi(4))
        * (2.0 * g2 * a + theta * a.powi(3) - 2.0 * a1 * g2 - 2.0 * k * g2 * a + 2.0 * a1 * k * g2 + k * k * g2 * theta * a + 2.0 * k * gamma * theta * a * a
            + k * g2 * theta * a
            + k * lam * theta * a.powi(3) * (a4 * a4 * k * g2 * lam + 2.0 * a4 * k * g2 / a + 2.0 * a4 * gamma + 2.0 * a3 * g2 + a5 * g2));

    let gn = gamma / n;
    let d_inner = a * (theta + 1.0) + theta * a / 2.0 * (k - 1.0) * (k + 2.0) + (k - 1.0) * a1;
    let d1 = f * theta * a / gn * (-k + f / gn * (k.powi(3) * n * gamma / n - d_inner));
    let d2 = f * f * theta * a / (gn * gn) * d_inner;

    let eta0 = theta * a;
    let l1 = -eta0 * (a / gamma + k + lam * k * a4 * a);
    let l2 = k * eta0 * eta0 / 2.0 + (k - 1.0) * eta0 * (a1 - a) + lam * k * (2.0 * a3 + a5) * eta0 * eta0 * a * a / 2.0;
    let (c1_series, c2_series) = objective_from_log_series(l1, l2, n * f / gamma, f * k * k * n);

    Ok(TaylorCoeffs { a1, a3, a4, a5, c1, c2, d1, d2, b1, b2, c1_series, c2_series, b1_series, b2_series })
}

/// `ln P_s` as a function of `t = N / (gamma_o T_t)`, the expansion variable
/// of the Taylor route (`t = 0` is perfect training).
pub fn log_success_in_t(t: f64, p: &SystemParams, scheme: Scheme) -> Result<f64> {
    let t_t = if t == 0.0 { f64::INFINITY } else { p.n as f64 / (p.gamma_o * t) };
    let q = p.with_training(t_t);
    let v = match scheme {
        Scheme::Ia => success_prob_ia_mode(p.theta, &q, IntraMode::Training)?.value,
        Scheme::Sm => success_prob_sm(p.theta, &q, Csi::Imperfect).value,
    };
    Ok(v.ln())
}

/// `(l1, l2)` of `ln P_s(t)` by a degree-4 fit through five equispaced
/// samples; an independent check on the closed forms.
pub fn log_series_numeric(p: &SystemParams, scheme: Scheme, h: f64) -> Result<(f64, f64)> {
    let m = 5;
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let t = i as f64 * h;
        for j in 0..m {
            a[(i, j)] = (i as f64).powi(j as i32);
        }
        b[i] = log_success_in_t(t, p, scheme)?;
    }
    let c = a.lu().solve(&b).ok_or(Error::DomainError("singular fit"))?;
    Ok((c[1] / h, c[2] / (h * h)))
}

/// Natural step for [`log_series_numeric`]: small against the largest
/// distance power in the integrands.
pub fn natural_step(p: &SystemParams) -> f64 {
    let reach = (2.0 * p.r + p.d_r).powf(p.alpha) + p.theta * p.d_r.powf(p.alpha);
    1e-2 / reach.max(1.0)
}
