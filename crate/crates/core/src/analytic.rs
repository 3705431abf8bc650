//! Closed-form success probabilities and the Laplace transforms behind them.
//!
//! Both transforms are evaluated by nested radial quadrature (see
//! [`crate::disc`]). Derivatives with respect to the Laplace argument are
//! obtained by pushing [`Jet`]s through the integrands.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::hash::{Hash, Hasher};
use std::sync::LazyLock;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::disc::disc_average;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::params::{derive, SystemParams};
use crate::quad::{integrate, integrate_pieces, QuadOptions, Tracked};

/// Absolute error budget for transform values.
pub const VALUE_TOL: f64 = 1e-6;
/// Absolute error budget for jet coefficients.
pub const JET_TOL: f64 = 1e-5;

/// How the intra-cluster transform receives its estimation-error scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntraMode {
    /// `T_t gamma_o / N` from the parameter set.
    Training,
    /// `delta gamma_o / (N f_d)` for a training fraction `delta`.
    Doppler { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEval {
    pub s: f64,
    pub value: f64,
    /// Normalized Taylor coefficients at `s`, when requested.
    pub jet: Option<Jet>,
    pub quadrature_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Theorem1,
    Lemma2Bound,
    SmClosedForm,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Theorem1 => "theorem1",
            Method::Lemma2Bound => "lemma2_bound",
            Method::SmClosedForm => "sm_closed_form",
            Method::MonteCarlo => "monte_carlo",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessEstimate {
    pub value: f64,
    pub method: Method,
    pub ci_halfwidth: Option<f64>,
    pub config_digest: String,
}

/// Channel knowledge assumed by the SM closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Csi {
    Perfect,
    Imperfect,
}

fn inner_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 200 }
}

fn outer_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 400 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct MemoKey {
    tag: u8,
    s: u64,
    len: usize,
    params: u64,
}

const MEMO_CAP: usize = 1 << 15;

static MEMO: LazyLock<RwLock<HashMap<MemoKey, (Jet, f64)>>> = LazyLock::new(|| RwLock::new(HashMap::new()));

fn memoized(key: MemoKey, f: impl FnOnce() -> Result<(Jet, f64)>) -> Result<(Jet, f64)> {
    if let Some(v) = MEMO.read().get(&key) {
        return Ok(*v);
    }
    let v = f()?;
    let mut m = MEMO.write();
    if m.len() >= MEMO_CAP {
        m.clear();
    }
    m.insert(key, v);
    Ok(v)
}

fn hash_values(xs: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for x in xs {
        x.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Jet of `a / (a + s)` at `s`.
fn ratio_jet(a: f64, s: f64, len: usize) -> Jet {
    let base = 1.0 / (a + s);
    let mut p = a * base;
    Jet::from_fn(len, |_| {
        let c = p;
        p *= -base;
        c
    })
}

fn check(context: &'static str, error: f64, target: f64) -> Result<()> {
    if error <= target {
        Ok(())
    } else {
        Err(Error::QuadratureFailure { context, estimate: error, target })
    }
}

fn tolerance(len: usize) -> f64 {
    if len > 1 {
        JET_TOL
    } else {
        VALUE_TOL
    }
}

/// Estimation-error scale `c` of the intra-cluster integrand.
fn intra_scale(p: &SystemParams, mode: IntraMode) -> f64 {
    match mode {
        IntraMode::Training => p.training_snr(),
        IntraMode::Doppler { delta } => delta * p.gamma_o / (p.n as f64 * p.f_d()),
    }
}

fn intra_jet(s: f64, c: f64, len: usize, p: &SystemParams) -> Result<(Jet, f64)> {
    if p.k <= 1 || c.is_infinite() {
        return Ok((Jet::constant(1.0, len), 0.0));
    }
    let key = MemoKey {
        tag: 1,
        s: s.to_bits(),
        len,
        params: hash_values(&[c, p.alpha, p.r, p.d_r, p.k as f64, p.ns as f64]),
    };
    let (mut jet, err) = memoized(key, || {
        let (alpha, radius, ns, km1) = (p.alpha, p.r, p.ns as u32, (p.k - 1) as u32);
        let phi = |r: f64| ratio_jet(c + r.powf(alpha), s, len).powi(ns);
        let outer = disc_average(
            |rho: f64| {
                let q = disc_average(phi, rho, radius, &inner_opts());
                Tracked::new(q.value.powi(km1), km1 as f64 * q.error)
            },
            p.d_r,
            radius,
            &outer_opts(),
        );
        let err = outer.error + outer.value.e;
        check("intra-cluster transform", err, tolerance(len))?;
        Ok((outer.value.v, err))
    })?;
    if s == 0.0 {
        jet.set_value(1.0);
    }
    Ok((jet, err))
}

/// Tail of the inter-cluster exponent beyond radius `d`, bounded with
/// `1 - u^K <= K (1 - u)`, `1 - psi <= Ns s / r^alpha` and `r >= d - R`.
pub fn inter_tail_bound(s: f64, d: f64, p: &SystemParams) -> f64 {
    let a = p.alpha;
    let x = d - p.r;
    TAU * (p.k * p.ns) as f64 * s * (x.powf(2.0 - a) / (a - 2.0) + p.r * x.powf(1.0 - a) / (a - 1.0))
}

const FAR_REACH: f64 = 1e4;

/// Inter-cluster exponent beyond radius `d` from the far-field expansion
/// `K Ns s r^-alpha (1 + alpha^2 R^2 / 8 r^2) - q s^2 r^-2alpha`, as
/// (linear, quadratic) parts in `s` and an error estimate.
fn far_tail(s: f64, d: f64, p: &SystemParams) -> (f64, f64, f64) {
    let (a, r) = (p.alpha, p.r);
    let (k, ns) = (p.k as f64, p.ns as f64);
    let curvature = a * r * r / 8.0 * d.powf(-a);
    let lin = TAU * k * ns * s * (d.powf(2.0 - a) / (a - 2.0) + curvature);
    let q = k * ns * (ns + 1.0) / 2.0 + k * (k - 1.0) * ns * ns / 2.0;
    let quad = -TAU * q * s * s * d.powf(2.0 - 2.0 * a) / (2.0 * a - 2.0);
    // the correction terms overstate the next order by a wide margin
    let err = (TAU * k * ns * s * curvature).abs() * (r / d).powi(2) * a * a + quad.abs() * (k * ns * s * d.powf(-a) + (r / d).powi(2) * a * a);
    (lin, quad, err)
}

/// `Phi(s) = int_{R^2} 1 - M(|y|)^K dy`, so that the inter-cluster transform
/// is `exp(-lambda_p Phi(s))`. Independent of the density.
fn phi_jet(s: f64, len: usize, p: &SystemParams) -> Result<(Jet, f64)> {
    if s <= 0.0 {
        if len > 1 {
            return Err(Error::DomainError("inter-cluster transform derivatives diverge at s = 0"));
        }
        return Ok((Jet::constant(0.0, 1), 0.0));
    }
    let key = MemoKey {
        tag: 2,
        s: s.to_bits(),
        len,
        params: hash_values(&[p.alpha, p.r, p.k as f64, p.ns as f64]),
    };
    memoized(key, || {
        let (alpha, radius, ns, k) = (p.alpha, p.r, p.ns as u32, p.k as u32);
        let deficit = |r: f64| {
            let b = r.powf(alpha);
            let mut d = ratio_jet(b, s, len).powi(ns).scale(-1.0);
            d.set_value(-(ns as f64 * (-s / (s + b)).ln_1p()).exp_m1());
            d
        };
        let integrand = |d: f64| {
            let u = disc_average(deficit, d, radius, &inner_opts());
            let u0 = u.value.value();
            let mut j = (Jet::constant(1.0, len) - u.value).powi(k).scale(-1.0);
            j.set_value(-(k as f64 * (-u0).ln_1p()).exp_m1());
            Tracked::new(j * (TAU * d), TAU * d * k as f64 * u.error)
        };
        let knee = (2.0 * radius).max(radius + s.powf(1.0 / alpha));
        let body = integrate_pieces(&integrand, &[0.0, radius, 2.0 * radius, knee], &outer_opts());

        let scale = PI * s.powf(2.0 / alpha);
        let target = 1e-13 * scale.max(1.0);
        // Disc averages lose relative precision far out; past `FAR_REACH`
        // knees the leading-order tail takes over.
        let mut far = 2.0 * knee;
        while inter_tail_bound(s, far, p) * (1.0f64).max(1.0 / s) > target && far < FAR_REACH * knee {
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
        let (lin, quad, rest_err) = far_tail(s, far, p);
        let rest = [lin + quad, lin / s + 2.0 * quad / s, quad / (s * s)];
        let value = body.value.v + tail.value.v + Jet::from_fn(len, |i| rest.get(i).copied().unwrap_or(0.0));
        let err = body.error + body.value.e + tail.error + tail.value.e + rest_err;
        check("inter-cluster exponent", err, 1e-6 * scale.max(1.0))?;
        Ok((value, err))
    })
}

/// Density-free exponent `Phi(s)` of the inter-cluster transform and its
/// error estimate.
pub fn inter_exponent(s: f64, p: &SystemParams) -> Result<(f64, f64)> {
    let (j, e) = phi_jet(s, 1, p)?;
    Ok((j.value(), e))
}

/// Intra-cluster transform as a jet of length `len` at `s`.
pub fn laplace_intra_jet(s: f64, p: &SystemParams, mode: IntraMode, len: usize) -> Result<LaplaceEval> {
    if s < 0.0 {
        return Err(Error::DomainError("Laplace argument must be non-negative"));
    }
    let (jet, err) = intra_jet(s, intra_scale(p, mode), len, p)?;
    Ok(LaplaceEval { s, value: jet.value(), jet: Some(jet), quadrature_error: err })
}

/// Laplace transform of the intra-cluster residual interference seen by the
/// typical receiver.
pub fn laplace_intra(s: f64, p: &SystemParams, mode: IntraMode) -> Result<LaplaceEval> {
    let e = laplace_intra_jet(s, p, mode, 1)?;
    Ok(LaplaceEval { jet: None, ..e })
}

/// Inter-cluster transform as a jet of length `len` at `s > 0`.
pub fn laplace_inter_jet(s: f64, p: &SystemParams, len: usize) -> Result<LaplaceEval> {
    if s < 0.0 {
        return Err(Error::DomainError("Laplace argument must be non-negative"));
    }
    let lam = p.lambda_p();
    if lam == 0.0 {
        let jet = Jet::constant(1.0, len);
        return Ok(LaplaceEval { s, value: 1.0, jet: Some(jet), quadrature_error: 0.0 });
    }
    let (phi, err) = phi_jet(s, len, p)?;
    let jet = phi.scale(-lam).exp();
    let value = jet.value();
    Ok(LaplaceEval { s, value, jet: Some(jet), quadrature_error: lam * err * value })
}

/// Laplace transform of the interference from all other clusters.
pub fn laplace_inter(s: f64, p: &SystemParams) -> Result<LaplaceEval> {
    let e = laplace_inter_jet(s, p, 1)?;
    Ok(LaplaceEval { jet: None, ..e })
}

fn direct_error_jet(s: f64, c: f64, p: &SystemParams, len: usize) -> Jet {
    if c.is_infinite() {
        return Jet::constant(1.0, len);
    }
    ratio_jet(c + p.d_r.powf(p.alpha), s, len).powi(p.ns as u32)
}

/// `E exp(-s g beta^2 h)` for the direct link with `h ~ Gamma(Ns, 1)`.
pub fn direct_error_factor(s: f64, p: &SystemParams) -> f64 {
    direct_error_jet(s, p.training_snr(), p, 1).value()
}

/// Jet of `exp(-s Ns / gamma_o) E[exp(-s g beta^2 h)] L_Ie(s) L_Ii(s)`.
fn success_kernel(s: f64, p: &SystemParams, mode: IntraMode, len: usize) -> Result<(Jet, f64)> {
    let c = intra_scale(p, mode);
    let noise = Jet::variable(s, len).scale(-(p.ns as f64) / p.gamma_o).exp();
    let direct = direct_error_jet(s, c, p, len);
    let intra = laplace_intra_jet(s, p, mode, len)?;
    let inter = laplace_inter_jet(s, p, len)?;
    let jet = noise * direct * intra.jet.unwrap() * inter.jet.unwrap();
    Ok((jet, intra.quadrature_error + inter.quadrature_error))
}

/// `eta` for the given threshold and CSI mode.
fn threshold_eta(theta: f64, p: &SystemParams, mode: IntraMode) -> Result<f64> {
    let c = intra_scale(p, mode);
    let a = p.d_r.powf(p.alpha);
    if c.is_infinite() {
        return Ok(theta * a);
    }
    if c <= 0.0 {
        return Err(Error::DegenerateCsi);
    }
    // 1 / (1 - beta^2) = 1 + a / c
    Ok(theta * a * (1.0 + a / c))
}

/// Success probability of the typical stream when every cluster aligns.
pub fn success_prob_ia(theta: f64, p: &SystemParams) -> Result<SuccessEstimate> {
    success_prob_ia_mode(theta, p, IntraMode::Training)
}

pub fn success_prob_ia_mode(theta: f64, p: &SystemParams, mode: IntraMode) -> Result<SuccessEstimate> {
    let p = p.with_theta(theta);
    derive(&p)?;
    let eta = threshold_eta(theta, &p, mode)?;
    let len = p.ns;
    let (f, _) = success_kernel(eta, &p, mode, len)?;
    let mut value = 0.0;
    let mut w = 1.0;
    for k in 0..len {
        value += w * f.coeff(k);
        w *= -eta;
    }
    Ok(SuccessEstimate {
        value: value.clamp(0.0, 1.0),
        method: Method::Theorem1,
        ci_halfwidth: None,
        config_digest: p.digest(),
    })
}

/// Pairwise-distance density of two independent uniform points in
/// `B(o, R)`.
pub fn displacement_pdf(x: f64, r: f64) -> f64 {
    if !(0.0..=2.0 * r).contains(&x) {
        return 0.0;
    }
    let u = x / (2.0 * r);
    let beta = (2.0 / PI) * (u.acos() - u * (1.0 - u * u).max(0.0).sqrt());
    2.0 * x / (r * r) * beta
}

/// Jensen-type bound on the inter-cluster transform for `K > 2`.
pub fn laplace_inter_bound(s: f64, p: &SystemParams) -> Result<f64> {
    if p.k <= 2 {
        return Err(Error::DomainError("inter-cluster bound needs K > 2"));
    }
    if s < 0.0 {
        return Err(Error::DomainError("Laplace argument must be non-negative"));
    }
    let m = (p.k * p.ns) as f64;
    let d = 2.0 / p.alpha;
    Ok((-p.lambda_p() * s.powf(d) * gamma(m + d) * gamma(1.0 - d) / gamma(m)).exp())
}

/// Bound on the intra-cluster transform obtained by moving the `K - 1` power
/// inside the average: a single 2D integral over the displacement between
/// two cluster members.
pub fn laplace_intra_bound(s: f64, p: &SystemParams) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::DomainError("Laplace argument must be non-negative"));
    }
    let c = p.training_snr();
    if p.k <= 1 || c.is_infinite() || s == 0.0 {
        return Ok(1.0);
    }
    let m = (p.ns * (p.k - 1)) as i32;
    let (a, dr, r) = (p.alpha, p.d_r, p.r);
    let opts = QuadOptions::new(1e-12, 1e-11);
    let mut inner_err = 0.0;
    let outer = integrate_pieces(
        |x: f64| {
            let q = integrate(
                |t: f64| {
                    let u2 = (x * x + dr * dr - 2.0 * x * dr * t.cos()).max(0.0);
                    let b = u2.powf(0.5 * a) + c;
                    (b / (b + s)).powi(m)
                },
                0.0,
                PI,
                &opts,
            );
            inner_err = f64::max(inner_err, q.error);
            displacement_pdf(x, r) * q.value / PI
        },
        &[0.0, dr.min(2.0 * r), 2.0 * r],
        &opts,
    );
    check("intra-cluster bound", outer.error + inner_err, VALUE_TOL)?;
    Ok(outer.value)
}

/// Derivative-free bound on the IA success probability.
pub fn success_prob_ia_bound(theta: f64, p: &SystemParams) -> Result<SuccessEstimate> {
    let p = p.with_theta(theta);
    derive(&p)?;
    let eta = threshold_eta(theta, &p, IntraMode::Training)?;
    let ns = p.ns;
    if eta <= (ns as f64 - 1.0) / std::f64::consts::E {
        return Err(Error::ConditionViolated { eta, ns });
    }
    let mut value = 0.0;
    let mut w = 1.0;
    for k in 0..ns {
        let s = eta - k as f64 / std::f64::consts::E;
        let (f, _) = success_kernel(s, &p, IntraMode::Training, 1)?;
        value += w * f.value();
        w *= eta / (k + 1) as f64;
    }
    Ok(SuccessEstimate {
        value: value.clamp(0.0, 1.0),
        method: Method::Lemma2Bound,
        ci_halfwidth: None,
        config_digest: p.digest(),
    })
}

/// Exponent pieces `(interference, noise)` of the SM success probability.
pub fn sm_exponents(theta: f64, p: &SystemParams, csi: Csi) -> (f64, f64) {
    let d = 2.0 / p.alpha;
    let a = p.d_r.powf(p.alpha);
    let j = crate::params::interference_constant(p.n, p.alpha);
    let n = p.n as f64;
    match csi {
        Csi::Perfect => (theta.powf(d) * p.d_r * p.d_r * j, theta * a * n / p.gamma_o),
        Csi::Imperfect => {
            let g = 1.0 / a;
            let beta2 = crate::params::estimation_error_variance(p.t_t, p.gamma_o, g, p.n);
            let theta_t = theta / (1.0 - beta2);
            let n_o_t = p.n_o + p.power() * g * beta2;
            (theta_t.powf(d) * p.d_r * p.d_r * j, theta_t * a * n * n_o_t / p.power())
        }
    }
}

/// Success probability of one stream under ZF spatial multiplexing.
pub fn success_prob_sm(theta: f64, p: &SystemParams, csi: Csi) -> SuccessEstimate {
    let (interference, noise) = sm_exponents(theta, p, csi);
    SuccessEstimate {
        value: (-p.lambda_p() * interference - noise).exp(),
        method: Method::SmClosedForm,
        ci_halfwidth: None,
        config_digest: p.with_theta(theta).digest(),
    }
}
