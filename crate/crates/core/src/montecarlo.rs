//! End-to-end simulation of the physical model.
//!
//! Every trial samples a Palm realization, draws the links, designs the
//! alignment on the estimated intra-cluster channels (IA) or builds the ZF
//! receiver (SM), and records the SINR of the tagged stream. Trial `i` always
//! uses stream `i` of the seed sequence and per-chunk results are merged as
//! integer counts, so results do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_links_with, gaussian_matrix, InterLink, LinkChannel};
use crate::error::{Error, Result};
use crate::geometry::{dist, resolve_window, sample_palm_network_with, GeometryOptions, WindowPolicy};
use crate::params::{derive, estimation_error_variance, Scheme, SystemParams};
use crate::phy::{design_ia, estimated, ia_sinr, sm_sinr, IaOptions};
use crate::rng::SeedSequence;
use crate::stats::binomial_ci_halfwidth;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "IANET_WORKERS";

/// Smallest trial count accepted by the estimators.
pub const MIN_TRIALS: u64 = 1000;

const CHUNK: u64 = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub window: WindowPolicy,
    /// Collect every stream of the tagged receiver instead of stream 0.
    pub all_streams: bool,
    pub ia: IaOptionsSpec,
    /// `None` reads [`WORKERS_ENV`], falling back to all cores.
    pub workers: Option<usize>,
}

/// Serializable subset of [`IaOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IaOptionsSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub polish_below: Option<f64>,
}

impl Default for IaOptionsSpec {
    fn default() -> Self {
        let o = IaOptions::polished();
        IaOptionsSpec { tol: o.tol, max_iter: o.max_iter, polish_below: o.polish_below }
    }
}

impl From<IaOptionsSpec> for IaOptions {
    fn from(s: IaOptionsSpec) -> Self {
        IaOptions { tol: s.tol, max_iter: s.max_iter, track_history: false, polish_below: s.polish_below }
    }
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { window: WindowPolicy::Auto, all_streams: false, ia: IaOptionsSpec::default(), workers: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub theta: f64,
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    /// Indicator samples behind `p_hat` (trials times streams collected).
    pub trials: u64,
    pub successes: u64,
    /// Trials dropped because the alignment did not converge.
    pub excluded: u64,
    pub seed_root: u64,
    pub scheme: Scheme,
    /// Successes per stream when all streams are collected.
    pub stream_successes: Vec<u64>,
}

/// Worker count from the option, the environment, or the machine.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

fn scheme_tag(scheme: Scheme) -> u64 {
    match scheme {
        Scheme::Ia => 0x6961,
        Scheme::Sm => 0x736d,
    }
}

/// Largest Laplace-type argument the thresholds will probe; sizes the window.
fn probe_argument(p: &SystemParams, max_theta: f64) -> f64 {
    let a = p.d_r.powf(p.alpha);
    let beta2 = estimation_error_variance(p.t_t, p.gamma_o, 1.0 / a, p.n);
    max_theta * a / (1.0 - beta2)
}

/// SINR samples of one trial: one per collected stream, `None` when the
/// trial is excluded.
fn trial_sinr(p: &SystemParams, scheme: Scheme, window: f64, opts: &McOptions, ia: &IaOptions, seq: &SeedSequence, i: u64) -> Option<Vec<f64>> {
    let mut rng = seq.stream(i);
    let net = sample_palm_network_with(p, window, 0.0, &mut rng, i);
    let streams = if opts.all_streams {
        match scheme {
            Scheme::Ia => p.ns,
            Scheme::Sm => p.n,
        }
    } else {
        1
    };
    match scheme {
        Scheme::Ia => {
            let links = draw_links_with(&net, p, &mut rng);
            let sol = match design_ia(&estimated(&links.intra), p.ns, ia, &mut rng) {
                Ok(s) => s,
                Err(Error::NoConvergence { .. }) => return None,
                Err(e) => panic!("unexpected alignment failure: {e}"),
            };
            Some((0..streams).map(|n| ia_sinr(&links.intra, &links.inter, &sol, 0, n, p.gamma_o)).collect())
        }
        Scheme::Sm => {
            let g = p.d_r.powf(-p.alpha);
            let beta2 = estimation_error_variance(p.t_t, p.gamma_o, g, p.n);
            let direct = LinkChannel::draw(&mut rng, p.n, beta2, g);
            let rx = net.tagged_receiver();
            let inter: Vec<InterLink> = net
                .sm_interferers()
                .map(|z| InterLink { h: gaussian_matrix(&mut rng, p.n, p.n), f: Default::default(), g: dist(rx, z).powf(-p.alpha) })
                .collect();
            // An ill-conditioned estimate leaves no usable ZF receiver: outage.
            Some((0..streams).map(|n| sm_sinr(&direct, &inter, n, p.gamma_o).unwrap_or(0.0)).collect())
        }
    }
}

#[derive(Default, Clone)]
struct Counts {
    success: Vec<u64>,
    per_stream: Vec<u64>,
    samples: u64,
    excluded: u64,
}

impl Counts {
    fn merge(mut self, o: Counts) -> Counts {
        if self.success.is_empty() {
            return o;
        }
        if o.success.is_empty() {
            return self;
        }
        for (a, b) in self.success.iter_mut().zip(&o.success) {
            *a += b;
        }
        for (a, b) in self.per_stream.iter_mut().zip(&o.per_stream) {
            *a += b;
        }
        self.samples += o.samples;
        self.excluded += o.excluded;
        self
    }
}

/// Success probability at every threshold of `thetas`, sharing the SINR
/// samples across thresholds.
pub fn estimate_success_grid(
    p: &SystemParams,
    scheme: Scheme,
    thetas: &[f64],
    trials: u64,
    seed_root: u64,
    opts: &McOptions,
) -> Result<Vec<MCResult>> {
    if trials < MIN_TRIALS {
        return Err(Error::BadParameter { name: "trials", value: trials as f64, reason: "need at least 1000 trials" });
    }
    if thetas.is_empty() {
        return Ok(Vec::new());
    }
    derive(p)?;
    let max_theta = thetas.iter().copied().fold(0.0, f64::max);
    let s_max = probe_argument(p, max_theta);
    let window = match scheme {
        Scheme::Ia => resolve_window(p, &GeometryOptions { window: opts.window, exclusion_radius: 0.0, s_max }),
        Scheme::Sm => {
            let single = SystemParams { k: 1, ns: p.n, ..p.clone() };
            resolve_window(&single, &GeometryOptions { window: opts.window, exclusion_radius: 0.0, s_max })
        }
    };
    let seq = SeedSequence::new(seed_root).child(scheme_tag(scheme));
    let ia: IaOptions = opts.ia.into();
    let streams = if opts.all_streams {
        match scheme {
            Scheme::Ia => p.ns,
            Scheme::Sm => p.n,
        }
    } else {
        1
    };
    let chunks: Vec<u64> = (0..trials.div_ceil(CHUNK)).collect();
    let run = || {
        chunks
            .par_iter()
            .map(|&c| {
                let mut counts = Counts {
                    success: vec![0; thetas.len()],
                    per_stream: vec![0; streams * thetas.len()],
                    samples: 0,
                    excluded: 0,
                };
                for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                    match trial_sinr(p, scheme, window, opts, &ia, &seq, i) {
                        None => counts.excluded += 1,
                        Some(sinrs) => {
                            counts.samples += sinrs.len() as u64;
                            for (n, &x) in sinrs.iter().enumerate() {
                                for (t, &theta) in thetas.iter().enumerate() {
                                    if x > theta {
                                        counts.success[t] += 1;
                                        counts.per_stream[t * streams + n] += 1;
                                    }
                                }
                            }
                        }
                    }
                }
                counts
            })
            .reduce(Counts::default, Counts::merge)
    };
    let workers = resolve_workers(opts.workers);
    let counts = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|_| Error::DomainError("could not start worker pool"))?
        .install(run);
    if counts.excluded > 0 {
        log::warn!("{} of {} trials excluded: alignment did not converge", counts.excluded, trials);
    }
    Ok(thetas
        .iter()
        .enumerate()
        .map(|(t, &theta)| {
            let p_hat = if counts.samples == 0 { 0.0 } else { counts.success[t] as f64 / counts.samples as f64 };
            MCResult {
                theta,
                p_hat,
                ci_halfwidth: binomial_ci_halfwidth(p_hat, counts.samples),
                trials: counts.samples,
                successes: counts.success[t],
                excluded: counts.excluded,
                seed_root,
                scheme,
                stream_successes: if opts.all_streams { counts.per_stream[t * streams..(t + 1) * streams].to_vec() } else { Vec::new() },
            }
        })
        .collect())
}

/// Monte Carlo estimate of the success probability at `theta`.
pub fn estimate_success(p: &SystemParams, scheme: Scheme, theta: f64, trials: u64, seed_root: u64) -> Result<MCResult> {
    Ok(estimate_success_grid(p, scheme, &[theta], trials, seed_root, &McOptions::default())?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBracket {
    /// Density whose estimated outage is below `epsilon` by more than the tolerance.
    pub lo: f64,
    /// Density whose estimated outage is above `epsilon` by more than the tolerance.
    pub hi: f64,
    /// Density at which the estimated outage landed within tolerance.
    pub estimate: f64,
    pub outage_at_estimate: f64,
}

/// Bisects the active cluster density until the simulated outage matches
/// `epsilon` within `max(0.01, ci)`.
pub fn bisect_density_for_outage(p: &SystemParams, scheme: Scheme, epsilon: f64, trials: u64, seed_root: u64) -> Result<DensityBracket> {
    let outage = |lam: f64| -> Result<(f64, f64)> {
        let r = estimate_success(&p.with_density(lam), scheme, p.theta, trials, seed_root)?;
        Ok((1.0 - r.p_hat, r.ci_halfwidth))
    };
    let (o0, ci0) = outage(0.0)?;
    if o0 - ci0.max(0.01) > epsilon {
        return Err(Error::NoBracket { outage: o0, epsilon });
    }
    let mut lo = 0.0;
    let mut hi = if p.lambda_p() > 0.0 { p.lambda_p() } else { 0.01 };
    loop {
        let (o, ci) = outage(hi)?;
        if o > epsilon + ci.max(0.01) {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoBracket { outage: o, epsilon });
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (o, ci) = outage(mid)?;
        let tol = ci.max(0.01);
        if (o - epsilon).abs() <= tol {
            return Ok(DensityBracket { lo, hi, estimate: mid, outage_at_estimate: o });
        }
        if o < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(DensityBracket { lo, hi, estimate: mid, outage_at_estimate: outage(mid)?.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::fixtures::fig3;

    #[test]
    fn tiny_threshold_always_succeeds() {
        let p = SystemParams { lambda_p_parent: 0.05, ..fig3() };
        let r = estimate_success(&p, Scheme::Ia, 1e-9, 1000, 1).unwrap();
        assert_eq!(r.p_hat, 1.0);
        let r = estimate_success(&p, Scheme::Sm, 1e-9, 1000, 1).unwrap();
        assert_eq!(r.p_hat, 1.0);
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let p = SystemParams { lambda_p_parent: 0.05, ..fig3() };
        let thetas = [1.0, 10.0, 100.0];
        let one = McOptions { workers: Some(1), ..Default::default() };
        let three = McOptions { workers: Some(3), ..Default::default() };
        let a = estimate_success_grid(&p, Scheme::Ia, &thetas, 1000, 9, &one).unwrap();
        let b = estimate_success_grid(&p, Scheme::Ia, &thetas, 1000, 9, &three).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_runs() {
        assert!(estimate_success(&fig3(), Scheme::Ia, 1.0, 10, 1).is_err());
    }
}
