//! Sampling routines behind the statistical checks of the simulator:
//! geometry counts and distances, alignment residuals and effective gains.

use crate::channel::{gaussian_matrix, CMatrix};
use crate::error::{Error, Result};
use crate::geometry::{dist, sample_palm_network, uniform_in_disc, GeometryOptions, WindowPolicy};
use crate::params::SystemParams;
use crate::phy::{design_ia, stream_gain, IaOptions, IaSolution};
use crate::rng::SeedSequence;

fn random_cluster(rng: &mut impl rand::Rng, k: usize, n: usize) -> Vec<Vec<CMatrix>> {
    (0..k).map(|_| (0..k).map(|_| gaussian_matrix(rng, n, n)).collect()).collect()
}

fn design(k: usize, n: usize, ns: usize, seq: &SeedSequence, i: u64) -> Result<(Vec<Vec<CMatrix>>, IaSolution)> {
    let mut rng = seq.stream(i);
    let h = random_cluster(&mut rng, k, n);
    let sol = design_ia(&h, ns, &IaOptions::polished(), &mut rng)?;
    Ok((h, sol))
}

/// Total leakage after alignment on i.i.d. Rayleigh channels, one value per
/// seed.
pub fn alignment_residuals(k: usize, n: usize, ns: usize, seeds: impl IntoIterator<Item = u64>) -> Result<Vec<f64>> {
    seeds.into_iter().map(|s| Ok(design(k, n, ns, &SeedSequence::new(s), 0)?.1.leakage)).collect()
}

/// `|w_n^T H_xx F_x|^2` over every receiver and stream of independent
/// aligned clusters, until `count` samples are collected. Streams of one
/// receiver are kept in order so per-stream subsequences can be taken with
/// a stride of `ns`. Draws where alignment does not converge are skipped;
/// the direct channel is independent of the filters, so this does not bias
/// the gains. Returns the samples and the number of skipped draws.
pub fn effective_gains(k: usize, n: usize, ns: usize, count: usize, seed: u64) -> Result<(Vec<f64>, usize)> {
    let seq = SeedSequence::new(seed);
    let mut out = Vec::with_capacity(count + k * ns);
    let (mut i, mut skipped) = (0, 0);
    while out.len() < count {
        let (h, sol) = match design(k, n, ns, &seq, i) {
            Ok(d) => d,
            Err(Error::NoConvergence { .. }) => {
                skipped += 1;
                i += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        i += 1;
        for x in 0..k {
            let f = &sol.precoders[x];
            let hx = &h[x][x];
            for s in 0..ns {
                let w: Vec<_> = sol.equalizers[x].row(s).iter().copied().collect();
                out.push(stream_gain(&w, hx.as_slice(), f.as_slice(), n, ns));
            }
        }
    }
    Ok((out, skipped))
}

/// Number of cluster parents with distance in `[r_in, r_out)` from the
/// origin, one count per realization. All clusters are kept (`P_A = 1`).
pub fn annulus_counts(p: &SystemParams, r_in: f64, r_out: f64, realizations: u64, seed: u64) -> Vec<u64> {
    let p = SystemParams { p_a: 1.0, ..p.clone() };
    let opts = GeometryOptions { window: WindowPolicy::Fixed(r_out), ..Default::default() };
    (0..realizations)
        .map(|i| {
            let net = sample_palm_network(&p, &opts, seed, i);
            net.other_clusters.iter().filter(|c| (r_in..r_out).contains(&dist(c.parent, [0.0, 0.0]))).count() as u64
        })
        .collect()
}

/// Distances from each daughter to its parent over the non-representative
/// clusters of several realizations.
pub fn daughter_radii(p: &SystemParams, realizations: u64, seed: u64) -> Vec<f64> {
    let opts = GeometryOptions::default();
    let mut out = Vec::new();
    for i in 0..realizations {
        let net = sample_palm_network(p, &opts, seed, i);
        for c in &net.other_clusters {
            out.extend(c.daughters.iter().map(|&d| dist(d, c.parent)));
        }
    }
    out
}

/// Distances between two independent uniform points of a disc of radius `r`.
pub fn pairwise_distances(r: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeedSequence::new(seed).stream(0);
    (0..count).map(|_| dist(uniform_in_disc(&mut rng, [0.0, 0.0], r), uniform_in_disc(&mut rng, [0.0, 0.0], r))).collect()
}

/// `sum f(|z|)` over the other members of the representative cluster, one
/// value per realization.
pub fn palm_sums(p: &SystemParams, f: impl Fn(f64) -> f64, realizations: u64, seed: u64) -> Vec<f64> {
    let opts = GeometryOptions { window: WindowPolicy::Fixed(p.r), ..Default::default() };
    (0..realizations)
        .map(|i| {
            let net = sample_palm_network(p, &opts, seed, i);
            net.representative.daughters[1..].iter().map(|&z| f(dist(z, [0.0, 0.0]))).sum()
        })
        .collect()
}
