//! Palm-conditioned samples of the Neyman-Scott transmitter process.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::rng::SeedSequence;

pub type Point = [f64; 2];

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `d^-alpha`.
pub fn pathloss(d: f64, alpha: f64) -> Result<f64> {
    if d == 0.0 {
        return Err(Error::SingularDistance);
    }
    Ok(d.powf(-alpha))
}

/// Uniform point in `B(center, r)`.
pub fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, center: Point, r: f64) -> Point {
    let rho = r * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + rho * phi.cos(), center[1] + rho * phi.sin()]
}

/// Point at distance `d` from `from` in a uniformly random direction.
pub fn at_random_angle<R: Rng + ?Sized>(rng: &mut R, from: Point, d: f64) -> Point {
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    [from[0] + d * phi.cos(), from[1] + d * phi.sin()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub parent: Point,
    pub daughters: Vec<Point>,
    /// `receivers[i]` belongs to `daughters[i]`.
    pub receivers: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRealization {
    /// Cluster of the tagged transmitter; `daughters[0]` is the origin.
    pub representative: Cluster,
    pub other_clusters: Vec<Cluster>,
    pub window_radius: f64,
    pub seed: u64,
}

impl NetworkRealization {
    pub fn tagged_receiver(&self) -> Point {
        self.representative.receivers[0]
    }

    /// All transmitters outside the representative cluster.
    pub fn interferers(&self) -> impl Iterator<Item = Point> + '_ {
        self.other_clusters.iter().flat_map(|c| c.daughters.iter().copied())
    }

    pub fn interferer_count(&self) -> usize {
        self.other_clusters.iter().map(|c| c.daughters.len()).sum()
    }

    /// Transmitters seen by a spatial-multiplexing receiver: one per active
    /// cluster, located at the parent point.
    pub fn sm_interferers(&self) -> impl Iterator<Item = Point> + '_ {
        self.other_clusters.iter().map(|c| c.parent)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("realization serializes")
    }
}

/// How far out the interfering clusters are simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "radius", rename_all = "lowercase")]
pub enum WindowPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryOptions {
    pub window: WindowPolicy,
    /// Interferers closer than this to the tagged receiver are dropped.
    pub exclusion_radius: f64,
    /// Largest Laplace argument the realization will be used with; drives the
    /// automatic window.
    pub s_max: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions { window: WindowPolicy::Auto, exclusion_radius: 0.0, s_max: 0.0 }
    }
}

/// Absolute bias target for truncating the plane at the window edge.
pub const WINDOW_BIAS_TARGET: f64 = 1e-3;

/// Mean interference (unit fading, `Ns` streams) from clustered transmitters
/// beyond radius `w` around the receiver; clusters straddling the edge are
/// counted from `w - R`.
pub fn tail_interference_mean(p: &SystemParams, w: f64) -> f64 {
    let lam = p.lambda_p();
    let inner = (w - p.r).max(1e-12);
    2.0 * std::f64::consts::PI * lam * (p.k * p.ns) as f64 * inner.powf(2.0 - p.alpha) / (p.alpha - 2.0)
}

/// Window radius: `max(15 lambda^-1/2, w_b)` where `w_b` keeps the worst-case
/// success-probability bias `s E[I_tail] L(s)` below [`WINDOW_BIAS_TARGET`]
/// over `s in [0, s_max]`, with `L(s)` the clustered-Jensen upper bound on the
/// inter-cluster Laplace transform.
pub fn resolve_window(p: &SystemParams, opts: &GeometryOptions) -> f64 {
    let lam = p.lambda_p();
    match opts.window {
        WindowPolicy::Fixed(w) => w,
        WindowPolicy::Auto if lam <= 0.0 => 0.0,
        WindowPolicy::Auto => {
            let base = 15.0 / lam.sqrt();
            if opts.s_max <= 0.0 {
                return base;
            }
            let m = (p.k * p.ns) as f64;
            let d = 2.0 / p.alpha;
            let c = std::f64::consts::PI
                * statrs::function::gamma::gamma(m + d)
                * statrs::function::gamma::gamma(1.0 - d)
                / statrs::function::gamma::gamma(m);
            // s exp(-lam c s^d) peaks at s = (1 / (lam c d))^(1/d)
            let s_peak = (1.0 / (lam * c * d)).powf(1.0 / d);
            let s = s_peak.min(opts.s_max);
            let worst = s * (-lam * c * s.powf(d)).exp();
            let mut w = base;
            while worst * tail_interference_mean(p, w) > WINDOW_BIAS_TARGET {
                w *= 1.25;
            }
            w
        }
    }
}

fn sample_cluster<R: Rng + ?Sized>(rng: &mut R, parent: Point, k: usize, r: f64, d_r: f64) -> Cluster {
    let daughters: Vec<Point> = (0..k).map(|_| uniform_in_disc(rng, parent, r)).collect();
    let receivers = daughters.iter().map(|&x| at_random_angle(rng, x, d_r)).collect();
    Cluster { parent, daughters, receivers }
}

/// Samples one realization from the reduced Palm distribution seen by the
/// transmitter at the origin. `window` is the already-resolved radius.
pub fn sample_palm_network_with<R: Rng + ?Sized>(
    p: &SystemParams,
    window: f64,
    exclusion_radius: f64,
    rng: &mut R,
    seed: u64,
) -> NetworkRealization {
    // Representative cluster: virtual parent uniform in B(o, R), tagged
    // daughter pinned at the origin.
    let parent = uniform_in_disc(rng, [0.0, 0.0], p.r);
    let mut daughters = Vec::with_capacity(p.k);
    daughters.push([0.0, 0.0]);
    for _ in 1..p.k {
        daughters.push(uniform_in_disc(rng, parent, p.r));
    }
    let receivers = daughters.iter().map(|&x| at_random_angle(rng, x, p.d_r)).collect();
    let representative = Cluster { parent, daughters, receivers };

    let mean = p.lambda_p_parent * std::f64::consts::PI * window * window;
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as usize
    } else {
        0
    };
    let rx = representative.receivers[0];
    let mut other_clusters = Vec::with_capacity((count as f64 * p.p_a) as usize + 1);
    for _ in 0..count {
        let parent = uniform_in_disc(rng, [0.0, 0.0], window);
        if rng.random::<f64>() >= p.p_a {
            continue;
        }
        let mut c = sample_cluster(rng, parent, p.k, p.r, p.d_r);
        if exclusion_radius > 0.0 {
            let keep: Vec<bool> = c.daughters.iter().map(|&x| dist(x, rx) >= exclusion_radius).collect();
            let mut it = keep.iter();
            c.daughters.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            c.receivers.retain(|_| *it.next().unwrap());
        }
        other_clusters.push(c);
    }
    NetworkRealization { representative, other_clusters, window_radius: window, seed }
}

/// Seeded entry point: realization number `index` of the sequence rooted at `seed`.
pub fn sample_palm_network(p: &SystemParams, opts: &GeometryOptions, seed: u64, index: u64) -> NetworkRealization {
    let window = resolve_window(p, opts);
    let mut rng = SeedSequence::new(seed).stream(index);
    sample_palm_network_with(p, window, opts.exclusion_radius, &mut rng, seed)
}
