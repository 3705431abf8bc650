//! Rayleigh MIMO channels under the Gauss-Markov estimation-error model.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{dist, NetworkRealization};
use crate::params::{estimation_error_variance, SystemParams};
use crate::rng::SeedSequence;

pub type CMatrix = DMatrix<Complex64>;

/// Unit-variance circularly symmetric complex Gaussian.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `rows x cols` matrix with orthonormal columns (Gram-Schmidt on a Gaussian
/// draw, which is Haar distributed on the Stiefel manifold).
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    assert!(cols <= rows);
    let mut m = gaussian_matrix(rng, rows, cols);
    for j in 0..cols {
        for i in 0..j {
            let proj = m.column(i).dotc(&m.column(j));
            let ci = m.column(i).clone_owned();
            m.column_mut(j).axpy(-proj, &ci, Complex64::new(1.0, 0.0));
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    /// Estimated channel.
    pub h_w: CMatrix,
    /// Estimation error.
    pub e: CMatrix,
    pub beta2: f64,
    pub g: f64,
}

impl LinkChannel {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, n: usize, beta2: f64, g: f64) -> Self {
        let h_w = gaussian_matrix(rng, n, n);
        let e = gaussian_matrix(rng, n, n);
        LinkChannel { h_w, e, beta2, g }
    }

    /// `sqrt(1 - beta^2) H_w + beta E`.
    pub fn true_channel(&self) -> CMatrix {
        &self.h_w * Complex64::from((1.0 - self.beta2).sqrt()) + &self.e * Complex64::from(self.beta2.sqrt())
    }
}

/// Untrained link from another cluster: only the true channel exists.
#[derive(Debug, Clone, PartialEq)]
pub struct InterLink {
    pub h: CMatrix,
    /// Precoder of the interfering transmitter, designed in its own cluster
    /// and hence independent of `h`.
    pub f: CMatrix,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannelSet {
    /// `intra[x][z]`: link from transmitter `z` to receiver `x` of the
    /// representative cluster.
    pub intra: Vec<Vec<LinkChannel>>,
    /// Links from every other-cluster transmitter to the tagged receiver.
    pub inter: Vec<InterLink>,
}

/// Draws every link entering the tagged receiver's SINR plus the remaining
/// intra-cluster links needed to design the alignment.
pub fn draw_links_with<R: Rng + ?Sized>(net: &NetworkRealization, p: &SystemParams, rng: &mut R) -> LinkChannelSet {
    let rep = &net.representative;
    let k = rep.daughters.len();
    let mut intra = Vec::with_capacity(k);
    for x in 0..k {
        let mut row = Vec::with_capacity(k);
        for z in 0..k {
            let d = dist(rep.receivers[x], rep.daughters[z]);
            let g = d.powf(-p.alpha);
            let beta2 = estimation_error_variance(p.t_t, p.gamma_o, g, p.n);
            row.push(LinkChannel::draw(rng, p.n, beta2, g));
        }
        intra.push(row);
    }
    let rx = net.tagged_receiver();
    let inter = net
        .interferers()
        .map(|z| {
            let h = gaussian_matrix(rng, p.n, p.n);
            let f = random_orthonormal(rng, p.n, p.ns);
            InterLink { h, f, g: dist(rx, z).powf(-p.alpha) }
        })
        .collect();
    LinkChannelSet { intra, inter }
}

pub fn draw_links(net: &NetworkRealization, p: &SystemParams, seed: u64, index: u64) -> LinkChannelSet {
    let mut rng = SeedSequence::new(seed).child(0x6c69_6e6b).stream(index);
    draw_links_with(net, p, &mut rng)
}
