//! Scalar model parameters, validation and derived quantities.
//!
//! Everything here is on a linear scale; dB handling lives at the CLI edge.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Transmission scheme a parameter set is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Interference alignment inside every cluster.
    Ia,
    /// One active pair per cluster, open-loop spatial multiplexing.
    Sm,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Ia => write!(f, "ia"),
            Scheme::Sm => write!(f, "sm"),
        }
    }
}

fn default_dc_exponent() -> f64 {
    -0.5
}

fn default_one() -> f64 {
    1.0
}

/// All scalar symbols of the network model.
///
/// `t_t = +inf` encodes perfect channel knowledge (zero estimation error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Transmitters per cluster.
    pub k: usize,
    /// Antennas per node.
    pub n: usize,
    /// Streams per transmitter.
    pub ns: usize,
    pub alpha: f64,
    /// Transmit SNR P / N_o (linear).
    pub gamma_o: f64,
    #[serde(default = "default_one")]
    pub n_o: f64,
    /// Parent (cluster center) density before channel-access thinning.
    pub lambda_p_parent: f64,
    #[serde(default = "default_one")]
    pub p_a: f64,
    /// Cluster radius.
    pub r: f64,
    /// Transmitter to receiver distance.
    pub d_r: f64,
    /// Channel block length in channel uses.
    pub t_block: f64,
    /// Training period in channel uses.
    pub t_t: f64,
    /// SINR threshold (linear).
    pub theta: f64,
    pub epsilon: f64,
    /// Exponent `e` in `D_c = 0.5 * lambda_p^e`.
    #[serde(default = "default_dc_exponent")]
    pub dc_exponent: f64,
}

impl SystemParams {
    /// Transmit power `P = gamma_o * N_o`.
    pub fn power(&self) -> f64 {
        self.gamma_o * self.n_o
    }

    /// Active cluster density `P_A * lambda_p_parent`.
    pub fn lambda_p(&self) -> f64 {
        self.p_a * self.lambda_p_parent
    }

    /// Doppler proxy `1/T`.
    pub fn f_d(&self) -> f64 {
        1.0 / self.t_block
    }

    /// `T_t * gamma_o / N`, the training SNR scale appearing in every
    /// estimation-error expression; infinite for perfect CSI.
    pub fn training_snr(&self) -> f64 {
        if self.t_t.is_infinite() {
            f64::INFINITY
        } else {
            self.t_t * self.gamma_o / self.n as f64
        }
    }

    /// Reference layout: K=3, N=2, Ns=1, alpha=4, N_o=1, every cluster
    /// active, R = D_c and D_r = R/5 with the density that produces `d_c`.
    /// gamma_o = 30 dB, T = 1000, T_t = KN = 6, theta = 10 dB, epsilon = 0.1.
    pub fn reference(d_c: f64) -> Self {
        SystemParams {
            k: 3,
            n: 2,
            ns: 1,
            alpha: 4.0,
            gamma_o: 1000.0,
            n_o: 1.0,
            lambda_p_parent: density_for_cluster_distance(d_c, default_dc_exponent()),
            p_a: 1.0,
            r: d_c,
            d_r: d_c / 5.0,
            t_block: 1000.0,
            t_t: 6.0,
            theta: 10.0,
            epsilon: 0.1,
            dc_exponent: default_dc_exponent(),
        }
    }

    pub fn perfect_csi(&self) -> bool {
        self.t_t.is_infinite()
    }

    pub fn with_training(&self, t_t: f64) -> Self {
        SystemParams { t_t, ..self.clone() }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        SystemParams { theta, ..self.clone() }
    }

    /// Same network with the active density set directly (`P_A = 1`).
    pub fn with_density(&self, lambda_p: f64) -> Self {
        SystemParams { lambda_p_parent: lambda_p, p_a: 1.0, ..self.clone() }
    }

    /// `2N - (K+1)Ns`, non-negative for feasible IA.
    pub fn feasibility_slack(&self) -> i64 {
        2 * self.n as i64 - (self.k as i64 + 1) * self.ns as i64
    }

    /// Stable hex digest of every field, used to tag results.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in [self.k as f64, self.n as f64, self.ns as f64] {
            h.update(v.to_le_bytes());
        }
        for v in [
            self.alpha,
            self.gamma_o,
            self.n_o,
            self.lambda_p_parent,
            self.p_a,
            self.r,
            self.d_r,
            self.t_block,
            self.t_t,
            self.theta,
            self.epsilon,
            self.dc_exponent,
        ] {
            h.update(v.to_le_bytes());
        }
        let out = h.finalize();
        out.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Quantities shared by all downstream modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedQuantities {
    pub lambda_p: f64,
    /// Feedback period `K^2 N`.
    pub t_f: f64,
    pub g_oo: f64,
    pub beta2_oo: f64,
    pub eta: f64,
    /// SM effective threshold `theta / (1 - beta^2)`.
    pub theta_tilde: f64,
    /// SM effective noise `N_o + P g beta^2`.
    pub n_o_tilde: f64,
    /// SM interference constant.
    pub j: f64,
    /// Average cluster-center distance.
    pub d_c: f64,
    pub slack: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    pub params: SystemParams,
    pub derived: DerivedQuantities,
    pub scheme: Scheme,
}

impl std::ops::Deref for ValidatedParams {
    type Target = SystemParams;
    fn deref(&self) -> &SystemParams {
        &self.params
    }
}

/// `1 / (1 + T_t gamma_o g / N)`; zero for infinite training.
pub fn estimation_error_variance(t_t: f64, gamma_o: f64, g: f64, n: usize) -> f64 {
    debug_assert!(t_t >= 0.0 && g > 0.0 && n >= 1);
    if t_t.is_infinite() {
        return 0.0;
    }
    1.0 / (1.0 + t_t * gamma_o * g / n as f64)
}

/// Normalized threshold `theta D_r^alpha / (1 - beta2_oo)`.
pub fn eta(theta: f64, d_r: f64, alpha: f64, beta2_oo: f64) -> Result<f64> {
    if beta2_oo >= 1.0 {
        return Err(Error::DegenerateCsi);
    }
    Ok(theta * d_r.powf(alpha) / (1.0 - beta2_oo))
}

/// Threshold written with the training fraction `delta = T_t f_d`.
pub fn eta_from_fraction(theta: f64, d_r: f64, alpha: f64, gamma_o: f64, n: usize, delta: f64, f_d: f64) -> f64 {
    let a = d_r.powf(alpha);
    theta * a * (gamma_o * delta + n as f64 * a * f_d) / (gamma_o * delta)
}

/// `pi Gamma(N + 2/alpha) Gamma(1 - 2/alpha) / Gamma(N)`.
pub fn interference_constant(n: usize, alpha: f64) -> f64 {
    let d = 2.0 / alpha;
    std::f64::consts::PI * gamma(n as f64 + d) * gamma(1.0 - d) / gamma(n as f64)
}

/// Average cluster-center distance `0.5 lambda^exponent`.
pub fn cluster_distance(lambda_p: f64, exponent: f64) -> f64 {
    0.5 * lambda_p.powf(exponent)
}

/// Density that yields a given cluster distance under `D_c = 0.5 lambda^exponent`.
pub fn density_for_cluster_distance(d_c: f64, exponent: f64) -> f64 {
    (d_c / 0.5).powf(1.0 / exponent)
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::BadParameter { name, value, reason: "must be positive and finite" })
    }
}

/// Training interval admissible for a scheme: `[KN, T - K^2 N]` for IA and
/// `[N, T]` for SM.
pub fn training_bounds(p: &SystemParams, scheme: Scheme) -> (f64, f64) {
    let (k, n) = (p.k as f64, p.n as f64);
    match scheme {
        Scheme::Ia => (k * n, p.t_block - k * k * n),
        Scheme::Sm => (n, p.t_block),
    }
}

/// Validates for IA.
pub fn validate(params: SystemParams) -> Result<ValidatedParams> {
    validate_for(params, Scheme::Ia)
}

pub fn validate_for(params: SystemParams, scheme: Scheme) -> Result<ValidatedParams> {
    let p = &params;
    if p.k < 2 {
        return Err(Error::BadParameter { name: "K", value: p.k as f64, reason: "need at least 2 transmitters per cluster" });
    }
    if p.n < 1 {
        return Err(Error::BadParameter { name: "N", value: p.n as f64, reason: "need at least one antenna" });
    }
    if p.ns < 1 || p.ns > p.n {
        return Err(Error::BadParameter { name: "Ns", value: p.ns as f64, reason: "need 1 <= Ns <= N" });
    }
    let slack = p.feasibility_slack();
    if slack < 0 {
        return Err(Error::InfeasibleIa { k: p.k, n: p.n, ns: p.ns, slack });
    }
    if !(p.alpha > 2.0) || !p.alpha.is_finite() {
        return Err(Error::BadPathloss(p.alpha));
    }
    check_positive("gamma_o", p.gamma_o)?;
    check_positive("N_o", p.n_o)?;
    check_positive("R", p.r)?;
    check_positive("D_r", p.d_r)?;
    check_positive("theta", p.theta)?;
    check_positive("T", p.t_block)?;
    if !(p.lambda_p_parent >= 0.0) || !p.lambda_p_parent.is_finite() {
        return Err(Error::BadParameter { name: "lambda_p_parent", value: p.lambda_p_parent, reason: "must be finite and non-negative" });
    }
    if !(0.0..=1.0).contains(&p.p_a) {
        return Err(Error::BadProbability { name: "P_A", value: p.p_a });
    }
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err(Error::BadProbability { name: "epsilon", value: p.epsilon });
    }
    if !(p.dc_exponent < 0.0) {
        return Err(Error::BadParameter { name: "dc_exponent", value: p.dc_exponent, reason: "must be negative" });
    }
    if !p.perfect_csi() {
        let (lo, hi) = training_bounds(p, scheme);
        if !(p.t_t >= lo && p.t_t <= hi) {
            return Err(Error::BadTraining { tt: p.t_t, lo, hi });
        }
    }

    let derived = derive(p)?;
    Ok(ValidatedParams { params, derived, scheme })
}

/// Computes derived quantities without checking invariants.
pub fn derive(p: &SystemParams) -> Result<DerivedQuantities> {
    let g_oo = p.d_r.powf(-p.alpha);
    let beta2_oo = estimation_error_variance(p.t_t, p.gamma_o, g_oo, p.n);
    let eta = eta(p.theta, p.d_r, p.alpha, beta2_oo)?;
    let lambda_p = p.lambda_p();
    Ok(DerivedQuantities {
        lambda_p,
        t_f: (p.k * p.k * p.n) as f64,
        g_oo,
        beta2_oo,
        eta,
        theta_tilde: p.theta / (1.0 - beta2_oo),
        n_o_tilde: p.n_o + p.power() * g_oo * beta2_oo,
        j: interference_constant(p.n, p.alpha),
        d_c: cluster_distance(lambda_p, p.dc_exponent),
        slack: p.feasibility_slack(),
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// K=3, N=2, Ns=1, gamma_o = 30 dB, D_c = 1 layout.
    pub fn fig3() -> SystemParams {
        SystemParams::reference(1.0)
    }
}
