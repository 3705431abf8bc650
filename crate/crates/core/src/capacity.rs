//! Maximum cluster density under an outage constraint and the resulting
//! overhead-discounted transmission capacity.
//!
//! The inter-cluster transform is `exp(-lambda_p Phi(s))` with `Phi`
//! independent of the density, so `q(lambda_p) = epsilon` is solved exactly
//! by one division once the density-free factors are known.

use serde::{Deserialize, Serialize};

use crate::analytic::{direct_error_factor, inter_exponent, laplace_intra, sm_exponents, Csi, IntraMode};
use crate::error::{Error, Result};
use crate::params::{derive, Scheme, SystemParams};
use crate::trainopt::{optimize_training_numeric, optimize_training_taylor, TaylorScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    ExactNs1,
    BoundNsgt1,
    Sm,
}

impl std::fmt::Display for CapacityMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CapacityMethod::ExactNs1 => "exact_ns1",
            CapacityMethod::BoundNsgt1 => "bound_nsgt1",
            CapacityMethod::Sm => "sm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityResult {
    pub lambda_eps: f64,
    /// The constraint could not be met even without interferers; the density
    /// was floored at zero.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub lambda_eps: f64,
    pub capacity: f64,
    pub method: CapacityMethod,
    pub t_t_used: f64,
    pub flagged: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::BadProbability { name: "epsilon", value: epsilon })
    }
}

fn floored(numerator: f64, denominator: f64) -> DensityResult {
    if numerator <= 0.0 {
        return DensityResult { lambda_eps: 0.0, flagged: numerator < 0.0 };
    }
    DensityResult { lambda_eps: numerator / denominator, flagged: false }
}

/// `eta` at the parameter set's training period.
fn eta_hat(p: &SystemParams) -> Result<f64> {
    Ok(derive(p)?.eta)
}

/// Exact density for single-stream IA at the training period `p.t_t`.
pub fn max_density_ia_ns1(epsilon: f64, p: &SystemParams) -> Result<DensityResult> {
    check_epsilon(epsilon)?;
    if p.ns != 1 {
        return Err(Error::DomainError("exact inversion needs Ns = 1"));
    }
    let eta = eta_hat(p)?;
    let intra = laplace_intra(eta, p, IntraMode::Training)?.value;
    let num = -eta / p.gamma_o - (1.0 - epsilon).ln() + direct_error_factor(eta, p).ln() + intra.ln();
    let (phi, _) = inter_exponent(eta, p)?;
    Ok(floored(num, phi))
}

/// Upper bound on the density for multi-stream IA.
pub fn max_density_ia_bound(epsilon: f64, p: &SystemParams) -> Result<DensityResult> {
    check_epsilon(epsilon)?;
    let eta = eta_hat(p)?;
    let ns = p.ns;
    if eta <= (ns as f64 - 1.0) / std::f64::consts::E {
        return Err(Error::ConditionViolated { eta, ns });
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..ns {
        sum += term;
        term *= eta / (k + 1) as f64;
    }
    let intra = laplace_intra(eta, p, IntraMode::Training)?.value;
    let num = sum.ln() - eta * ns as f64 / p.gamma_o - (1.0 - epsilon).ln() + direct_error_factor(eta, p).ln() + intra.ln();
    let (phi, _) = inter_exponent(eta, p)?;
    Ok(floored(num, phi))
}

/// SM density from the closed-form success probability at `p.t_t`.
pub fn max_density_sm(epsilon: f64, p: &SystemParams) -> Result<DensityResult> {
    check_epsilon(epsilon)?;
    derive(p)?;
    let (interference, noise) = sm_exponents(p.theta, p, Csi::Imperfect);
    Ok(floored(-(1.0 - epsilon).ln() - noise, interference))
}

/// IA capacity `((T - K^2 N - T_t) / T) lambda_eps K (1 - epsilon)` at the
/// training period `p.t_t`.
pub fn transmission_capacity_ia(epsilon: f64, p: &SystemParams) -> Result<CapacityResult> {
    let (d, method) = if p.ns == 1 {
        (max_density_ia_ns1(epsilon, p)?, CapacityMethod::ExactNs1)
    } else {
        (max_density_ia_bound(epsilon, p)?, CapacityMethod::BoundNsgt1)
    };
    let data = ((p.t_block - (p.k * p.k * p.n) as f64 - p.t_t) / p.t_block).max(0.0);
    Ok(CapacityResult {
        lambda_eps: d.lambda_eps,
        capacity: data * d.lambda_eps * p.k as f64 * (1.0 - epsilon),
        method,
        t_t_used: p.t_t,
        flagged: d.flagged,
    })
}

/// SM capacity `((T - T_t) / T) N lambda_eps (1 - epsilon)` at `p.t_t`.
pub fn transmission_capacity_sm(epsilon: f64, p: &SystemParams) -> Result<CapacityResult> {
    let d = max_density_sm(epsilon, p)?;
    let data = ((p.t_block - p.t_t) / p.t_block).max(0.0);
    Ok(CapacityResult {
        lambda_eps: d.lambda_eps,
        capacity: data * p.n as f64 * d.lambda_eps * (1.0 - epsilon),
        method: CapacityMethod::Sm,
        t_t_used: p.t_t,
        flagged: d.flagged,
    })
}

/// How the training period fed into the inversion is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingChoice {
    /// Use `t_t` from the parameter set.
    Given,
    Numeric,
    Taylor,
}

/// Parameter set with the training period resolved for `scheme`.
pub fn with_resolved_training(p: &SystemParams, scheme: Scheme, choice: TrainingChoice) -> Result<SystemParams> {
    let t_t = match choice {
        TrainingChoice::Given => return Ok(p.clone()),
        TrainingChoice::Numeric => optimize_training_numeric(p, scheme)?.t_t_opt,
        TrainingChoice::Taylor => {
            let ts = match scheme {
                Scheme::Ia => TaylorScheme::Ia,
                Scheme::Sm => TaylorScheme::Sm,
            };
            optimize_training_taylor(p, ts)?.t_t_opt
        }
    };
    Ok(p.with_training(t_t))
}

pub fn transmission_capacity(epsilon: f64, p: &SystemParams, scheme: Scheme, choice: TrainingChoice) -> Result<CapacityResult> {
    let q = with_resolved_training(p, scheme, choice)?;
    match scheme {
        Scheme::Ia => transmission_capacity_ia(epsilon, &q),
        Scheme::Sm => transmission_capacity_sm(epsilon, &q),
    }
}
