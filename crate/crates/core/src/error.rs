use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infeasible IA configuration: 2N - (K+1)Ns = {slack} < 0 (K={k}, N={n}, Ns={ns})")]
    InfeasibleIa { k: usize, n: usize, ns: usize, slack: i64 },

    #[error("pathloss exponent must exceed 2, got {0}")]
    BadPathloss(f64),

    #[error("training period {tt} outside [{lo}, {hi}]")]
    BadTraining { tt: f64, lo: f64, hi: f64 },

    #[error("{name} = {value} is not a valid probability here")]
    BadProbability { name: &'static str, value: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    BadParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("direct-link estimation error variance is 1 (no training)")]
    DegenerateCsi,

    #[error("pathloss evaluated at zero distance")]
    SingularDistance,

    #[error("alternating minimization stalled at leakage {leakage:e} after {iterations} iterations")]
    NoConvergence { leakage: f64, iterations: usize },

    #[error("estimated direct channel is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("quadrature did not reach tolerance {target:e} (estimated error {estimate:e}) in {context}")]
    QuadratureFailure { context: &'static str, estimate: f64, target: f64 },

    #[error("{0}")]
    DomainError(&'static str),

    #[error("bound requires eta > (Ns-1)/e: eta = {eta}, Ns = {ns}")]
    ConditionViolated { eta: f64, ns: usize },

    #[error("no admissible positive maximizing root for coefficients ({c1}, {c2})")]
    NoAdmissibleRoot { c1: f64, c2: f64 },

    #[error("outage at zero density already exceeds epsilon ({outage} > {epsilon})")]
    NoBracket { outage: f64, epsilon: f64 },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
}

pub type Result<T> = std::result::Result<T, Error>;
