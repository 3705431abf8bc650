//! Sweep execution and table assembly.

use std::collections::BTreeMap;

use ianet_core::analytic::{laplace_inter, laplace_inter_bound, laplace_intra, laplace_intra_bound, success_prob_ia, success_prob_ia_bound, success_prob_sm, Csi, IntraMode};
use ianet_core::capacity::{transmission_capacity, CapacityResult};
use ianet_core::montecarlo::{estimate_success_grid, McOptions};
use ianet_core::params::{derive, Scheme, SystemParams};
use ianet_core::rng::mix64;
use ianet_core::trainopt::{optimize_training_numeric, optimize_training_taylor, TaylorScheme, TrainingSolution};
use ianet_core::Error;
use rayon::prelude::*;

use crate::spec::{ExperimentSpec, OutputKind, Point};
use crate::CliError;

/// Column names and rows of one output, cells already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: OutputKind,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub const PARAM_COLUMNS: [&str; 17] =
    ["k", "n", "ns", "alpha", "gamma_o", "gamma_o_db", "n_o", "lambda_p", "d_c", "p_a", "r", "d_r", "t_block", "t_t", "theta", "theta_db", "epsilon"];

pub fn result_columns(kind: OutputKind) -> Vec<String> {
    let fixed: &[&str] = match kind {
        OutputKind::SuccessIa => &["p_s", "method", "config_digest"],
        OutputKind::SuccessSm => &["p_s", "csi", "method", "config_digest"],
        OutputKind::Bounds => &["s", "laplace_inter", "laplace_inter_bound", "laplace_intra", "laplace_intra_bound", "p_s", "p_s_bound", "bound_status", "method", "bound_method"],
        OutputKind::Capacity => &[
            "training", "ia_lambda_eps", "ia_capacity", "ia_method", "ia_t_t_used", "ia_flagged", "sm_lambda_eps", "sm_capacity", "sm_method", "sm_t_t_used", "sm_flagged",
        ],
        OutputKind::Mc => &["ia_p_hat", "ia_ci_halfwidth", "ia_samples", "ia_excluded", "sm_p_hat", "sm_ci_halfwidth", "sm_samples", "seed", "method"],
        OutputKind::Trainopt => {
            let mut cols = Vec::new();
            for scheme in ["ia", "sm"] {
                for method in ["numeric", "taylor"] {
                    for field in ["t_t_opt", "delta_opt", "goodput", "clamped", "fallback"] {
                        cols.push(format!("{scheme}_{method}_{field}"));
                    }
                }
            }
            return cols;
        }
    };
    fixed.iter().map(|s| s.to_string()).collect()
}

pub fn header(kind: OutputKind) -> Vec<String> {
    PARAM_COLUMNS.iter().map(|s| s.to_string()).chain(result_columns(kind)).collect()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn param_cells(p: &SystemParams) -> Vec<String> {
    let d_c = derive(p).map(|d| d.d_c).unwrap_or(f64::NAN);
    [
        p.k as f64,
        p.n as f64,
        p.ns as f64,
        p.alpha,
        p.gamma_o,
        db(p.gamma_o),
        p.n_o,
        p.lambda_p(),
        d_c,
        p.p_a,
        p.r,
        p.d_r,
        p.t_block,
        p.t_t,
        p.theta,
        db(p.theta),
        p.epsilon,
    ]
    .iter()
    .map(|v| v.to_string())
    .collect()
}

fn computation(point: &Point, what: OutputKind, e: Error) -> CliError {
    CliError::Computation { point: point.label(), output: what.name(), source: e }
}

fn blanks(n: usize) -> Vec<String> {
    vec![String::new(); n]
}

fn solution_cells(s: &TrainingSolution) -> Vec<String> {
    vec![s.t_t_opt.to_string(), s.delta_opt.to_string(), s.goodput.to_string(), s.clamped.to_string(), s.fallback.to_string()]
}

fn capacity_cells(c: &CapacityResult) -> Vec<String> {
    vec![c.lambda_eps.to_string(), c.capacity.to_string(), c.method.to_string(), c.t_t_used.to_string(), c.flagged.to_string()]
}

/// Result cells of one analytic output at one point.
fn analytic_cells(kind: OutputKind, spec: &ExperimentSpec, point: &Point) -> Result<Vec<String>, CliError> {
    let p = &point.params;
    let fail = |e| computation(point, kind, e);
    Ok(match kind {
        OutputKind::SuccessIa => {
            let r = success_prob_ia(p.theta, p).map_err(fail)?;
            vec![r.value.to_string(), r.method.to_string(), r.config_digest]
        }
        OutputKind::SuccessSm => {
            let csi = if p.perfect_csi() { Csi::Perfect } else { Csi::Imperfect };
            let r = success_prob_sm(p.theta, p, csi);
            let csi = if p.perfect_csi() { "perfect" } else { "imperfect" };
            vec![r.value.to_string(), csi.to_string(), r.method.to_string(), r.config_digest]
        }
        OutputKind::Bounds => {
            let s = derive(p).map_err(fail)?.eta;
            let inter = laplace_inter(s, p).map_err(fail)?.value;
            let inter_bound = if p.k > 2 { laplace_inter_bound(s, p).map_err(fail)?.to_string() } else { String::new() };
            let intra = laplace_intra(s, p, IntraMode::Training).map_err(fail)?.value;
            let intra_bound = laplace_intra_bound(s, p).map_err(fail)?;
            let exact = success_prob_ia(p.theta, p).map_err(fail)?;
            let (bound, status, bound_method) = match success_prob_ia_bound(p.theta, p) {
                Ok(b) => (b.value.to_string(), "ok", b.method.to_string()),
                Err(Error::ConditionViolated { .. }) => (String::new(), "condition_violated", String::new()),
                Err(e) => return Err(fail(e)),
            };
            vec![
                s.to_string(),
                inter.to_string(),
                inter_bound,
                intra.to_string(),
                intra_bound.to_string(),
                exact.value.to_string(),
                bound,
                status.to_string(),
                exact.method.to_string(),
                bound_method,
            ]
        }
        OutputKind::Trainopt => {
            let mut cells = Vec::new();
            for (scheme, taylor) in [(Scheme::Ia, TaylorScheme::Ia), (Scheme::Sm, TaylorScheme::Sm)] {
                cells.extend(solution_cells(&optimize_training_numeric(p, scheme).map_err(fail)?));
                if scheme == Scheme::Ia && p.ns != 1 {
                    // no closed-form expansion for several streams
                    cells.extend(blanks(5));
                } else {
                    cells.extend(solution_cells(&optimize_training_taylor(p, taylor).map_err(fail)?));
                }
            }
            cells
        }
        OutputKind::Capacity => {
            let mut cells = vec![format!("{:?}", spec.training).to_lowercase()];
            for scheme in [Scheme::Ia, Scheme::Sm] {
                cells.extend(capacity_cells(&transmission_capacity(p.epsilon, p, scheme, spec.training).map_err(fail)?));
            }
            cells
        }
        OutputKind::Mc => unreachable!("Monte Carlo runs per threshold group"),
    })
}

/// Seed of a threshold group: independent of sweep order and worker count.
fn group_seed(seed_root: u64, p: &SystemParams) -> u64 {
    let d = u64::from_str_radix(&p.with_theta(1.0).digest()[..16], 16).expect("hex digest");
    mix64(seed_root ^ d)
}

/// Monte Carlo cells for every point; points differing only in `theta`
/// share one set of samples.
fn mc_cells(spec: &ExperimentSpec, points: &[Point], workers: usize) -> Result<Vec<Vec<String>>, CliError> {
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, pt) in points.iter().enumerate() {
        groups.entry(pt.params.with_theta(1.0).digest()).or_default().push(i);
    }
    let mut order: Vec<Vec<usize>> = groups.into_values().collect();
    order.sort_by_key(|g| g[0]);
    let opts = McOptions { workers: Some(workers), ..Default::default() };
    let mut out = vec![Vec::new(); points.len()];
    for group in order {
        let first = &points[group[0]];
        let base = &first.params;
        let thetas: Vec<f64> = group.iter().map(|&i| points[i].params.theta).collect();
        let seed = group_seed(spec.seed_root, base);
        log::info!("Monte Carlo for {} ({} thresholds)", first.label(), thetas.len());
        let ia = estimate_success_grid(base, Scheme::Ia, &thetas, spec.trials, seed, &opts).map_err(|e| computation(first, OutputKind::Mc, e))?;
        let sm = estimate_success_grid(base, Scheme::Sm, &thetas, spec.trials, seed, &opts).map_err(|e| computation(first, OutputKind::Mc, e))?;
        for (j, &i) in group.iter().enumerate() {
            out[i] = vec![
                ia[j].p_hat.to_string(),
                ia[j].ci_halfwidth.to_string(),
                ia[j].trials.to_string(),
                ia[j].excluded.to_string(),
                sm[j].p_hat.to_string(),
                sm[j].ci_halfwidth.to_string(),
                sm[j].trials.to_string(),
                seed.to_string(),
                "monte_carlo".to_string(),
            ];
        }
    }
    Ok(out)
}

/// Computes every requested output. Rows follow the sweep order whatever the
/// completion order.
pub fn execute(spec: &ExperimentSpec, points: &[Point], workers: usize) -> Result<Vec<Table>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    let mut tables = Vec::new();
    for &kind in &spec.outputs {
        let cells = if kind == OutputKind::Mc {
            mc_cells(spec, points, workers)?
        } else {
            pool.install(|| {
                points
                    .par_iter()
                    .map(|pt| {
                        log::debug!("{} {}", kind.name(), pt.label());
                        analytic_cells(kind, spec, pt)
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?
        };
        let rows = points.iter().zip(cells).map(|(pt, c)| param_cells(&pt.params).into_iter().chain(c).collect()).collect();
        tables.push(Table { kind, header: header(kind), rows });
    }
    Ok(tables)
}
