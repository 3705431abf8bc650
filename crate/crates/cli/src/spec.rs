//! Experiment description: base parameters, sweep axes and requested outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use ianet_core::capacity::TrainingChoice;
use ianet_core::params::{cluster_distance, density_for_cluster_distance, validate_for, Scheme, SystemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Scalar parameters that may appear in `[base]` or as a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    K,
    N,
    Ns,
    Alpha,
    GammaO,
    GammaODb,
    NO,
    LambdaP,
    DC,
    PA,
    R,
    DR,
    TBlock,
    TT,
    Theta,
    ThetaDb,
    Epsilon,
    DcExponent,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Param::K => "k",
            Param::N => "n",
            Param::Ns => "ns",
            Param::Alpha => "alpha",
            Param::GammaO => "gamma_o",
            Param::GammaODb => "gamma_o_db",
            Param::NO => "n_o",
            Param::LambdaP => "lambda_p",
            Param::DC => "d_c",
            Param::PA => "p_a",
            Param::R => "r",
            Param::DR => "d_r",
            Param::TBlock => "t_block",
            Param::TT => "t_t",
            Param::Theta => "theta",
            Param::ThetaDb => "theta_db",
            Param::Epsilon => "epsilon",
            Param::DcExponent => "dc_exponent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    SuccessIa,
    SuccessSm,
    Bounds,
    Trainopt,
    Capacity,
    Mc,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::SuccessIa => "success_ia",
            OutputKind::SuccessSm => "success_sm",
            OutputKind::Bounds => "bounds",
            OutputKind::Trainopt => "trainopt",
            OutputKind::Capacity => "capacity",
            OutputKind::Mc => "mc",
        }
    }

    fn schemes(self) -> &'static [Scheme] {
        match self {
            OutputKind::SuccessIa | OutputKind::Bounds => &[Scheme::Ia],
            OutputKind::SuccessSm => &[Scheme::Sm],
            OutputKind::Trainopt | OutputKind::Capacity | OutputKind::Mc => &[Scheme::Ia, Scheme::Sm],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_dir(), format: Format::Both }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: Param,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl SweepAxis {
    pub fn list(param: Param, values: &[f64]) -> Self {
        SweepAxis { param, values: Some(values.to_vec()), range: None }
    }

    pub fn range(param: Param, start: f64, stop: f64, step: f64) -> Self {
        SweepAxis { param, values: None, range: Some(Range { start, stop, step }) }
    }

    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let bad = |msg: String| CliError::InvalidSpec(format!("sweep axis {}: {msg}", self.param));
        match (&self.values, &self.range) {
            (Some(v), None) if !v.is_empty() => Ok(v.clone()),
            (Some(_), None) => Err(bad("empty value list".into())),
            (None, Some(r)) => {
                if !(r.step > 0.0) || !(r.stop >= r.start) || !r.start.is_finite() || !r.stop.is_finite() {
                    return Err(bad(format!("bad range {} to {} step {}", r.start, r.stop, r.step)));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize + 1;
                if n > 100_000 {
                    return Err(bad(format!("{n} points")));
                }
                Ok((0..n).map(|i| r.start + i as f64 * r.step).collect())
            }
            _ => Err(bad("give exactly one of `values` or `range`".into())),
        }
    }
}

fn default_trials() -> u64 {
    10_000
}

fn default_training() -> TrainingChoice {
    TrainingChoice::Given
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub outputs: Vec<OutputKind>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed_root: u64,
    /// Training period fed into the capacity inversion.
    #[serde(default = "default_training")]
    pub training: TrainingChoice,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub base: BTreeMap<Param, f64>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

/// One resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub assignment: Vec<(Param, f64)>,
    pub params: SystemParams,
}

impl Point {
    pub fn label(&self) -> String {
        if self.assignment.is_empty() {
            return format!("point {}", self.index);
        }
        let parts: Vec<String> = self.assignment.iter().map(|(p, v)| format!("{p}={v}")).collect();
        format!("point {} ({})", self.index, parts.join(", "))
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn count(values: &BTreeMap<Param, f64>, p: Param, default: usize) -> Result<usize, CliError> {
    match values.get(&p) {
        None => Ok(default),
        Some(&v) if v >= 0.0 && v.fract() == 0.0 && v < 1e6 => Ok(v as usize),
        Some(&v) => Err(CliError::InvalidSpec(format!("{p} must be a non-negative integer, got {v}"))),
    }
}

fn one_of(values: &BTreeMap<Param, f64>, a: Param, b: Param) -> Result<Option<(Param, f64)>, CliError> {
    match (values.get(&a), values.get(&b)) {
        (Some(_), Some(_)) => Err(CliError::InvalidSpec(format!("give only one of {a} and {b}"))),
        (Some(&v), None) => Ok(Some((a, v))),
        (None, Some(&v)) => Ok(Some((b, v))),
        (None, None) => Ok(None),
    }
}

/// Builds model parameters from scalar assignments.
///
/// Unset values follow the reference layout: K=3, N=2, Ns=1, alpha=4,
/// gamma_o=30 dB, N_o=1, P_A=1, D_c=1, R=D_c, D_r=R/5, T=1000, T_t=6,
/// theta=10 dB, epsilon=0.1.
pub fn resolve_params(values: &BTreeMap<Param, f64>) -> Result<SystemParams, CliError> {
    let get = |p: Param, default: f64| values.get(&p).copied().unwrap_or(default);
    let dc_exponent = get(Param::DcExponent, -0.5);
    let (lambda, d_c) = match one_of(values, Param::LambdaP, Param::DC)? {
        Some((Param::LambdaP, l)) => (l, cluster_distance(l, dc_exponent)),
        Some((_, d)) => (density_for_cluster_distance(d, dc_exponent), d),
        None => (density_for_cluster_distance(1.0, dc_exponent), 1.0),
    };
    let gamma_o = match one_of(values, Param::GammaO, Param::GammaODb)? {
        Some((Param::GammaO, g)) => g,
        Some((_, db)) => db_to_linear(db),
        None => 1000.0,
    };
    let theta = match one_of(values, Param::Theta, Param::ThetaDb)? {
        Some((Param::Theta, t)) => t,
        Some((_, db)) => db_to_linear(db),
        None => 10.0,
    };
    let r = get(Param::R, d_c);
    Ok(SystemParams {
        k: count(values, Param::K, 3)?,
        n: count(values, Param::N, 2)?,
        ns: count(values, Param::Ns, 1)?,
        alpha: get(Param::Alpha, 4.0),
        gamma_o,
        n_o: get(Param::NO, 1.0),
        lambda_p_parent: lambda,
        p_a: get(Param::PA, 1.0),
        r,
        d_r: get(Param::DR, r / 5.0),
        t_block: get(Param::TBlock, 1000.0),
        t_t: get(Param::TT, 6.0),
        theta,
        epsilon: get(Param::Epsilon, 0.1),
        dc_exponent,
    })
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::InvalidSpec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        let out = Sha256::digest(self.to_toml().as_bytes());
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        [Scheme::Ia, Scheme::Sm].into_iter().filter(|s| self.outputs.iter().any(|o| o.schemes().contains(s))).collect()
    }

    /// All sweep points in lexicographic axis order (first axis outermost),
    /// each validated for every scheme the outputs need.
    pub fn points(&self) -> Result<Vec<Point>, CliError> {
        if self.outputs.is_empty() {
            return Err(CliError::InvalidSpec("no outputs requested".into()));
        }
        if self.outputs.contains(&OutputKind::Mc) && self.trials < ianet_core::montecarlo::MIN_TRIALS {
            return Err(CliError::InvalidSpec(format!("trials must be at least {}", ianet_core::montecarlo::MIN_TRIALS)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.outputs {
            if !seen.insert(*o) {
                return Err(CliError::InvalidSpec(format!("output {} listed twice", o.name())));
            }
        }
        let mut axes = Vec::with_capacity(self.sweep.len());
        let mut names = std::collections::BTreeSet::new();
        for a in &self.sweep {
            if !names.insert(a.param) {
                return Err(CliError::InvalidSpec(format!("sweep axis {} listed twice", a.param)));
            }
            axes.push((a.param, a.points()?));
        }
        let total: usize = axes.iter().map(|(_, v)| v.len()).product();
        let schemes = self.schemes();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut assignment = vec![(Param::K, 0.0); axes.len()];
            for (j, (p, vals)) in axes.iter().enumerate().rev() {
                assignment[j] = (*p, vals[rem % vals.len()]);
                rem /= vals.len();
            }
            let mut values = self.base.clone();
            values.extend(assignment.iter().copied());
            let point = Point { index, assignment, params: SystemParams::reference(1.0) };
            let params = resolve_params(&values).map_err(|e| CliError::InvalidSpec(format!("{}: {e}", point.label())))?;
            for &scheme in &schemes {
                validate_for(params.clone(), scheme).map_err(|e| CliError::InvalidSpec(format!("{} ({scheme}): {e}", point.label())))?;
            }
            out.push(Point { params, ..point });
        }
        Ok(out)
    }
}
