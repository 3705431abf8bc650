//! Batch front end: experiment specs, figure presets, sweeps and
//! structured output.

pub mod output;
pub mod presets;
pub mod run;
pub mod spec;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use presets::figure_preset;
pub use spec::ExperimentSpec;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("unknown preset `{0}` (known: fig2, fig3, fig4, fig5, fig6)")]
    UnknownPreset(String),
    #[error("{output} failed at {point}: {source}")]
    Computation {
        point: String,
        output: &'static str,
        #[source]
        source: ianet_core::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidSpec(_) | CliError::UnknownPreset(_) => 2,
            CliError::Computation { .. } | CliError::Io(_) => 3,
        }
    }
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::InvalidSpec(format!("{}: {e}", path.display())))?;
    ExperimentSpec::parse(&text)
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub points: usize,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

/// Validates every sweep point, then computes and writes all outputs.
pub fn run_spec(spec: &ExperimentSpec, dir: &Path, workers: usize) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let points = spec.points()?;
    log::info!("{}: {} sweep points, {} workers", spec.name, points.len(), workers);
    let tables = run::execute(spec, &points, workers)?;
    let files = output::write_tables(spec, dir, &tables)?;
    let manifest = output::write_manifest(spec, dir, &files, points.len(), workers, start.elapsed().as_secs_f64())?;
    Ok(RunSummary { points: points.len(), files, manifest })
}
