use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ianet_cli::{figure_preset, load_spec, run_spec, CliError, ExperimentSpec};
use ianet_core::montecarlo::{resolve_workers, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "ianet", version, about = "Outage, training and capacity sweeps for clustered IA networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point of a spec file.
    Run {
        spec: PathBuf,
        /// Output directory (overrides the spec).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Run a figure preset (fig2 to fig6).
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        /// Print the resolved spec instead of running it.
        #[arg(long)]
        print_spec: bool,
    },
    /// Check a spec file without computing anything.
    Validate { spec: PathBuf },
}

fn execute(spec: &ExperimentSpec, out: Option<PathBuf>, workers: Option<usize>) -> Result<(), CliError> {
    let dir = out.unwrap_or_else(|| spec.output.dir.clone());
    let workers = resolve_workers(workers);
    let summary = run_spec(spec, &dir, workers)?;
    println!("{} points written to {}", summary.points, dir.display());
    println!("manifest: {}", summary.manifest.display());
    Ok(())
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { spec, out, workers } => execute(&load_spec(&spec)?, out, workers),
        Command::Preset { name, out, trials, seed, workers, print_spec } => {
            let mut spec = figure_preset(&name)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = seed {
                spec.seed_root = s;
            }
            if print_spec {
                print!("{}", spec.to_toml());
                return Ok(());
            }
            execute(&spec, out, workers)
        }
        Command::Validate { spec } => {
            let spec = load_spec(&spec)?;
            let points = spec.points()?;
            println!("{}: {} sweep points valid (digest {})", spec.name, points.len(), spec.digest());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
