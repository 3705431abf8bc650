//! CSV, JSON mirror and run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::run::Table;
use crate::spec::{ExperimentSpec, Format};
use crate::CliError;

pub fn csv_string(t: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header).map_err(csv_error)?;
    for row in &t.rows {
        w.write_record(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Typed cell: numbers and booleans keep their type, empty cells are null.
fn cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    if let Ok(b) = s.parse::<bool>() {
        return Value::Bool(b);
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => json!(x),
        _ => Value::String(s.to_string()),
    }
}

pub fn json_rows(t: &Table) -> Value {
    Value::Array(
        t.rows
            .iter()
            .map(|row| Value::Object(t.header.iter().zip(row).map(|(h, c)| (h.clone(), cell(c))).collect::<Map<_, _>>()))
            .collect(),
    )
}

/// Writes the tables and returns the files created.
pub fn write_tables(spec: &ExperimentSpec, dir: &Path, tables: &[Table]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in tables {
        let stem = format!("{}_{}", spec.name, t.kind.name());
        if matches!(spec.output.format, Format::Csv | Format::Both) {
            let path = dir.join(format!("{stem}.csv"));
            fs::write(&path, csv_string(t)?)?;
            files.push(path);
        }
        if matches!(spec.output.format, Format::Json | Format::Both) {
            let path = dir.join(format!("{stem}.json"));
            fs::write(&path, serde_json::to_string_pretty(&json_rows(t)).expect("json"))?;
            files.push(path);
        }
    }
    Ok(files)
}

pub fn write_manifest(spec: &ExperimentSpec, dir: &Path, files: &[PathBuf], points: usize, workers: usize, wall_time_s: f64) -> Result<PathBuf, CliError> {
    let names: Vec<String> = files.iter().filter_map(|f| f.file_name()).map(|f| f.to_string_lossy().into_owned()).collect();
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "spec_name": spec.name,
        "spec_digest": spec.digest(),
        "spec": spec.to_toml(),
        "points": points,
        "trials": spec.trials,
        "seed_root": spec.seed_root,
        "workers": workers,
        "wall_time_s": wall_time_s,
        "files": names,
    });
    let path = dir.join(format!("{}_manifest.json", spec.name));
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("json"))?;
    Ok(path)
}
