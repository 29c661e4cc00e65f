//! Files written into a run directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rnls_core::io::write_field;
use rnls_core::solver::{ConvergenceRecord, SolveResult};
use rnls_core::Field;

use crate::CliError;

pub const SUMMARY: &str = "summary.json";
pub const HISTORY: &str = "history.csv";
pub const FIELD: &str = "field.bin";
pub const DENSITY: &str = "density.csv";

pub fn ensure_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_history(path: &Path, history: &[ConvergenceRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["iteration", "objective", "residual", "difference", "step", "elapsed"])
        .map_err(|e| csv_error(path, e))?;
    for r in history {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.17e}", r.objective),
            format!("{:.6e}", r.residual),
            format!("{:.6e}", r.difference),
            format!("{:.6e}", r.step),
            format!("{:.6}", r.elapsed),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// One row per sample: coordinates, then `|phi|^2`.
pub fn write_density(path: &Path, field: &Field) -> Result<(), CliError> {
    let grid = field.grid();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let names = ["x", "y", "z"];
    let mut header: Vec<&str> = names[..grid.dim()].to_vec();
    header.push("density");
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, v) in field.values().iter().enumerate() {
        let mut row: Vec<String> = (0..grid.dim()).map(|a| grid.coords(a)[i].to_string()).collect();
        row.push(format!("{:.12e}", v.norm_sqr()));
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub struct Emit {
    pub summary: bool,
    pub history: bool,
    pub fields: bool,
    pub density: bool,
}

/// Writes the per-run artifacts; the summary itself is written by the caller.
pub fn write_run(dir: &Path, result: &SolveResult, emit: &Emit) -> Result<(), CliError> {
    if emit.history {
        write_history(&dir.join(HISTORY), &result.history)?;
    }
    if emit.fields {
        write_field(&result.state, dir.join(FIELD))
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.join(FIELD).display())))?;
    }
    if emit.density {
        write_density(&dir.join(DENSITY), &result.state)?;
    }
    Ok(())
}
