//! Output artifacts: CSV tables with a commented parameter echo, and the
//! JSON run summary written alongside them.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use srs_core::{PulseMetrics, StepRecord};

use crate::config::{io_error, AppError, RunConfig};

/// Artifact version stamped into every header; follows the crate version.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full-precision float formatting for CSV cells: 17 significant digits,
/// enough to round-trip f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table: commented header lines, one column row, then data rows.
pub struct Table {
    pub title: String,
    pub echo: Vec<(&'static str, String)>,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.title));
        out.push_str(&format!("# version: {ARTIFACT_VERSION}\n"));
        for (key, value) in &self.echo {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.columns.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Write to the given path, or to stdout when no path is set.
    pub fn write(&self, path: Option<&Path>) -> Result<(), AppError> {
        let text = self.render();
        match path {
            Some(path) => {
                std::fs::write(path, text).map_err(|e| io_error(path, e))
            }
            None => {
                std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| AppError::Compute(format!("stdout: {e}")))
            }
        }
    }
}

/// Per-photon rows for an evolution run. `stderr_if_mc` stays empty outside
/// trajectory sampling; `P_stokes` is the probability that the photon exits
/// Stokes-polarized, whichever spin it entered with.
pub fn step_rows(steps: &[StepRecord], stokes_exit: &[f64]) -> Vec<Vec<String>> {
    steps
        .iter()
        .zip(stokes_exit)
        .enumerate()
        .map(|(i, (step, p_stokes))| {
            vec![
                (i + 1).to_string(),
                fmt_float(step.p_elastic),
                fmt_float(*p_stokes),
                step.stokes_stderr.map(fmt_float).unwrap_or_default(),
                fmt_float(step.mean_excitation),
                fmt_float(step.sector_entropy),
            ]
        })
        .collect()
}

pub const STEP_COLUMNS: &[&str] = &[
    "n",
    "P_elastic",
    "P_stokes",
    "stderr_if_mc",
    "mean_excitation",
    "sector_entropy",
];

/// Echoed parameters in the JSON summary, matching the CSV header echo.
#[derive(Serialize)]
pub struct ParamsEcho {
    pub mode: String,
    pub atoms: usize,
    pub coupling: f64,
    pub photons: usize,
    pub pattern: String,
    pub initial: String,
    pub trials: u64,
    pub seed: u64,
    pub prune_eps: f64,
    pub gamma: Option<f64>,
    pub flux: Option<f64>,
}

impl ParamsEcho {
    pub fn new(cfg: &RunConfig, atoms: usize, photons: usize) -> Self {
        Self {
            mode: cfg.mode.to_string(),
            atoms,
            coupling: cfg.coupling,
            photons,
            pattern: cfg.pattern.clone(),
            initial: cfg.initial.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
            prune_eps: cfg.prune_eps,
            gamma: cfg.gamma,
            flux: cfg.flux,
        }
    }
}

#[derive(Serialize)]
pub struct Totals {
    pub photons: usize,
    pub total_stokes_weight: f64,
    pub mean_stokes_probability: f64,
    pub peak_stokes_probability: f64,
    pub final_mean_excitation: f64,
    pub final_sector_entropy: f64,
}

#[derive(Serialize)]
pub struct Summary {
    pub version: &'static str,
    pub command: &'static str,
    pub params: ParamsEcho,
    pub totals: Totals,
    pub pulse: Option<PulseMetrics>,
}

/// Serialize any summary value as pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(value: &T) -> Result<String, AppError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Compute(format!("summary serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// The JSON summary path that accompanies a CSV path.
pub fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write the JSON summary next to the CSV. Streamed (stdout) runs get the
/// CSV only, so the stream stays machine-parseable as one format.
pub fn write_json<T: Serialize>(
    value: &T,
    csv_path: Option<&Path>,
) -> Result<(), AppError> {
    let Some(csv) = csv_path else {
        return Ok(());
    };
    let path = summary_path(csv);
    std::fs::write(&path, render_json(value)?).map_err(|e| io_error(&path, e))
}
