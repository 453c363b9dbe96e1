//! CSV and manifest writers. Every file is written in one pass by a single
//! caller.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::studies::{ActionSpaceRow, ACTION_SPACE_HEADER};
use super::{ResultRow, RESULTS_HEADER};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::network::trace;
use crate::network::{AoiSnapshot, StepOutcome};
use crate::vppo::{IterationLog, TRAINING_LOG_HEADER};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_lines<'a>(
    path: &Path,
    header: &str,
    rows: impl Iterator<Item = String> + 'a,
) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    write_lines(path, RESULTS_HEADER, rows.iter().map(ResultRow::csv_row))
}

pub fn write_training_log(path: &Path, log: &[IterationLog]) -> Result<()> {
    write_lines(
        path,
        TRAINING_LOG_HEADER,
        log.iter().map(IterationLog::csv_row),
    )
}

pub fn write_action_space(path: &Path, rows: &[ActionSpaceRow]) -> Result<()> {
    write_lines(
        path,
        ACTION_SPACE_HEADER,
        rows.iter().map(ActionSpaceRow::csv_row),
    )
}

pub fn write_trace(path: &Path, steps: &[(AoiSnapshot, StepOutcome)]) -> Result<()> {
    let mut out = create(path)?;
    trace::write_trace(&mut out, steps)?;
    out.flush()?;
    Ok(())
}

/// Machine-readable record of a run: resolved scenario, seeds and the
/// files produced.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config_path: Option<PathBuf>,
    pub mode: String,
    pub scenario: ScenarioConfig,
    pub scheduler: Option<String>,
    pub seeds: Vec<u64>,
    pub train_seed: Option<u64>,
    pub eval_episodes: Option<usize>,
    pub extra: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, manifest)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
