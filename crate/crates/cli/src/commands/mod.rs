//! Command implementations. Each command validates the configuration,
//! does its work, writes fixed-name outputs plus a run manifest under
//! the configured output directory, and returns a summary the binary
//! prints (and tests inspect).

use std::path::{Path, PathBuf};

use replyscope_core::corpus::parse::{parse_corpus, IngestReport};
use replyscope_core::corpus::{Corpus, Measure};
use replyscope_core::error::{CoreError, Result};

use crate::config::RunConfig;

mod basics;
mod daily;
mod meso;
mod micro;
mod report;
mod simulate;

pub use basics::{cmd_calibrate, cmd_describe, cmd_ingest};
pub use daily::{cmd_macro, MacroRow};
pub use meso::{cmd_meso, MesoOutput};
pub use micro::{cmd_micro, EffectRow};
pub use report::cmd_report;
pub use simulate::{cmd_simulate, SimulateOpts};

/// Parses the configured corpus under the configured strictness.
pub fn load_corpus(cfg: &RunConfig) -> Result<(Corpus, IngestReport)> {
    parse_corpus(cfg.corpus_path()?, cfg.strictness)
}

// Outcome and predictor measures, outcomes first, without duplicates.
pub(crate) fn analysis_measures(cfg: &RunConfig) -> Vec<Measure> {
    let mut out: Vec<Measure> = Vec::new();
    for m in cfg
        .outcomes
        .iter()
        .copied()
        .chain(cfg.predictors.iter().map(|&d| Measure::Score(d)))
    {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

// Shortest round-trip decimal keeps CSV output deterministic; absent
// values become empty cells.
pub(crate) fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

pub(crate) fn opt_cell(v: Option<f64>) -> String {
    v.map(cell).unwrap_or_default()
}

// csv's error wraps an io error most of the time; anything else is a
// shape problem in what we asked it to write.
pub(crate) fn csv_error(path: &Path, e: csv::Error) -> CoreError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CoreError::Io(io),
        other => CoreError::Config(format!("{}: {other:?}", path.display())),
    }
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn out_file(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}
