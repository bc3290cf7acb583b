//! Ingest, describe, and threshold calibration.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use replyscope_core::corpus::parse::{write_corpus_file, IngestReport};
use replyscope_core::corpus::views::{describe, CorpusSummary};
use replyscope_core::corpus::Dimension;
use replyscope_core::error::{CoreError, Result};
use replyscope_core::matching::threshold_for;

use crate::config::RunConfig;
use crate::manifest::RunManifest;

use super::{load_corpus, out_file};

/// Parses the corpus under the configured strictness and writes the
/// canonical form plus an ingest report.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestReport> {
    cfg.validate(true)?;
    let (corpus, report) = load_corpus(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    write_corpus_file(&corpus, &out_file(cfg, "corpus_clean.jsonl"))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(out_file(cfg, "ingest_report.json"), text + "\n")?;
    RunManifest::build("ingest", cfg, &[])?.write(&cfg.out)?;
    Ok(report)
}

/// Corpus summary statistics, written to describe.json.
pub fn cmd_describe(cfg: &RunConfig) -> Result<CorpusSummary> {
    cfg.validate(true)?;
    let (corpus, _) = load_corpus(cfg)?;
    let summary = describe(&corpus);
    std::fs::create_dir_all(&cfg.out)?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(out_file(cfg, "describe.json"), text + "\n")?;
    RunManifest::build("describe", cfg, &[])?.write(&cfg.out)?;
    Ok(summary)
}

/// One manually labeled example: a classifier score and the human call.
#[derive(Debug, Deserialize)]
struct LabeledScore {
    dimension: Dimension,
    score: f64,
    label: bool,
}

/// Reads labeled scores (JSONL) and picks per-dimension treatment
/// thresholds, written to thresholds.json.
pub fn cmd_calibrate(cfg: &RunConfig, labels_path: &Path) -> Result<BTreeMap<Dimension, f64>> {
    cfg.validate(false)?;
    if !labels_path.is_file() {
        return Err(CoreError::Config(format!(
            "labels file {} does not exist",
            labels_path.display()
        )));
    }
    let file = std::fs::File::open(labels_path)?;
    let mut by_dim: BTreeMap<Dimension, (Vec<f64>, Vec<bool>)> = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: LabeledScore = serde_json::from_str(&line).map_err(|e| CoreError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        let entry = by_dim.entry(row.dimension).or_default();
        entry.0.push(row.score);
        entry.1.push(row.label);
    }
    if by_dim.is_empty() {
        return Err(CoreError::insufficient("labeled examples", 1, 0));
    }
    let mut thresholds = BTreeMap::new();
    for (dim, (scores, labels)) in &by_dim {
        thresholds.insert(*dim, threshold_for(*dim, scores, labels)?);
    }
    std::fs::create_dir_all(&cfg.out)?;
    let text = serde_json::to_string_pretty(&thresholds).expect("thresholds serialize");
    std::fs::write(out_file(cfg, "thresholds.json"), text + "\n")?;
    RunManifest::build("calibrate", cfg, &[labels_path])?.write(&cfg.out)?;
    Ok(thresholds)
}
