//! Run configuration: one JSON file, overridable by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use replyscope_core::corpus::parse::Strictness;
use replyscope_core::corpus::{Dimension, Measure};
use replyscope_core::error::{CoreError, Result};
use replyscope_core::matching::ANGER_THRESHOLD;

/// Everything a run needs. Field order is the canonical serialization
/// order, which the manifest hashes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Corpus JSONL; required by every command that reads data.
    pub corpus: Option<PathBuf>,
    pub out: PathBuf,
    /// Inclusive analysis span for daily aggregation.
    pub span_start: NaiveDate,
    pub span_end: NaiveDate,
    /// First day of the middle period.
    pub rg_start: NaiveDate,
    /// First day of the late period.
    pub ri_start: NaiveDate,
    /// Treatment/predictor dimensions for micro, meso, and macro runs.
    pub predictors: Vec<Dimension>,
    pub outcomes: Vec<Measure>,
    /// Per-dimension treatment thresholds; anything absent falls back to
    /// 0.5 (anger to its calibrated 0.95).
    pub thresholds: BTreeMap<Dimension, f64>,
    /// Per-dimension classifier confusion matrices (JSON files with
    /// tp/fp/fn/tn counts). Dimensions without an entry are treated as
    /// cleanly classified.
    pub confusion: BTreeMap<Dimension, PathBuf>,
    /// Lag-selection grid bounds.
    pub max_p: usize,
    pub max_q: usize,
    pub min_tree_size: usize,
    /// Bootstrap replicates for micro confidence intervals.
    pub bootstrap: usize,
    pub seed: u64,
    pub strictness: Strictness,
}

fn date(s: &str) -> NaiveDate {
    s.parse().expect("literal date")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            out: PathBuf::from("out"),
            span_start: date("2015-01-01"),
            span_end: date("2018-12-31"),
            rg_start: date("2017-01-01"),
            ri_start: date("2018-05-01"),
            predictors: default_predictors(),
            outcomes: vec![
                Measure::Score(Dimension::Hate),
                Measure::Score(Dimension::Toxicity),
                Measure::ExtremitySpeech,
            ],
            thresholds: BTreeMap::new(),
            confusion: BTreeMap::new(),
            max_p: 2,
            max_q: 2,
            min_tree_size: 50,
            bootstrap: 1000,
            seed: 0,
            strictness: Strictness::Strict,
        }
    }
}

/// Discourse dimensions modeled by default: strategies without the
/// leave-fact prompt (it tracks exclusionary statements too closely to
/// separate), group attacks, both goal framings, four negative and two
/// combined positive emotions.
pub fn default_predictors() -> Vec<Dimension> {
    vec![
        Dimension::StrategyOpinion,
        Dimension::StrategyConstructive,
        Dimension::StrategySarcasm,
        Dimension::GroupOut,
        Dimension::GoalExclusionary,
        Dimension::GoalInclusionary,
        Dimension::Anger,
        Dimension::Fear,
        Dimension::Disgust,
        Dimension::Sadness,
        Dimension::EnthusiasmHope,
        Dimension::JoyPride,
    ]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))
    }

    /// Treatment threshold for a dimension.
    pub fn threshold(&self, d: Dimension) -> f64 {
        if let Some(&t) = self.thresholds.get(&d) {
            t
        } else if d == Dimension::Anger {
            ANGER_THRESHOLD
        } else {
            0.5
        }
    }

    /// The corpus path, or a validation error if none was given.
    pub fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CoreError::Config("no corpus path configured".into()))
    }

    /// Checks internal consistency and that every referenced file
    /// exists. `needs_corpus` is set by commands that read data.
    pub fn validate(&self, needs_corpus: bool) -> Result<()> {
        if self.span_start > self.span_end {
            return Err(CoreError::Config(format!(
                "span {}..{} is empty",
                self.span_start, self.span_end
            )));
        }
        if self.rg_start >= self.ri_start {
            return Err(CoreError::Config(format!(
                "period boundaries out of order: {} must precede {}",
                self.rg_start, self.ri_start
            )));
        }
        if self.predictors.is_empty() {
            return Err(CoreError::Config("empty predictor set".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.predictors {
            if !seen.insert(d) {
                return Err(CoreError::Config(format!("duplicate predictor {d}")));
            }
        }
        if self.outcomes.is_empty() {
            return Err(CoreError::Config("empty outcome set".into()));
        }
        for (d, t) in &self.thresholds {
            if !t.is_finite() || *t <= 0.0 || *t >= 1.0 {
                return Err(CoreError::Config(format!(
                    "threshold {t} for {d} outside (0, 1)"
                )));
            }
        }
        if self.max_p < 1 {
            return Err(CoreError::Config("lag grid needs max_p >= 1".into()));
        }
        if self.min_tree_size < 3 {
            return Err(CoreError::Config(format!(
                "minimum tree size {} below 3",
                self.min_tree_size
            )));
        }
        if needs_corpus {
            let path = self.corpus_path()?;
            if !path.is_file() {
                return Err(CoreError::Config(format!(
                    "corpus file {} does not exist",
                    path.display()
                )));
            }
        }
        for (d, path) in &self.confusion {
            if !path.is_file() {
                return Err(CoreError::Config(format!(
                    "confusion matrix for {d} missing: {}",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_internally_consistent() {
        let cfg = RunConfig::default();
        cfg.validate(false).unwrap();
        assert!(!cfg.predictors.contains(&Dimension::StrategyLeaveFact));
        assert_eq!(cfg.predictors.len(), 12);
        assert_eq!(cfg.threshold(Dimension::Hate), 0.5);
        assert_eq!(cfg.threshold(Dimension::Anger), ANGER_THRESHOLD);
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut cfg = RunConfig::default();
        cfg.corpus = Some(PathBuf::from("/tmp/c.jsonl"));
        cfg.thresholds.insert(Dimension::Hate, 0.6);
        cfg.outcomes = vec![Measure::ExtremitySpeech];
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_fields_and_bad_values_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>("{\"bootstrap\": 500, \"typo\": 1}").is_err());

        let mut cfg = RunConfig::default();
        cfg.rg_start = date("2018-06-01");
        assert!(matches!(cfg.validate(false), Err(CoreError::Config(_))));

        let mut cfg = RunConfig::default();
        cfg.thresholds.insert(Dimension::Fear, 1.2);
        assert!(matches!(cfg.validate(false), Err(CoreError::Config(_))));

        let mut cfg = RunConfig::default();
        cfg.predictors.push(Dimension::Anger);
        assert!(matches!(cfg.validate(false), Err(CoreError::Config(_))));
    }

    #[test]
    fn referenced_paths_must_exist() {
        let mut cfg = RunConfig::default();
        cfg.corpus = Some(PathBuf::from("/definitely/not/here.jsonl"));
        assert!(matches!(cfg.validate(true), Err(CoreError::Config(_))));

        let dir = tempfile::tempdir().unwrap();
        let corpus = dir.path().join("c.jsonl");
        std::fs::write(&corpus, "").unwrap();
        cfg.corpus = Some(corpus);
        cfg.validate(true).unwrap();

        cfg.confusion
            .insert(Dimension::Hate, dir.path().join("cm.json"));
        assert!(matches!(cfg.validate(true), Err(CoreError::Config(_))));
    }
}
