//! The simulate command: writes a synthetic corpus with a planted,
//! confounded effect, plus the ground truth needed to judge recovery.
//! With nonzero error rates it also writes a measurement-degraded copy
//! of the corpus and the matching confusion counts.

use std::fs;

use replyscope_core::corpus::parse::write_corpus_file;
use replyscope_core::error::{CoreError, Result};
use replyscope_core::synth::{inject_classification_noise, simulate_corpus, CorpusSim, GroundTruth};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

use super::out_file;

/// Generator settings the command line exposes. Everything else
/// (dimension roles, threshold, outcome slope, noise sd) keeps the
/// library default.
#[derive(Debug, Clone)]
pub struct SimulateOpts {
    pub trees: usize,
    pub chain_min: usize,
    pub chain_max: usize,
    pub backgrounds: usize,
    pub background_len: usize,
    pub days: usize,
    pub base_rate: f64,
    pub confounding: f64,
    pub att: f64,
    /// Score false positive rate to inject; zero leaves scores exact.
    pub fpr: f64,
    pub fnr: f64,
}

impl Default for SimulateOpts {
    fn default() -> Self {
        let sim = CorpusSim::default();
        SimulateOpts {
            trees: sim.n_chain_trees,
            chain_min: sim.chain_len.0,
            chain_max: sim.chain_len.1,
            backgrounds: sim.n_background_trees,
            background_len: sim.background_len,
            days: sim.days,
            base_rate: sim.base_rate,
            confounding: sim.confounding,
            att: sim.att,
            fpr: 0.0,
            fnr: 0.0,
        }
    }
}

/// Generates the corpus under the configured seed and writes
/// corpus.jsonl and truth.json, plus corpus_noisy.jsonl and
/// confusion.json when an error rate is requested.
pub fn cmd_simulate(cfg: &RunConfig, opts: &SimulateOpts) -> Result<GroundTruth> {
    cfg.validate(false)?;
    let sim = CorpusSim {
        seed: cfg.seed,
        n_chain_trees: opts.trees,
        chain_len: (opts.chain_min, opts.chain_max),
        n_background_trees: opts.backgrounds,
        background_len: opts.background_len,
        days: opts.days,
        base_rate: opts.base_rate,
        confounding: opts.confounding,
        att: opts.att,
        ..CorpusSim::default()
    };
    let (corpus, truth) = simulate_corpus(&sim)?;
    fs::create_dir_all(&cfg.out).map_err(CoreError::Io)?;
    write_corpus_file(&corpus, &out_file(cfg, "corpus.jsonl"))?;
    let truth_json = serde_json::to_string_pretty(&truth)
        .map_err(|e| CoreError::Config(format!("cannot encode ground truth: {e}")))?;
    fs::write(out_file(cfg, "truth.json"), truth_json + "\n").map_err(CoreError::Io)?;
    if opts.fpr > 0.0 || opts.fnr > 0.0 {
        // A distinct stream from the generator's own so the degraded
        // copy shares every unperturbed score with the clean one.
        let (noisy, cm) = inject_classification_noise(
            &corpus,
            truth.treatment,
            truth.threshold,
            opts.fpr,
            opts.fnr,
            cfg.seed ^ 0x6e6f6973,
        )?;
        write_corpus_file(&noisy, &out_file(cfg, "corpus_noisy.jsonl"))?;
        let cm_json = serde_json::to_string_pretty(&cm)
            .map_err(|e| CoreError::Config(format!("cannot encode confusion counts: {e}")))?;
        fs::write(out_file(cfg, "confusion.json"), cm_json + "\n").map_err(CoreError::Io)?;
    }
    RunManifest::build("simulate", cfg, &[])?.write(&cfg.out)?;
    Ok(truth)
}
