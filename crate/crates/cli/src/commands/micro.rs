//! The micro command: matched causal effect of each treatment dimension
//! on each outcome of the following tweet.

use std::collections::BTreeMap;

use replyscope_core::corpus::views::extract_reply_triples;
use replyscope_core::corpus::{Corpus, Dimension, Measure};
use replyscope_core::error::{CoreError, Result};
use replyscope_core::matching::{
    balance_report, build_units, error_aware_bootstrap, match_nearest, ConfusionMatrix, MatchSpec,
};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

use super::{cell, load_corpus, opt_cell, out_file, write_csv};

/// One line of effects.csv.
#[derive(Debug, Clone)]
pub struct EffectRow {
    pub treatment: Dimension,
    pub outcome: Measure,
    /// "ok", or the reason this analysis was skipped.
    pub status: String,
    pub n_treated: usize,
    pub n_pairs: usize,
    pub ame: Option<f64>,
    pub lo95: Option<f64>,
    pub hi95: Option<f64>,
    pub p_value: Option<f64>,
    pub max_abs_smd_after: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn load_confusion(cfg: &RunConfig) -> Result<BTreeMap<Dimension, ConfusionMatrix>> {
    let mut out = BTreeMap::new();
    for (dim, path) in &cfg.confusion {
        let text = std::fs::read_to_string(path)?;
        let cm: ConfusionMatrix = serde_json::from_str(&text)
            .map_err(|e| CoreError::Config(format!("{}: {e}", path.display())))?;
        cm.validate()?;
        out.insert(*dim, cm);
    }
    Ok(out)
}

// Statistical dead ends for one analysis cell are reported, not fatal;
// configuration and I/O problems abort the run.
fn is_skippable(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::Insufficient { .. } | CoreError::Collinear(_) | CoreError::Numeric(_)
    )
}

struct CellOutcome {
    effect: replyscope_core::matching::EffectEstimate,
    balance: replyscope_core::matching::BalanceReport,
    n_treated: usize,
}

fn run_cell(
    corpus: &Corpus,
    triples: &[replyscope_core::corpus::views::ReplyTriple],
    spec: &MatchSpec,
    cm: Option<&ConfusionMatrix>,
    bootstrap: usize,
    seed: u64,
) -> Result<CellOutcome> {
    let units = build_units(corpus, triples, spec)?;
    let n_treated = units.iter().filter(|u| u.treated).count();
    if n_treated == 0 {
        return Err(CoreError::insufficient("treated units", 1, 0));
    }
    let sample = match_nearest(&units)?;
    let balance = balance_report(&units, &sample, &spec.covariates)?;
    let effect = error_aware_bootstrap(&units, &sample, cm, bootstrap, seed)?;
    Ok(CellOutcome { effect, balance, n_treated })
}

/// Runs every treatment x outcome analysis, writing effects.csv and the
/// per-covariate balance appendix balance.csv.
pub fn cmd_micro(cfg: &RunConfig) -> Result<Vec<EffectRow>> {
    cfg.validate(true)?;
    let confusion = load_confusion(cfg)?;
    let (corpus, _) = load_corpus(cfg)?;
    let triples = extract_reply_triples(&corpus);

    let mut rows = Vec::new();
    let mut balance_rows: Vec<Vec<String>> = Vec::new();
    for (ti, &treatment) in cfg.predictors.iter().enumerate() {
        for (oi, &outcome) in cfg.outcomes.iter().enumerate() {
            let spec = MatchSpec::new(treatment, cfg.threshold(treatment), outcome);
            let cm = confusion.get(&treatment);
            // One deterministic stream per analysis cell, derived from
            // the run seed and the cell's position.
            let seed = cfg
                .seed
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add((ti as u64) << 16)
                .wrapping_add(oi as u64);
            match run_cell(&corpus, &triples, &spec, cm, cfg.bootstrap, seed) {
                Ok(cell_out) => {
                    let e = &cell_out.effect;
                    for cb in &cell_out.balance.covariates {
                        balance_rows.push(vec![
                            treatment.to_string(),
                            outcome.to_string(),
                            cb.name.clone(),
                            cell(cb.smd_before),
                            cell(cb.smd_after),
                        ]);
                    }
                    rows.push(EffectRow {
                        treatment,
                        outcome,
                        status: "ok".into(),
                        n_treated: cell_out.n_treated,
                        n_pairs: e.n_pairs,
                        ame: Some(e.ame),
                        lo95: Some(e.ci95.0),
                        hi95: Some(e.ci95.1),
                        p_value: Some(e.p_value),
                        max_abs_smd_after: Some(cell_out.balance.max_abs_smd_after()),
                        fpr: e.error_rates.map(|r| r.0),
                        fnr: e.error_rates.map(|r| r.1),
                    });
                }
                Err(e) if is_skippable(&e) => {
                    rows.push(EffectRow {
                        treatment,
                        outcome,
                        status: format!("skipped: {e}"),
                        n_treated: 0,
                        n_pairs: 0,
                        ame: None,
                        lo95: None,
                        hi95: None,
                        p_value: None,
                        max_abs_smd_after: None,
                        fpr: None,
                        fnr: None,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.treatment.to_string(),
                r.outcome.to_string(),
                r.status.clone(),
                r.n_treated.to_string(),
                r.n_pairs.to_string(),
                opt_cell(r.ame),
                opt_cell(r.lo95),
                opt_cell(r.hi95),
                opt_cell(r.p_value),
                opt_cell(r.max_abs_smd_after),
                opt_cell(r.fpr),
                opt_cell(r.fnr),
            ]
        })
        .collect();
    write_csv(
        &out_file(cfg, "effects.csv"),
        &[
            "treatment",
            "outcome",
            "status",
            "n_treated",
            "n_pairs",
            "ame",
            "lo95",
            "hi95",
            "p_value",
            "max_abs_smd_after",
            "fpr",
            "fnr",
        ],
        &csv_rows,
    )?;
    write_csv(
        &out_file(cfg, "balance.csv"),
        &["treatment", "outcome", "covariate", "smd_before", "smd_after"],
        &balance_rows,
    )?;
    RunManifest::build("micro", cfg, &[])?.write(&cfg.out)?;
    Ok(rows)
}
