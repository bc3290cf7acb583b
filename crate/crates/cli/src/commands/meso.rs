//! The meso command: one distributed-lag fit per qualifying tree,
//! random-effects pooling per coefficient, and a moderator
//! metaregression on the long-run effects.

use std::collections::BTreeMap;

use rayon::prelude::*;

use replyscope_core::ardl::{fit_ardl, select_lags, to_ec_form, ArdlSpec, Series};
use replyscope_core::corpus::views::{tree_series, TreeSeries};
use replyscope_core::corpus::{Dimension, Measure, Tree};
use replyscope_core::error::{CoreError, Result};
use replyscope_core::estimate::CovEstimator;
use replyscope_core::meta::{
    metaregress, pool_random_effects, Moderator, Moderators, TauMethod, TreeResult,
};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

use super::{analysis_measures, cell, load_corpus, out_file, write_csv};

#[derive(Debug, Clone)]
pub struct MesoOutput {
    /// Trees that met the size floor and entered the fits.
    pub trees_used: usize,
    /// (tree, outcome, predictor) fits that failed a statistical
    /// precondition and were excluded.
    pub fit_failures: usize,
    pub pooled_rows: usize,
    pub metaregression_rows: usize,
}

// Period context and structural covariates of one tree.
fn tree_moderators(tree: &Tree, cfg: &RunConfig) -> Moderators {
    let in_rg = |d: chrono::NaiveDate| d >= cfg.rg_start && d < cfg.ri_start;
    let in_ri = |d: chrono::NaiveDate| d >= cfg.ri_start;
    let n = tree.size() as f64;
    let rg_share = tree
        .tweets
        .iter()
        .filter(|t| in_rg(t.timestamp.date_naive()))
        .count() as f64
        / n;
    let ri_share = tree
        .tweets
        .iter()
        .filter(|t| in_ri(t.timestamp.date_naive()))
        .count() as f64
        / n;
    let root_date = tree.tweets[tree.root].timestamp.date_naive();
    Moderators {
        rg_period: in_rg(root_date),
        ri_period: in_ri(root_date),
        pct_rg_speakers: rg_share,
        pct_ri_speakers: ri_share,
        root_category: tree.root_category(),
        size: tree.size(),
        duration_hours: tree.duration_hours(),
        unique_participants: tree.unique_participants(),
    }
}

// Named (estimate, se) pairs from one tree fit.
type TreeCoefs = Vec<(String, f64, f64)>;

fn fit_tree_pair(
    ts: &TreeSeries,
    o_idx: usize,
    x_idx: usize,
    outcome: Measure,
    predictor: Dimension,
    base: &ArdlSpec,
    cfg: &RunConfig,
) -> Result<TreeCoefs> {
    let y = Series::new(outcome.name(), ts.values[o_idx].clone());
    let x = Series::new(predictor.name(), ts.values[x_idx].clone());
    let xs = [x];
    let (p, q) = select_lags(&y, &xs, &[], base, cfg.max_p, cfg.max_q)?;
    let fit = fit_ardl(&y, &xs, &[], &base.with_lags(p, q))?;
    let ec = to_ec_form(&fit)?;
    let se = fit.ols.standard_errors();
    let mut coefs = vec![
        ("theta".to_string(), ec.theta[0], ec.se_theta[0]),
        ("alpha".to_string(), ec.alpha, ec.se_alpha),
    ];
    for lag in 0..=fit.spec.q {
        let col = fit.beta_col(0, lag);
        coefs.push((format!("beta.l{lag}"), fit.beta[(0, lag)], se[col]));
    }
    Ok(coefs)
}

fn is_tree_skippable(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::Insufficient { .. }
            | CoreError::Collinear(_)
            | CoreError::Numeric(_)
            | CoreError::Domain(_)
    )
}

/// Fits every qualifying tree for each outcome x predictor pair, pools
/// the per-tree coefficients, and regresses the long-run effects on the
/// tree moderators. Writes meso_pooled.csv and meso_metaregression.csv.
pub fn cmd_meso(cfg: &RunConfig) -> Result<MesoOutput> {
    cfg.validate(true)?;
    let (corpus, _) = load_corpus(cfg)?;
    let measures = analysis_measures(cfg);
    let series = tree_series(&corpus, cfg.min_tree_size, &measures)?;
    if series.len() < 2 {
        return Err(CoreError::Insufficient {
            what: format!("trees with at least {} tweets", cfg.min_tree_size),
            needed: 2,
            available: series.len(),
        });
    }
    let midx: BTreeMap<Measure, usize> =
        measures.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let moderators: Vec<Moderators> = series
        .iter()
        .map(|ts| tree_moderators(&corpus.trees[ts.tree], cfg))
        .collect();
    let base = ArdlSpec {
        p: 1,
        q: 1,
        with_constant: true,
        with_trend: false,
        cov: CovEstimator::RobustHc1,
    };
    let pairs: Vec<(Measure, Dimension)> = cfg
        .outcomes
        .iter()
        .flat_map(|&o| cfg.predictors.iter().map(move |&x| (o, x)))
        .filter(|&(o, x)| o != Measure::Score(x))
        .collect();

    // Per tree, per pair: Ok(coefs), or None when the tree was excluded
    // for statistical reasons. Trees are independent, so this is the
    // fan-out point; results keep the input order.
    let fitted: Vec<Vec<Option<TreeCoefs>>> = series
        .par_iter()
        .map(|ts| {
            pairs
                .iter()
                .map(|&(o, x)| {
                    match fit_tree_pair(ts, midx[&o], midx[&Measure::Score(x)], o, x, &base, cfg)
                    {
                        Ok(coefs) => Ok(Some(coefs)),
                        Err(e) if is_tree_skippable(&e) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<Option<TreeCoefs>>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let coef_order: Vec<String> = {
        let mut names = vec!["theta".to_string(), "alpha".to_string()];
        names.extend((0..=cfg.max_q).map(|l| format!("beta.l{l}")));
        names
    };

    let mut pooled_rows: Vec<Vec<String>> = Vec::new();
    let mut metareg_rows: Vec<Vec<String>> = Vec::new();
    let mut fit_failures = 0usize;
    for (pi, &(o, x)) in pairs.iter().enumerate() {
        let mut by_coef: BTreeMap<&str, Vec<TreeResult>> = BTreeMap::new();
        for (ti, per_tree) in fitted.iter().enumerate() {
            match &per_tree[pi] {
                Some(coefs) => {
                    for (name, est, se) in coefs {
                        by_coef.entry(name).or_default().push(TreeResult {
                            tree_id: series[ti].tree_id.clone(),
                            coefficient: name.clone(),
                            estimate: *est,
                            se: *se,
                            moderators: moderators[ti].clone(),
                        });
                    }
                }
                None => fit_failures += 1,
            }
        }
        for coef in &coef_order {
            let results = by_coef.get(coef.as_str()).map_or(&[][..], |v| v);
            let mut row = vec![o.to_string(), x.to_string(), coef.clone()];
            match pool_random_effects(results, TauMethod::DerSimonianLaird) {
                Ok(est) => {
                    row.extend([
                        "ok".to_string(),
                        est.k.to_string(),
                        est.dropped.to_string(),
                        cell(est.pooled),
                        cell(est.se),
                        cell(est.ci95.0),
                        cell(est.ci95.1),
                        cell(est.tau2),
                        cell(est.i2),
                    ]);
                }
                Err(e) if is_tree_skippable(&e) => {
                    row.push(format!("skipped: {e}"));
                    row.extend((0..8).map(|_| String::new()));
                }
                Err(e) => return Err(e),
            }
            pooled_rows.push(row);
        }
        if let Some(theta_results) = by_coef.get("theta") {
            match metaregress(theta_results, &Moderator::ALL, TauMethod::DerSimonianLaird) {
                Ok(reg) => {
                    for c in &reg.coefficients {
                        metareg_rows.push(vec![
                            o.to_string(),
                            x.to_string(),
                            c.name.clone(),
                            cell(c.estimate),
                            cell(c.se),
                            cell(c.z),
                            cell(c.p),
                            c.reliable.to_string(),
                        ]);
                    }
                }
                Err(e) if is_tree_skippable(&e) => {
                    eprintln!("note: no moderator regression for {o} ~ {x}: {e}");
                }
                Err(e) => return Err(e),
            }
        }
    }

    write_csv(
        &out_file(cfg, "meso_pooled.csv"),
        &[
            "outcome",
            "predictor",
            "coefficient",
            "status",
            "k",
            "dropped",
            "pooled",
            "se",
            "lo95",
            "hi95",
            "tau2",
            "i2",
        ],
        &pooled_rows,
    )?;
    write_csv(
        &out_file(cfg, "meso_metaregression.csv"),
        &[
            "outcome",
            "predictor",
            "moderator",
            "estimate",
            "se",
            "z",
            "p_value",
            "reliable",
        ],
        &metareg_rows,
    )?;
    RunManifest::build("meso", cfg, &[])?.write(&cfg.out)?;
    Ok(MesoOutput {
        trees_used: series.len(),
        fit_failures,
        pooled_rows: pooled_rows.len(),
        metaregression_rows: metareg_rows.len(),
    })
}
