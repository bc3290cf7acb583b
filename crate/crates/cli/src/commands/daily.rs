//! The macro command: one corpus-wide distributed-lag model per
//! outcome over the daily series, with period dummies and
//! period-interaction terms for every predictor.

use replyscope_core::ardl::{fit_ardl, select_lags, to_ec_form, ArdlSpec, Series};
use replyscope_core::corpus::views::daily_series;
use replyscope_core::error::Result;
use replyscope_core::estimate::{tail_probability, CovEstimator, TailDist};

use crate::config::RunConfig;
use crate::manifest::RunManifest;

use super::{analysis_measures, cell, load_corpus, out_file, write_csv};

/// Significance level used for the `reliable` flag.
pub const RELIABLE_P: f64 = 0.05;

/// Largest share of the analysis span allowed to have no tweets at
/// all. Beyond this the daily model would lean on interpolation and
/// trimming instead of data.
pub const MAX_MISSING_DAY_SHARE: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct MacroRow {
    pub outcome: String,
    pub term: String,
    /// One of: deterministic, short_run, distributed, period,
    /// interaction, long_run.
    pub kind: &'static str,
    pub estimate: f64,
    pub se: f64,
    pub p_value: f64,
    pub reliable: bool,
    /// "+" or "-" for reliable interaction terms, empty otherwise.
    pub direction: &'static str,
}

// Buckets a design-matrix coefficient by its name. The outcome's own
// lags are the persistence terms; predictor lags are the distributed
// effects; rg/ri dummies shift the level; products shift the slopes.
fn classify(term: &str, y_name: &str) -> &'static str {
    if term == "const" || term == "trend" {
        "deterministic"
    } else if let Some(rest) = term.strip_prefix(y_name) {
        if rest.starts_with(".l") {
            "short_run"
        } else {
            "distributed"
        }
    } else if term == "rg" || term == "ri" {
        "period"
    } else if term.ends_with(":rg") || term.ends_with(":ri") {
        "interaction"
    } else {
        "distributed"
    }
}

/// Fits the daily model for each configured outcome and writes
/// macro_coefficients.csv. Days with no tweets surface as gaps that the
/// model layer interpolates or rejects depending on how many there are.
pub fn cmd_macro(cfg: &RunConfig) -> Result<Vec<MacroRow>> {
    cfg.validate(true)?;
    let (corpus, _) = load_corpus(cfg)?;
    let measures = analysis_measures(cfg);
    let ds = daily_series(&corpus, cfg.span_start, cfg.span_end, &measures)?;
    let covered = ds.tweet_counts.iter().filter(|&&c| c > 0).count();
    let needed = (ds.n_days() as f64 * (1.0 - MAX_MISSING_DAY_SHARE)).ceil() as usize;
    if covered < needed {
        return Err(replyscope_core::error::CoreError::Insufficient {
            what: format!(
                "days with tweets in the {}..{} span",
                cfg.span_start, cfg.span_end
            ),
            needed,
            available: covered,
        });
    }
    let rg: Vec<f64> = ds
        .dates
        .iter()
        .map(|&d| f64::from(u8::from(d >= cfg.rg_start && d < cfg.ri_start)))
        .collect();
    let ri: Vec<f64> = ds
        .dates
        .iter()
        .map(|&d| f64::from(u8::from(d >= cfg.ri_start)))
        .collect();

    let base = ArdlSpec {
        p: 1,
        q: 1,
        with_constant: true,
        with_trend: true,
        cov: CovEstimator::RobustHc1,
    };
    let mut rows: Vec<MacroRow> = Vec::new();
    for &o in &cfg.outcomes {
        let o_idx = measures.iter().position(|&m| m == o).expect("outcome in measures");
        let y = Series::new(o.name(), ds.values[o_idx].clone());
        let mut xs: Vec<Series> = Vec::new();
        let mut exog: Vec<Series> = vec![
            Series::new("rg", rg.clone()),
            Series::new("ri", ri.clone()),
        ];
        for &x in &cfg.predictors {
            if o == replyscope_core::corpus::Measure::Score(x) {
                continue;
            }
            let xi = measures
                .iter()
                .position(|&m| m == replyscope_core::corpus::Measure::Score(x))
                .expect("predictor in measures");
            let v = &ds.values[xi];
            xs.push(Series::new(x.name(), v.clone()));
            // A missing day in x stays missing in the product: NaN * 0
            // is NaN, so the gap is not silently zeroed out.
            let x_rg: Vec<f64> = v.iter().zip(&rg).map(|(a, b)| a * b).collect();
            let x_ri: Vec<f64> = v.iter().zip(&ri).map(|(a, b)| a * b).collect();
            exog.push(Series::new(format!("{}:rg", x.name()), x_rg));
            exog.push(Series::new(format!("{}:ri", x.name()), x_ri));
        }
        let (p, q) = select_lags(&y, &xs, &exog, &base, cfg.max_p, cfg.max_q)?;
        let fit = fit_ardl(&y, &xs, &exog, &base.with_lags(p, q))?;
        let ec = to_ec_form(&fit)?;

        let names = fit.coefficient_names();
        let se = fit.ols.standard_errors();
        let pvals = fit.ols.p_values()?;
        let y_name = o.name();
        for (i, term) in names.iter().enumerate() {
            let kind = classify(term, &y_name);
            let estimate = fit.ols.coefficients[i];
            let p_value = pvals[i];
            let reliable = p_value < RELIABLE_P;
            rows.push(MacroRow {
                outcome: o.to_string(),
                term: term.clone(),
                kind,
                estimate,
                se: se[i],
                p_value,
                reliable,
                direction: match (kind, reliable) {
                    ("interaction", true) if estimate > 0.0 => "+",
                    ("interaction", true) => "-",
                    _ => "",
                },
            });
        }
        for (j, x) in fit.x_names.iter().enumerate() {
            let z = ec.theta[j] / ec.se_theta[j];
            let p_value = if z.is_finite() {
                2.0 * tail_probability(TailDist::Normal, z.abs())?
            } else {
                0.0
            };
            rows.push(MacroRow {
                outcome: o.to_string(),
                term: format!("theta:{x}"),
                kind: "long_run",
                estimate: ec.theta[j],
                se: ec.se_theta[j],
                p_value,
                reliable: p_value < RELIABLE_P,
                direction: "",
            });
        }
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.outcome.clone(),
                r.term.clone(),
                r.kind.to_string(),
                cell(r.estimate),
                cell(r.se),
                cell(r.p_value),
                r.reliable.to_string(),
                r.direction.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_file(cfg, "macro_coefficients.csv"),
        &[
            "outcome",
            "term",
            "kind",
            "estimate",
            "se",
            "p_value",
            "reliable",
            "direction",
        ],
        &csv_rows,
    )?;
    RunManifest::build("macro", cfg, &[])?.write(&cfg.out)?;
    Ok(rows)
}
