//! The report command: normalized, smoothed daily trend lines and an
//! interval plot of previously computed coefficients, rendered as SVG
//! alongside a CSV of the plotted values.

use std::fs;
use std::path::{Path, PathBuf};

use replyscope_core::corpus::views::daily_series;
use replyscope_core::error::{CoreError, Result};

use crate::config::RunConfig;
use crate::manifest::RunManifest;
use crate::plot::{render_interval_chart, render_line_chart, IntervalPoint};
use crate::trend::{min_max_normalize, smooth_centered};

use super::{analysis_measures, cell, load_corpus, out_file, write_csv};

/// Days in the centered smoothing window. Even, so the window sits one
/// day heavier on the past than on the future.
pub const SMOOTH_WINDOW_DAYS: usize = 14;

// Pulls interval rows out of a previous command's CSV. `wanted` maps a
// header row to Some((label, estimate, lo, hi)) for rows worth keeping.
fn read_intervals(
    path: &Path,
    wanted: impl Fn(&csv::StringRecord, &csv::StringRecord) -> Option<IntervalPoint>,
) -> Result<Vec<IntervalPoint>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CoreError::Io(io),
        other => CoreError::Config(format!("{}: {other:?}", path.display())),
    })?;
    let headers = reader.headers().map_err(|e| {
        CoreError::Config(format!("{}: cannot read header: {e}", path.display()))
    })?.clone();
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            CoreError::Malformed { line: 0, reason: format!("{}: {e}", path.display()) }
        })?;
        if let Some(p) = wanted(&headers, &record) {
            points.push(p);
        }
    }
    Ok(points)
}

fn field<'r>(headers: &csv::StringRecord, record: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
    let idx = headers.iter().position(|h| h == name)?;
    record.get(idx)
}

fn parse_field(headers: &csv::StringRecord, record: &csv::StringRecord, name: &str) -> Option<f64> {
    field(headers, record, name)?.parse().ok()
}

// The pooled long-run and short-run lag coefficients, one interval per
// outcome x predictor x horizon.
fn meso_intervals(path: &Path) -> Result<Vec<IntervalPoint>> {
    read_intervals(path, |h, r| {
        let coef = field(h, r, "coefficient")?;
        if field(h, r, "status")? != "ok" || !matches!(coef, "theta" | "beta.l1" | "beta.l2") {
            return None;
        }
        Some(IntervalPoint {
            label: format!(
                "{} on {} [{}]",
                field(h, r, "predictor")?,
                field(h, r, "outcome")?,
                coef
            ),
            estimate: parse_field(h, r, "pooled")?,
            lo: parse_field(h, r, "lo95")?,
            hi: parse_field(h, r, "hi95")?,
        })
    })
}

fn micro_intervals(path: &Path) -> Result<Vec<IntervalPoint>> {
    read_intervals(path, |h, r| {
        if field(h, r, "status")? != "ok" {
            return None;
        }
        Some(IntervalPoint {
            label: format!(
                "{} on {} [ame]",
                field(h, r, "treatment")?,
                field(h, r, "outcome")?
            ),
            estimate: parse_field(h, r, "ame")?,
            lo: parse_field(h, r, "lo95")?,
            hi: parse_field(h, r, "hi95")?,
        })
    })
}

/// Writes trends.csv and trends.svg for every configured measure, and
/// coefficients.svg when a meso or micro run left results to plot.
/// Returns the warnings it printed.
pub fn cmd_report(cfg: &RunConfig) -> Result<Vec<String>> {
    cfg.validate(true)?;
    let (corpus, _) = load_corpus(cfg)?;
    let measures = analysis_measures(cfg);
    let ds = daily_series(&corpus, cfg.span_start, cfg.span_end, &measures)?;
    let mut warnings: Vec<String> = Vec::new();

    let mut names: Vec<String> = Vec::new();
    let mut smoothed: Vec<Vec<f64>> = Vec::new();
    for (i, &m) in measures.iter().enumerate() {
        let raw = &ds.values[i];
        let scaled = match min_max_normalize(raw) {
            Some(v) => v,
            None => {
                warnings.push(format!("series '{m}' is constant; plotting raw values"));
                raw.clone()
            }
        };
        names.push(m.to_string());
        smoothed.push(smooth_centered(&scaled, SMOOTH_WINDOW_DAYS));
    }

    let mut header: Vec<&str> = vec!["date"];
    header.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..ds.n_days())
        .map(|d| {
            let mut row = vec![ds.dates[d].to_string()];
            row.extend(smoothed.iter().map(|s| cell(s[d])));
            row
        })
        .collect();
    write_csv(&out_file(cfg, "trends.csv"), &header, &rows)?;

    let date_labels: Vec<String> = ds.dates.iter().map(|d| d.to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = names.into_iter().zip(smoothed).collect();
    let svg = render_line_chart(
        &format!("daily means, scaled to [0, 1], {SMOOTH_WINDOW_DAYS}-day centered average"),
        &date_labels,
        &series,
    );
    fs::write(out_file(cfg, "trends.svg"), svg).map_err(CoreError::Io)?;

    // Coefficient intervals come from whichever analysis already ran;
    // pooled tree effects take precedence over the matched contrasts.
    let meso_path = out_file(cfg, "meso_pooled.csv");
    let micro_path = out_file(cfg, "effects.csv");
    let mut extra_inputs: Vec<PathBuf> = Vec::new();
    let points = if meso_path.is_file() {
        extra_inputs.push(meso_path.clone());
        meso_intervals(&meso_path)?
    } else if micro_path.is_file() {
        extra_inputs.push(micro_path.clone());
        micro_intervals(&micro_path)?
    } else {
        warnings.push(
            "no meso_pooled.csv or effects.csv in the output directory; \
             skipping the coefficient plot"
                .to_string(),
        );
        Vec::new()
    };
    if !points.is_empty() {
        let svg = render_interval_chart("coefficient estimates with 95% intervals", &points);
        fs::write(out_file(cfg, "coefficients.svg"), svg).map_err(CoreError::Io)?;
    } else if extra_inputs.first().is_some() {
        warnings.push("no plottable coefficient rows found; skipping the coefficient plot".into());
    }

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let extra: Vec<&Path> = extra_inputs.iter().map(PathBuf::as_path).collect();
    RunManifest::build("report", cfg, &extra)?.write(&cfg.out)?;
    Ok(warnings)
}
