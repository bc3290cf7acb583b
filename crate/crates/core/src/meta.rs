//! Random-effects pooling of per-tree coefficients and weighted
//! metaregression on tree-level moderators.
//!
//! Each tree contributes one (estimate, standard error) pair per
//! coefficient. Pooling combines them with inverse-variance weights
//! 1/(se^2 + tau^2), where tau^2 is the between-tree variance from the
//! DerSimonian-Laird moment estimator (or REML on request).
//! Metaregression runs weighted least squares of the estimates on
//! tree-level moderators with the same weights and HC1 standard errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::corpus::AccountCategory;
use crate::error::{CoreError, Result};
use crate::estimate::{ols_fit, tail_probability, CovEstimator, TailDist};

/// Two-sided p-value below which a moderator is flagged as reliable.
pub const RELIABLE_P: f64 = 0.05;

/// Tree-level context recorded alongside each fitted coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moderators {
    pub rg_period: bool,
    pub ri_period: bool,
    /// Share of the tree's tweets written during the first regime period.
    pub pct_rg_speakers: f64,
    /// Share written during the second regime period.
    pub pct_ri_speakers: f64,
    pub root_category: AccountCategory,
    pub size: usize,
    pub duration_hours: f64,
    pub unique_participants: usize,
}

impl Moderators {
    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("pct_rg_speakers", self.pct_rg_speakers),
            ("pct_ri_speakers", self.pct_ri_speakers),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CoreError::Domain(format!("{name} {p} outside [0, 1]")));
            }
        }
        if !self.duration_hours.is_finite() || self.duration_hours < 0.0 {
            return Err(CoreError::Domain(format!(
                "duration_hours {} must be finite and non-negative",
                self.duration_hours
            )));
        }
        if self.size == 0 || self.unique_participants == 0 {
            return Err(CoreError::Domain(
                "tree size and participant count must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One coefficient from one tree's fit, ready for pooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeResult {
    pub tree_id: String,
    /// Which coefficient this is (e.g. a short-run lag or a long-run theta).
    pub coefficient: String,
    pub estimate: f64,
    pub se: f64,
    pub moderators: Moderators,
}

/// Between-tree variance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMethod {
    #[default]
    DerSimonianLaird,
    /// Restricted maximum likelihood, iterated to a fixed point.
    Reml,
}

/// A pooled coefficient with its heterogeneity diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEstimate {
    pub pooled: f64,
    pub se: f64,
    pub ci95: (f64, f64),
    /// Between-tree variance; zero means the trees look homogeneous.
    pub tau2: f64,
    /// Cochran's Q against the fixed-effect mean.
    pub q: f64,
    pub q_df: usize,
    pub q_p: f64,
    /// Higgins I^2: share of total variance attributed to heterogeneity.
    pub i2: f64,
    /// Trees actually pooled.
    pub k: usize,
    /// Trees excluded for non-finite estimates or degenerate SEs.
    pub dropped: usize,
    pub method: TauMethod,
}

// Keep the usable (estimate, variance) pairs; a fit that produced a
// non-finite value or a non-positive SE is a failed fit and is excluded
// rather than imputed.
fn usable_pairs(results: &[TreeResult]) -> Result<(Vec<(f64, f64)>, usize)> {
    if results.is_empty() {
        return Err(CoreError::Insufficient {
            what: "pooling".into(),
            needed: 2,
            available: 0,
        });
    }
    let name = &results[0].coefficient;
    if let Some(bad) = results.iter().find(|r| r.coefficient != *name) {
        return Err(CoreError::Config(format!(
            "mixed coefficients in one pooling batch: {name:?} and {:?}",
            bad.coefficient
        )));
    }
    let mut pairs = Vec::with_capacity(results.len());
    for r in results {
        if r.estimate.is_finite() && r.se.is_finite() && r.se > 0.0 {
            pairs.push((r.estimate, r.se * r.se));
        }
    }
    let dropped = results.len() - pairs.len();
    Ok((pairs, dropped))
}

// Fixed-effect weights give Cochran's Q and the DerSimonian-Laird
// moment estimate: tau2 = max(0, (Q - df) / C) with
// C = sum(w) - sum(w^2)/sum(w).
fn dl_tau2(pairs: &[(f64, f64)]) -> (f64, f64) {
    let sw: f64 = pairs.iter().map(|(_, v)| 1.0 / v).sum();
    let swy: f64 = pairs.iter().map(|(y, v)| y / v).sum();
    let mu = swy / sw;
    let q: f64 = pairs.iter().map(|(y, v)| (y - mu).powi(2) / v).sum();
    let sw2: f64 = pairs.iter().map(|(_, v)| (1.0 / v).powi(2)).sum();
    let c = sw - sw2 / sw;
    let df = (pairs.len() - 1) as f64;
    let tau2 = if c > 0.0 { ((q - df) / c).max(0.0) } else { 0.0 };
    (tau2, q)
}

// REML fixed point: tau2 <- sum(w^2 ((y - mu)^2 - v)) / sum(w^2) + 1/sum(w)
// with w = 1/(v + tau2) and mu the weighted mean, floored at zero.
// Seeded from the DL value; converges in a handful of iterations.
fn reml_tau2(pairs: &[(f64, f64)], start: f64) -> Result<f64> {
    let mut tau2 = start.max(0.0);
    for _ in 0..500 {
        let w: Vec<f64> = pairs.iter().map(|(_, v)| 1.0 / (v + tau2)).collect();
        let sw: f64 = w.iter().sum();
        let mu: f64 = pairs.iter().zip(&w).map(|((y, _), wi)| wi * y).sum::<f64>() / sw;
        let sw2: f64 = w.iter().map(|wi| wi * wi).sum();
        let num: f64 = pairs
            .iter()
            .zip(&w)
            .map(|((y, v), wi)| wi * wi * ((y - mu).powi(2) - v))
            .sum();
        let next = (num / sw2 + 1.0 / sw).max(0.0);
        if (next - tau2).abs() <= 1e-12 * (1.0 + tau2) {
            return Ok(next);
        }
        tau2 = next;
    }
    Err(CoreError::Numeric(
        "REML iteration for tau^2 did not converge".into(),
    ))
}

fn z_975() -> f64 {
    statrs::distribution::Normal::standard().inverse_cdf(0.975)
}

/// Pool one coefficient across trees with inverse-variance weights
/// 1/(se^2 + tau^2). Needs at least two usable trees; results carrying
/// non-finite estimates or non-positive SEs are dropped and counted.
pub fn pool_random_effects(results: &[TreeResult], method: TauMethod) -> Result<MetaEstimate> {
    let (pairs, dropped) = usable_pairs(results)?;
    let k = pairs.len();
    if k < 2 {
        return Err(CoreError::Insufficient {
            what: "random-effects pooling".into(),
            needed: 2,
            available: k,
        });
    }
    let (tau2_dl, q) = dl_tau2(&pairs);
    let tau2 = match method {
        TauMethod::DerSimonianLaird => tau2_dl,
        TauMethod::Reml => reml_tau2(&pairs, tau2_dl)?,
    };
    let w: Vec<f64> = pairs.iter().map(|(_, v)| 1.0 / (v + tau2)).collect();
    let sw: f64 = w.iter().sum();
    let pooled = pairs.iter().zip(&w).map(|((y, _), wi)| wi * y).sum::<f64>() / sw;
    let se = (1.0 / sw).sqrt();
    let half = z_975() * se;
    let q_df = k - 1;
    let q_p = tail_probability(
        TailDist::ChiSquare { df: q_df as f64 },
        q,
    )?;
    let i2 = if q > 0.0 { ((q - q_df as f64) / q).max(0.0) } else { 0.0 };
    Ok(MetaEstimate {
        pooled,
        se,
        ci95: (pooled - half, pooled + half),
        tau2,
        q,
        q_df,
        q_p,
        i2,
        k,
        dropped,
        method,
    })
}

/// A tree-level moderator usable in the metaregression design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moderator {
    RgPeriod,
    RiPeriod,
    PctRgSpeakers,
    PctRiSpeakers,
    /// Expands to indicator columns for media, journalist, and
    /// politician roots; unknown accounts are the reference level.
    RootCategory,
    Size,
    DurationHours,
    UniqueParticipants,
}

impl Moderator {
    pub const ALL: [Moderator; 8] = [
        Moderator::RgPeriod,
        Moderator::RiPeriod,
        Moderator::PctRgSpeakers,
        Moderator::PctRiSpeakers,
        Moderator::RootCategory,
        Moderator::Size,
        Moderator::DurationHours,
        Moderator::UniqueParticipants,
    ];

    pub fn column_names(&self) -> Vec<&'static str> {
        match self {
            Moderator::RgPeriod => vec!["rg_period"],
            Moderator::RiPeriod => vec!["ri_period"],
            Moderator::PctRgSpeakers => vec!["pct_rg_speakers"],
            Moderator::PctRiSpeakers => vec!["pct_ri_speakers"],
            Moderator::RootCategory => vec!["root_media", "root_journalist", "root_politician"],
            Moderator::Size => vec!["size"],
            Moderator::DurationHours => vec!["duration_hours"],
            Moderator::UniqueParticipants => vec!["unique_participants"],
        }
    }

    fn values(&self, m: &Moderators) -> Vec<f64> {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Moderator::RgPeriod => vec![ind(m.rg_period)],
            Moderator::RiPeriod => vec![ind(m.ri_period)],
            Moderator::PctRgSpeakers => vec![m.pct_rg_speakers],
            Moderator::PctRiSpeakers => vec![m.pct_ri_speakers],
            Moderator::RootCategory => vec![
                ind(m.root_category == AccountCategory::Media),
                ind(m.root_category == AccountCategory::Journalist),
                ind(m.root_category == AccountCategory::Politician),
            ],
            Moderator::Size => vec![m.size as f64],
            Moderator::DurationHours => vec![m.duration_hours],
            Moderator::UniqueParticipants => vec![m.unique_participants as f64],
        }
    }
}

/// One fitted metaregression coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeratorEffect {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    /// Whether p clears [`RELIABLE_P`].
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRegression {
    /// Intercept first, then the selected moderator columns in order.
    pub coefficients: Vec<ModeratorEffect>,
    pub tau2: f64,
    pub k: usize,
    pub dropped: usize,
    /// Moderator columns removed because they were constant across trees.
    pub dropped_moderators: Vec<String>,
}

impl MetaRegression {
    pub fn coefficient(&self, name: &str) -> Option<&ModeratorEffect> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Weighted least squares of tree estimates on tree moderators, with
/// weights 1/(se^2 + tau^2) and HC1 robust standard errors. Constant
/// moderator columns are dropped and reported; with nothing left the
/// intercept reproduces the pooled estimate exactly.
pub fn metaregress(
    results: &[TreeResult],
    moderators: &[Moderator],
    method: TauMethod,
) -> Result<MetaRegression> {
    let (pairs, dropped) = usable_pairs(results)?;
    let k = pairs.len();
    if k < 2 {
        return Err(CoreError::Insufficient {
            what: "metaregression".into(),
            needed: 2,
            available: k,
        });
    }
    let kept: Vec<&TreeResult> = results
        .iter()
        .filter(|r| r.estimate.is_finite() && r.se.is_finite() && r.se > 0.0)
        .collect();
    for r in &kept {
        r.moderators.validate()?;
    }

    // Expand the selection into named columns, then drop the constant
    // ones: they carry no contrast and would only alias the intercept.
    let mut names: Vec<&'static str> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for m in moderators {
        let block_names = m.column_names();
        for (j, name) in block_names.into_iter().enumerate() {
            names.push(name);
            columns.push(kept.iter().map(|r| m.values(&r.moderators)[j]).collect());
        }
    }
    let mut dropped_moderators = Vec::new();
    let mut keep_idx = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            dropped_moderators.push(names[j].to_string());
        } else {
            keep_idx.push(j);
        }
    }
    let m_cols = keep_idx.len();
    if k <= m_cols + 2 {
        return Err(CoreError::Insufficient {
            what: "metaregression".into(),
            needed: m_cols + 3,
            available: k,
        });
    }

    let (tau2_dl, _) = dl_tau2(&pairs);
    let tau2 = match method {
        TauMethod::DerSimonianLaird => tau2_dl,
        TauMethod::Reml => reml_tau2(&pairs, tau2_dl)?,
    };

    // Fold the weights into the design: rows scaled by sqrt(w) turn the
    // WLS problem into OLS, and HC1 on the scaled rows is the robust
    // covariance for the weighted fit.
    let mut x = DMatrix::zeros(k, 1 + m_cols);
    let mut y = DVector::zeros(k);
    for (i, (est, v)) in pairs.iter().enumerate() {
        let rw = (1.0 / (v + tau2)).sqrt();
        x[(i, 0)] = rw;
        for (out_j, &j) in keep_idx.iter().enumerate() {
            x[(i, 1 + out_j)] = rw * columns[j][i];
        }
        y[i] = rw * est;
    }
    let fit = ols_fit(&y, &x, CovEstimator::RobustHc1)?;

    let se = fit.standard_errors();
    let mut coefficients = Vec::with_capacity(1 + m_cols);
    for (row, name) in std::iter::once("intercept")
        .chain(keep_idx.iter().map(|&j| names[j]))
        .enumerate()
    {
        let b = fit.coefficients[row];
        let s = se[row];
        let z = b / s;
        // An exact fit gives a zero SE; the coefficient is then beyond
        // doubt rather than undefined.
        let p = if z.is_finite() {
            2.0 * tail_probability(TailDist::Normal, z.abs())?
        } else {
            0.0
        };
        coefficients.push(ModeratorEffect {
            name: name.to_string(),
            estimate: b,
            se: s,
            z,
            p,
            reliable: p < RELIABLE_P,
        });
    }
    Ok(MetaRegression {
        coefficients,
        tau2,
        k,
        dropped,
        dropped_moderators,
    })
}
