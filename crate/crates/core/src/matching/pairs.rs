//! 1:1 nearest-neighbor matching without replacement on Mahalanobis
//! distance, and standardized mean difference balance checks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Covariate, MatchUnit};
use crate::error::{CoreError, Result};

/// |SMD| above this is conventionally flagged as imbalance.
pub const BALANCE_WARN: f64 = 0.1;
/// |SMD| above this indicates matching failed for that covariate.
pub const BALANCE_FAIL: f64 = 0.2;

/// Result of matching: index pairs into the unit slice that was matched.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedSample {
    /// (treated index, control index), sorted by the treated unit's id.
    pub pairs: Vec<(usize, usize)>,
    /// Mahalanobis distance of each pair, aligned with `pairs`.
    pub distances: Vec<f64>,
    /// Treated count before matching.
    pub n_treated: usize,
    /// Control count before matching.
    pub n_control: usize,
    /// Treated units dropped because the control pool ran out.
    pub unmatched_treated: usize,
}

impl MatchedSample {
    pub fn mean_distance(&self) -> f64 {
        self.distances.iter().sum::<f64>() / self.distances.len() as f64
    }
}

// Checks shape and uniqueness, returns the covariate dimension.
fn validate_units(units: &[MatchUnit]) -> Result<usize> {
    if units.is_empty() {
        return Err(CoreError::insufficient("match units", 2, 0));
    }
    let k = units[0].covariates.len();
    if k == 0 {
        return Err(CoreError::Config("match units carry no covariates".into()));
    }
    for u in units {
        if u.covariates.len() != k {
            return Err(CoreError::Config(format!(
                "unit {:?} has {} covariates, expected {}",
                u.id,
                u.covariates.len(),
                k
            )));
        }
        if u.covariates.iter().any(|v| !v.is_finite()) || !u.outcome.is_finite() {
            return Err(CoreError::Domain(format!("non-finite value in unit {:?}", u.id)));
        }
    }
    let mut ids: Vec<(usize, usize)> = units.iter().map(|u| u.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(CoreError::Config("duplicate unit ids in match input".into()));
    }
    Ok(k)
}

// Inverse of the covariance of all units' covariate rows, with a small
// ridge so near-duplicate columns stay invertible. Rows are visited in
// id order so the result does not depend on input permutation.
fn inverse_covariance(units: &[MatchUnit], order: &[usize], k: usize) -> Result<DMatrix<f64>> {
    let n = units.len() as f64;
    let mut mean = DVector::zeros(k);
    for &i in order {
        for j in 0..k {
            mean[j] += units[i].covariates[j];
        }
    }
    mean /= n;

    let mut cov = DMatrix::zeros(k, k);
    for &i in order {
        let d = DVector::from_iterator(k, units[i].covariates.iter().copied()) - &mean;
        cov += &d * d.transpose();
    }
    cov /= (n - 1.0).max(1.0);

    let trace = cov.trace();
    if !(trace.is_finite() && trace > 0.0) {
        return Err(CoreError::Collinear(
            "all matching covariates are constant; distances are undefined".into(),
        ));
    }
    let ridge = 1e-8 * trace / k as f64;
    for j in 0..k {
        cov[(j, j)] += ridge;
    }
    match cov.cholesky() {
        Some(chol) => Ok(chol.inverse()),
        None => Err(CoreError::Collinear(
            "covariate covariance is singular even after ridging".into(),
        )),
    }
}

fn squared_distance(a: &[f64], b: &[f64], sinv: &DMatrix<f64>) -> f64 {
    let k = a.len();
    let d = DVector::from_iterator(k, a.iter().zip(b).map(|(x, y)| x - y));
    (d.transpose() * sinv * d)[(0, 0)].max(0.0)
}

/// Match each treated unit to its nearest control by Mahalanobis
/// distance, without replacement.
///
/// Treated units are processed hardest first: the one whose nearest
/// control is farthest gets first pick, which protects poorly supported
/// units from having their only good match taken. Ties break toward the
/// lower unit id, so the result is deterministic and independent of the
/// order of `units`. When controls run out the leftover treated units
/// are dropped and counted.
pub fn match_nearest(units: &[MatchUnit]) -> Result<MatchedSample> {
    let k = validate_units(units)?;
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_unstable_by_key(|&i| units[i].id);

    let treated: Vec<usize> = order.iter().copied().filter(|&i| units[i].treated).collect();
    let controls: Vec<usize> = order.iter().copied().filter(|&i| !units[i].treated).collect();
    if treated.is_empty() {
        return Err(CoreError::insufficient("treated units", 1, 0));
    }
    if controls.is_empty() {
        return Err(CoreError::insufficient("control units", 1, 0));
    }

    let sinv = inverse_covariance(units, &order, k)?;
    let d2 = |t: usize, c: usize| {
        squared_distance(&units[t].covariates, &units[c].covariates, &sinv)
    };

    // Nearest-control distance decides the processing order.
    let mut queue: Vec<(usize, f64)> = treated
        .iter()
        .map(|&t| (t, controls.iter().map(|&c| d2(t, c)).fold(f64::INFINITY, f64::min)))
        .collect();
    // Stable sort on descending distance keeps ties in id order.
    queue.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut taken = vec![false; controls.len()];
    let mut remaining = controls.len();
    let mut pairs = Vec::with_capacity(treated.len().min(controls.len()));
    let mut distances = Vec::with_capacity(pairs.capacity());
    for &(t, _) in &queue {
        if remaining == 0 {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for (ci, &c) in controls.iter().enumerate() {
            if taken[ci] {
                continue;
            }
            let d = d2(t, c);
            // Strict < keeps the first (lowest-id) control on a tie.
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((ci, d));
            }
        }
        let (ci, d) = best.expect("remaining > 0 guarantees an available control");
        taken[ci] = true;
        remaining -= 1;
        pairs.push((t, controls[ci]));
        distances.push(d.sqrt());
    }

    let unmatched_treated = treated.len() - pairs.len();
    let mut zip: Vec<((usize, usize), f64)> = pairs.into_iter().zip(distances).collect();
    zip.sort_by_key(|&((t, _), _)| units[t].id);
    let (pairs, distances) = zip.into_iter().unzip();
    Ok(MatchedSample {
        pairs,
        distances,
        n_treated: treated.len(),
        n_control: controls.len(),
        unmatched_treated,
    })
}

/// Balance of one covariate before and after matching, as standardized
/// mean differences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariateBalance {
    pub name: String,
    pub smd_before: f64,
    pub smd_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceReport {
    pub covariates: Vec<CovariateBalance>,
    pub n_pairs: usize,
    pub n_treated_before: usize,
    pub n_control_before: usize,
}

impl BalanceReport {
    pub fn max_abs_smd_after(&self) -> f64 {
        self.covariates.iter().map(|c| c.smd_after.abs()).fold(0.0, f64::max)
    }

    /// Covariates whose post-match |SMD| exceeds `cutoff`.
    pub fn flagged(&self, cutoff: f64) -> Vec<&CovariateBalance> {
        self.covariates.iter().filter(|c| c.smd_after.abs() > cutoff).collect()
    }
}

// Mean of covariate j over the given unit indices.
fn group_mean(units: &[MatchUnit], idx: &[usize], j: usize) -> f64 {
    idx.iter().map(|&i| units[i].covariates[j]).sum::<f64>() / idx.len() as f64
}

fn group_var(units: &[MatchUnit], idx: &[usize], j: usize) -> f64 {
    if idx.len() < 2 {
        return 0.0;
    }
    let m = group_mean(units, idx, j);
    idx.iter().map(|&i| (units[i].covariates[j] - m).powi(2)).sum::<f64>()
        / (idx.len() - 1) as f64
}

/// Standardized mean differences per covariate, before and after
/// matching. Both use the pre-match pooled standard deviation
/// sqrt((var_T + var_C) / 2), so the two numbers are on the same scale.
/// A zero pooled sd yields 0 when the means agree and +/-infinity when
/// they do not.
pub fn balance_report(
    units: &[MatchUnit],
    sample: &MatchedSample,
    covariates: &[Covariate],
) -> Result<BalanceReport> {
    let k = validate_units(units)?;
    if covariates.len() != k {
        return Err(CoreError::Config(format!(
            "{} covariate names for {k}-dimensional units",
            covariates.len()
        )));
    }
    if sample.pairs.is_empty() {
        return Err(CoreError::insufficient("matched pairs", 1, 0));
    }

    // Groups in id order, so the report is input-permutation invariant.
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_unstable_by_key(|&i| units[i].id);
    let pre_t: Vec<usize> = order.iter().copied().filter(|&i| units[i].treated).collect();
    let pre_c: Vec<usize> = order.iter().copied().filter(|&i| !units[i].treated).collect();
    let post_t: Vec<usize> = sample.pairs.iter().map(|&(t, _)| t).collect();
    let post_c: Vec<usize> = sample.pairs.iter().map(|&(_, c)| c).collect();

    let smd = |num: f64, sd: f64| {
        if sd > 0.0 {
            num / sd
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(num)
        }
    };

    let rows = (0..k)
        .map(|j| {
            let sd_pool = ((group_var(units, &pre_t, j) + group_var(units, &pre_c, j)) / 2.0)
                .sqrt();
            CovariateBalance {
                name: covariates[j].name(),
                smd_before: smd(
                    group_mean(units, &pre_t, j) - group_mean(units, &pre_c, j),
                    sd_pool,
                ),
                smd_after: smd(
                    group_mean(units, &post_t, j) - group_mean(units, &post_c, j),
                    sd_pool,
                ),
            }
        })
        .collect();

    Ok(BalanceReport {
        covariates: rows,
        n_pairs: sample.pairs.len(),
        n_treated_before: pre_t.len(),
        n_control_before: pre_c.len(),
    })
}
