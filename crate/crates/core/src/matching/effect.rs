//! Outcome regression on the matched sample and a pairs bootstrap that
//! carries treatment misclassification through to the interval.
//!
//! The estimand is the average marginal effect (AME) of treatment on
//! the outcome over the matched units. When a confusion matrix for the
//! treatment classifier is supplied, the point estimate is rescaled by
//! the implied attenuation and each bootstrap replicate additionally
//! redraws treatment from its posterior given the observed label, so
//! the interval reflects classification error as well as sampling
//! error.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ConfusionMatrix, MatchUnit, MatchedSample};
use crate::error::{CoreError, Result};
use crate::estimate::{ols_fit, CovEstimator, OlsFit};
use crate::synth::mc::empirical_quantile;

/// Fewer bootstrap replicates than this gives percentile intervals too
/// coarse to report.
pub const MIN_BOOTSTRAP: usize = 500;

/// The fitted outcome regression on matched units: outcome on
/// intercept, treatment, centered covariates, treatment interactions
/// with the centered covariates, and (when it varies) the indicator
/// that the outcome tweet directly answered the reply.
#[derive(Debug, Clone)]
pub struct OutcomeModel {
    pub ols: OlsFit,
    /// Covariate means over the fitted rows; covariates are centered on
    /// these, so the treatment coefficient is already an average effect.
    pub centers: Vec<f64>,
    /// Whether the reply-to-reply indicator entered the design (it is
    /// dropped when constant, where it would duplicate the intercept).
    pub include_rr: bool,
    pub n_pairs: usize,
    // Mean of each centered covariate over the fitted rows. Zero up to
    // rounding, but the marginal effect uses it rather than assuming so.
    interaction_means: Vec<f64>,
}

// Shared by the observed fit and every bootstrap refit: rows are unit
// indices (a pair contributes both members), flags are the treatment
// values to regress on, which the bootstrap may have redrawn.
fn fit_rows(units: &[MatchUnit], rows: &[usize], flags: &[bool]) -> Result<OutcomeModel> {
    let n = rows.len();
    let k = units[rows[0]].covariates.len();
    if rows.iter().any(|&r| units[r].covariates.len() != k) {
        return Err(CoreError::Config("matched units disagree on covariate count".into()));
    }

    let mut centers = vec![0.0; k];
    for &r in rows {
        for j in 0..k {
            centers[j] += units[r].covariates[j];
        }
    }
    for c in centers.iter_mut() {
        *c /= n as f64;
    }
    for j in 0..k {
        let first = units[rows[0]].covariates[j];
        if rows.iter().all(|&r| units[r].covariates[j] == first) {
            return Err(CoreError::Collinear(format!(
                "covariate {j} is constant across the matched sample; drop it"
            )));
        }
    }

    let include_rr = rows.iter().any(|&r| units[r].reply_to_reply)
        && rows.iter().any(|&r| !units[r].reply_to_reply);
    let cols = 2 + 2 * k + usize::from(include_rr);
    if n <= cols {
        return Err(CoreError::insufficient("matched rows for the outcome model", cols + 1, n));
    }

    let mut x = DMatrix::zeros(n, cols);
    let mut y = DVector::zeros(n);
    for (i, (&r, &t)) in rows.iter().zip(flags).enumerate() {
        let u = &units[r];
        let tf = f64::from(t);
        x[(i, 0)] = 1.0;
        x[(i, 1)] = tf;
        for j in 0..k {
            let centered = u.covariates[j] - centers[j];
            x[(i, 2 + j)] = centered;
            x[(i, 2 + k + j)] = tf * centered;
        }
        if include_rr {
            x[(i, 2 + 2 * k)] = f64::from(u.reply_to_reply);
        }
        y[i] = u.outcome;
    }
    let ols = ols_fit(&y, &x, CovEstimator::RobustHc1)?;

    let mut interaction_means = vec![0.0; k];
    for &r in rows {
        for j in 0..k {
            interaction_means[j] += units[r].covariates[j] - centers[j];
        }
    }
    for m in interaction_means.iter_mut() {
        *m /= n as f64;
    }

    Ok(OutcomeModel { ols, centers, include_rr, n_pairs: n / 2, interaction_means })
}

/// Fit the outcome regression on the matched sample with observed
/// treatment.
pub fn fit_outcome_model(units: &[MatchUnit], sample: &MatchedSample) -> Result<OutcomeModel> {
    if sample.pairs.is_empty() {
        return Err(CoreError::insufficient("matched pairs", 1, 0));
    }
    let mut rows = Vec::with_capacity(2 * sample.pairs.len());
    for &(t, c) in &sample.pairs {
        if t >= units.len() || c >= units.len() {
            return Err(CoreError::Config("matched pair index outside the unit slice".into()));
        }
        if !units[t].treated || units[c].treated {
            return Err(CoreError::Config(
                "matched pair does not pair a treated unit with a control".into(),
            ));
        }
        rows.push(t);
        rows.push(c);
    }
    let flags: Vec<bool> = rows.iter().map(|&r| units[r].treated).collect();
    fit_rows(units, &rows, &flags)
}

/// Average marginal effect of treatment: the mean over fitted rows of
/// the difference between the model's prediction with treatment on and
/// off. With centered covariates this is the treatment coefficient
/// plus a rounding-sized interaction term.
pub fn marginal_effect(model: &OutcomeModel) -> f64 {
    let k = model.centers.len();
    let b = &model.ols.coefficients;
    let mut ame = b[1];
    for j in 0..k {
        ame += b[2 + k + j] * model.interaction_means[j];
    }
    ame
}

/// Point estimate and bootstrap interval for the matched AME.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectEstimate {
    pub ame: f64,
    /// Percentile 95% interval, widened if needed to contain `ame`.
    pub ci95: (f64, f64),
    /// Smoothed two-sided bootstrap p-value against zero.
    pub p_value: f64,
    pub n_pairs: usize,
    /// Replicates that produced an estimate.
    pub replicates: usize,
    /// Replicates dropped because the refit degenerated.
    pub skipped: usize,
    /// (false-positive, false-negative) rates applied, if any.
    pub error_rates: Option<(f64, f64)>,
}

// Misclassification geometry for a balanced matched sample, where the
// observed-treated share is exactly one half. `a1`/`a0` are P(truly
// treated | observed label), `delta1` the attenuation of a regression
// on the observed label relative to truth, `delta2` the further
// attenuation from regressing on a redraw.
struct ErrorGeometry {
    a1: f64,
    a0: f64,
    delta1: f64,
    delta2: f64,
}

fn error_geometry(fpr: f64, fnr: f64) -> Result<ErrorGeometry> {
    if fpr + fnr >= 1.0 {
        return Err(CoreError::Domain(format!(
            "error rates fpr={fpr:.3} + fnr={fnr:.3} >= 1; the label carries no signal"
        )));
    }
    if fpr >= 0.5 || fnr >= 0.5 {
        return Err(CoreError::Domain(format!(
            "error rate above one half (fpr={fpr:.3}, fnr={fnr:.3}) is incompatible with \
             a balanced matched sample"
        )));
    }
    let p_w = 0.5;
    let pi = ((p_w - fpr) / (1.0 - fpr - fnr)).clamp(1e-6, 1.0 - 1e-6);
    let a1 = ((1.0 - fnr) * pi / p_w).clamp(0.0, 1.0);
    let a0 = (fnr * pi / (1.0 - p_w)).clamp(0.0, 1.0);
    let delta1 = a1 - a0;
    let delta2 = delta1 * p_w * (1.0 - p_w) / (pi * (1.0 - pi));
    Ok(ErrorGeometry { a1, a0, delta1, delta2 })
}

/// Pairs bootstrap of the matched AME, optionally propagating
/// classifier error.
///
/// Matched pairs are resampled with replacement and the outcome model
/// refit on each resample. With a confusion matrix, treatment is also
/// redrawn per row from its posterior given the observed label, and
/// both the point estimate and the replicates are rescaled by the
/// attenuation the error rates imply, so the percentile interval
/// reflects uncertainty about who was truly treated. A perfect matrix
/// (or none) reduces to the plain pairs bootstrap.
pub fn error_aware_bootstrap(
    units: &[MatchUnit],
    sample: &MatchedSample,
    confusion: Option<&ConfusionMatrix>,
    b_boot: usize,
    seed: u64,
) -> Result<EffectEstimate> {
    if b_boot < MIN_BOOTSTRAP {
        return Err(CoreError::Config(format!(
            "{b_boot} bootstrap replicates; at least {MIN_BOOTSTRAP} are required"
        )));
    }
    let (fpr, fnr) = match confusion {
        Some(cm) => {
            cm.validate()?;
            (cm.fpr(), cm.fnr())
        }
        None => (0.0, 0.0),
    };
    let geom = error_geometry(fpr, fnr)?;
    let plain = fpr == 0.0 && fnr == 0.0;

    let observed = fit_outcome_model(units, sample)?;
    let ame = marginal_effect(&observed) / geom.delta1;

    let n_pairs = sample.pairs.len();
    let mut kept = Vec::with_capacity(b_boot);
    let mut skipped = 0usize;
    let mut rows = Vec::with_capacity(2 * n_pairs);
    let mut flags = Vec::with_capacity(2 * n_pairs);
    for rep in 0..b_boot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        rows.clear();
        flags.clear();
        for _ in 0..n_pairs {
            let (t, c) = sample.pairs[rng.random_range(0..n_pairs)];
            rows.push(t);
            rows.push(c);
        }
        if plain {
            flags.extend(rows.iter().map(|&r| units[r].treated));
        } else {
            for &r in &rows {
                let p = if units[r].treated { geom.a1 } else { geom.a0 };
                flags.push(rng.random_bool(p));
            }
        }
        match fit_rows(units, &rows, &flags) {
            Ok(model) => kept.push(marginal_effect(&model) / (geom.delta1 * geom.delta2)),
            // A redraw can degenerate (for instance all rows treated);
            // such replicates are dropped and counted.
            Err(_) => skipped += 1,
        }
    }
    if kept.len() < b_boot / 2 {
        return Err(CoreError::Numeric(format!(
            "{skipped} of {b_boot} bootstrap replicates degenerated"
        )));
    }

    kept.sort_by(f64::total_cmp);
    let lo = empirical_quantile(&kept, 0.025).min(ame);
    let hi = empirical_quantile(&kept, 0.975).max(ame);
    let m = kept.len() as f64;
    let below = kept.iter().filter(|&&v| v <= 0.0).count() as f64;
    let above = kept.iter().filter(|&&v| v >= 0.0).count() as f64;
    let p_value = (2.0 * ((below + 1.0) / (m + 1.0)).min((above + 1.0) / (m + 1.0))).min(1.0);

    Ok(EffectEstimate {
        ame,
        ci95: (lo, hi),
        p_value,
        n_pairs,
        replicates: kept.len(),
        skipped,
        error_rates: confusion.map(|cm| (cm.fpr(), cm.fnr())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ardl::testutil::Lcg;

    // A matched sample of `n` pairs where unit 2p is treated and 2p+1
    // its control; covariates and outcomes come from the closure.
    fn paired_units(
        n: usize,
        mut make: impl FnMut(usize, bool) -> (Vec<f64>, f64, bool),
    ) -> (Vec<MatchUnit>, MatchedSample) {
        let mut units = Vec::with_capacity(2 * n);
        for p in 0..n {
            for &treated in &[true, false] {
                let (covariates, outcome, reply_to_reply) = make(p, treated);
                units.push(MatchUnit {
                    id: (0, units.len()),
                    treated,
                    covariates,
                    outcome,
                    reply_to_reply,
                });
            }
        }
        let pairs: Vec<(usize, usize)> = (0..n).map(|p| (2 * p, 2 * p + 1)).collect();
        let sample = MatchedSample {
            distances: vec![0.0; n],
            n_treated: n,
            n_control: n,
            unmatched_treated: 0,
            pairs,
        };
        (units, sample)
    }

    #[test]
    fn ame_recovers_a_clean_additive_effect() {
        // Outcome exactly linear with no interaction: the AME must equal
        // the planted treatment coefficient to rounding.
        let mut rng = Lcg(31);
        let (units, sample) = paired_units(40, |p, treated| {
            let x1 = rng.uniform();
            let x2 = rng.normal();
            let y = 0.2 + 0.5 * f64::from(treated) + 0.3 * x1 - 0.1 * x2;
            (vec![x1, x2], y, p % 3 == 0)
        });
        let model = fit_outcome_model(&units, &sample).unwrap();
        assert!(model.include_rr);
        let ame = marginal_effect(&model);
        assert!((ame - 0.5).abs() < 1e-10, "ame {ame}");
    }

    #[test]
    fn marginal_effect_matches_per_unit_toggling() {
        let mut rng = Lcg(47);
        let (units, sample) = paired_units(30, |_, treated| {
            let x1 = rng.uniform();
            let x2 = rng.uniform();
            let y = 0.3 * f64::from(treated) + x1 - 0.4 * x2 * f64::from(treated)
                + 0.1 * rng.normal();
            (vec![x1, x2], y, false)
        });
        let model = fit_outcome_model(&units, &sample).unwrap();

        // Brute-force G-computation: toggle treatment per fitted row.
        let b = &model.ols.coefficients;
        let k = model.centers.len();
        let mut total = 0.0;
        let mut count = 0.0;
        for &(t, c) in &sample.pairs {
            for &r in &[t, c] {
                let mut diff = b[1];
                for j in 0..k {
                    diff += b[2 + k + j] * (units[r].covariates[j] - model.centers[j]);
                }
                total += diff;
                count += 1.0;
            }
        }
        assert!((marginal_effect(&model) - total / count).abs() < 1e-10);
    }

    #[test]
    fn perfect_error_matrix_reduces_to_the_plain_bootstrap() {
        let mut rng = Lcg(53);
        let (units, sample) = paired_units(50, |_, treated| {
            let x = rng.uniform();
            (vec![x], 0.4 * f64::from(treated) + 0.2 * x + 0.05 * rng.normal(), false)
        });
        let plain = error_aware_bootstrap(&units, &sample, None, 600, 7).unwrap();
        let perfect = ConfusionMatrix::perfect(40, 60);
        let aware = error_aware_bootstrap(&units, &sample, Some(&perfect), 600, 7).unwrap();
        assert_eq!(plain.ame, aware.ame);
        assert_eq!(plain.ci95, aware.ci95);
        assert_eq!(plain.p_value, aware.p_value);
        assert_eq!(aware.error_rates, Some((0.0, 0.0)));
        assert_eq!(plain.error_rates, None);
        assert!(plain.ci95.0 <= plain.ame && plain.ame <= plain.ci95.1);
    }

    #[test]
    fn classifier_error_widens_the_interval_and_rescales_the_point() {
        let mut rng = Lcg(61);
        let (units, sample) = paired_units(80, |_, treated| {
            let x = rng.uniform();
            (vec![x], 0.3 * f64::from(treated) + 0.1 * x + 0.05 * rng.normal(), false)
        });
        let plain = error_aware_bootstrap(&units, &sample, None, 600, 11).unwrap();
        // fpr = 20/100, fnr = 20/100.
        let cm = ConfusionMatrix { tp: 80, fp: 20, fn_: 20, tn: 80 };
        let aware = error_aware_bootstrap(&units, &sample, Some(&cm), 600, 11).unwrap();

        // With both rates at 0.2 the attenuation is 0.6, so the
        // corrected point is the plain one divided by 0.6.
        assert!((aware.ame * 0.6 - plain.ame).abs() < 1e-12);
        let plain_width = plain.ci95.1 - plain.ci95.0;
        let aware_width = aware.ci95.1 - aware.ci95.0;
        assert!(
            aware_width > plain_width,
            "aware {aware_width} vs plain {plain_width}"
        );
        assert!(aware.ci95.0 <= aware.ame && aware.ame <= aware.ci95.1);
    }

    #[test]
    fn correction_recovers_the_truth_under_misclassification() {
        // Observed labels err at 20% in both directions; the outcome
        // responds to the true state. The corrected estimate must land
        // on the planted effect, not its attenuated shadow.
        let fnr = 0.2;
        let geom = error_geometry(0.2, fnr).unwrap();
        let mut rng = Lcg(71);
        let (units, sample) = paired_units(1500, |_, observed| {
            let p_true = if observed { geom.a1 } else { geom.a0 };
            let t_true = rng.uniform() < p_true;
            let x = rng.uniform();
            let y = 0.1 + 0.5 * f64::from(t_true) + 0.3 * x + 0.02 * rng.normal();
            (vec![x], y, false)
        });
        let cm = ConfusionMatrix { tp: 800, fp: 200, fn_: 200, tn: 800 };
        let est = error_aware_bootstrap(&units, &sample, Some(&cm), 500, 3).unwrap();
        assert!((est.ame - 0.5).abs() < 0.05, "ame {}", est.ame);
        assert!(est.ci95.0 < 0.5 && 0.5 < est.ci95.1);
        assert!(est.p_value < 0.01);
        assert_eq!(est.skipped, 0);
    }

    #[test]
    fn same_seed_reproduces_different_seed_varies() {
        let mut rng = Lcg(83);
        let (units, sample) = paired_units(40, |_, treated| {
            let x = rng.uniform();
            (vec![x], 0.2 * f64::from(treated) + x + 0.1 * rng.normal(), false)
        });
        let cm = ConfusionMatrix { tp: 90, fp: 10, fn_: 10, tn: 90 };
        let a = error_aware_bootstrap(&units, &sample, Some(&cm), 500, 19).unwrap();
        let b = error_aware_bootstrap(&units, &sample, Some(&cm), 500, 19).unwrap();
        let c = error_aware_bootstrap(&units, &sample, Some(&cm), 500, 20).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ame, c.ame);
        assert_ne!(a.ci95, c.ci95);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let mut rng = Lcg(97);
        let (units, sample) = paired_units(20, |_, treated| {
            let x = rng.uniform();
            (vec![x], f64::from(treated) + x, false)
        });

        let too_few = error_aware_bootstrap(&units, &sample, None, MIN_BOOTSTRAP - 1, 1);
        assert!(matches!(too_few, Err(CoreError::Config(_))));

        // fpr = fnr = 0.9: the label is anti-informative.
        let flipped = ConfusionMatrix { tp: 10, fp: 90, fn_: 90, tn: 10 };
        assert!(matches!(
            error_aware_bootstrap(&units, &sample, Some(&flipped), 500, 1),
            Err(CoreError::Domain(_))
        ));

        // fpr = 0.6 alone is impossible when half the sample is labeled
        // treated.
        let lopsided = ConfusionMatrix { tp: 100, fp: 60, fn_: 0, tn: 40 };
        assert!(matches!(
            error_aware_bootstrap(&units, &sample, Some(&lopsided), 500, 1),
            Err(CoreError::Domain(_))
        ));

        // A covariate that never varies cannot be centered into a
        // usable column.
        let (const_units, const_sample) = paired_units(20, |_, treated| {
            (vec![0.7], f64::from(treated), false)
        });
        assert!(matches!(
            fit_outcome_model(&const_units, &const_sample),
            Err(CoreError::Collinear(_))
        ));

        // Two pairs cannot support the five-column design.
        let mut rng2 = Lcg(103);
        let (tiny_units, tiny_sample) = paired_units(2, |_, treated| {
            (vec![rng2.uniform()], f64::from(treated), false)
        });
        assert!(matches!(
            fit_outcome_model(&tiny_units, &tiny_sample),
            Err(CoreError::Insufficient { .. })
        ));
    }
}
