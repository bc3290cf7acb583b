//! Error-correction regression and the cointegration bounds test.
//!
//! The EC regression explains Delta y_t with the lagged level y_{t-1},
//! the contemporaneous levels of the independent series, lagged
//! differences of both, and the deterministic/exogenous terms. Its
//! column space equals the level form's, so fitted values match
//! [`super::fit_ardl`] row for row. The bounds test compares the joint
//! F-statistic on the level terms (and the t-ratio on y_{t-1}) against
//! critical bounds simulated under purely I(0) and purely I(1)
//! regressors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::tables;
use super::{prepare, ArdlSpec, Series};
use crate::error::{CoreError, Result};
use crate::estimate::{ols_fit, CovEstimator, OlsFit};

/// Deterministic-term configuration of the bounds test. Case III is an
/// unrestricted constant; case V adds an unrestricted trend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsCase {
    UnrestrictedConstant,
    UnrestrictedConstantTrend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsDecision {
    Cointegration,
    NoCointegration,
    Inconclusive,
}

/// One significance row: the statistic's I(0) and I(1) critical bounds
/// stored with `lower <= upper` numerically.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundsBand {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsTestResult {
    pub f_stat: f64,
    /// Classical t-ratio on the y_{t-1} level term.
    pub t_stat: f64,
    pub case: BoundsCase,
    /// Number of independent series.
    pub k: usize,
    /// F bounds at 10%, 5%, 1%; lower is the I(0) bound.
    pub f_bounds: [BoundsBand; 3],
    /// t bounds at 10%, 5%, 1%; both negative, lower is the I(1) bound.
    pub t_bounds: [BoundsBand; 3],
    /// F-statistic verdict at the 5% bounds.
    pub decision: BoundsDecision,
}

/// The estimated error-correction regression.
///
/// Always fit with the classical covariance: the bounds-test
/// studentization assumes it, and robust long-run inference comes from
/// [`super::to_ec_form`] instead.
#[derive(Debug, Clone)]
pub struct EcRegression {
    pub ols: OlsFit,
    pub case: BoundsCase,
    pub spec: ArdlSpec,
    pub k_vars: usize,
    /// Design column of the y_{t-1} level term.
    pub y_level_col: usize,
    /// Design columns of the independent level terms.
    pub x_level_cols: Vec<usize>,
    pub design: DMatrix<f64>,
    /// The differenced response.
    pub dy: DVector<f64>,
    /// Lagged level of y aligned with the design rows, for reconstructing
    /// level-form fitted values.
    pub y_lag1: DVector<f64>,
}

/// Estimates the error-correction regression for spec (p, q) on the same
/// trimmed sample as the level form.
pub fn fit_ec_regression(
    y: &Series,
    xs: &[Series],
    exog: &[Series],
    spec: &ArdlSpec,
) -> Result<EcRegression> {
    spec.validate()?;
    if !spec.with_constant {
        return Err(CoreError::Config(
            "the error-correction form is tabulated with an unrestricted constant; \
             enable with_constant"
                .into(),
        ));
    }
    let prep = prepare(y, xs, exog)?;
    let n = prep.y.len();
    let p = spec.p;
    let q = spec.q;
    let start = p.max(q);
    let rows = n.saturating_sub(start);
    let det = spec.det_terms();
    let k = det + 1 + xs.len() + (p - 1) + xs.len() * q + prep.exog.len();
    if rows <= k + 10 {
        return Err(CoreError::insufficient(
            "observations after lag trimming",
            k + 11,
            rows,
        ));
    }

    let mut design = DMatrix::zeros(rows, k);
    let mut dy = DVector::zeros(rows);
    let mut y_lag1 = DVector::zeros(rows);
    let y_level_col = det;
    let x_level_cols: Vec<usize> = (0..xs.len()).map(|j| det + 1 + j).collect();
    for (r, t) in (start..n).enumerate() {
        let mut c = 0;
        design[(r, c)] = 1.0;
        c += 1;
        if spec.with_trend {
            design[(r, c)] = t as f64;
            c += 1;
        }
        design[(r, c)] = prep.y[t - 1];
        c += 1;
        for x in &prep.xs {
            design[(r, c)] = x[t];
            c += 1;
        }
        for i in 1..p {
            design[(r, c)] = prep.y[t - i] - prep.y[t - i - 1];
            c += 1;
        }
        for x in &prep.xs {
            for i in 0..q {
                design[(r, c)] = x[t - i] - x[t - i - 1];
                c += 1;
            }
        }
        for e in &prep.exog {
            design[(r, c)] = e[t];
            c += 1;
        }
        debug_assert_eq!(c, k);
        dy[r] = prep.y[t] - prep.y[t - 1];
        y_lag1[r] = prep.y[t - 1];
    }
    let ols = ols_fit(&dy, &design, CovEstimator::Classical)?;
    let case = if spec.with_trend {
        BoundsCase::UnrestrictedConstantTrend
    } else {
        BoundsCase::UnrestrictedConstant
    };
    Ok(EcRegression {
        ols,
        case,
        spec: *spec,
        k_vars: xs.len(),
        y_level_col,
        x_level_cols,
        design,
        dy,
        y_lag1,
    })
}

/// F-statistic for the joint null that every level-term coefficient is
/// zero, from the restricted-vs-unrestricted residual sums of squares.
pub fn level_f_stat(ec: &EcRegression) -> Result<f64> {
    let n = ec.design.nrows();
    let k = ec.design.ncols();
    let m = 1 + ec.x_level_cols.len();
    let keep: Vec<usize> = (0..k)
        .filter(|c| *c != ec.y_level_col && !ec.x_level_cols.contains(c))
        .collect();
    let rss_r = if keep.is_empty() {
        ec.dy.iter().map(|v| v * v).sum()
    } else {
        let restricted = ec.design.select_columns(keep.iter());
        ols_fit(&ec.dy, &restricted, CovEstimator::Classical)?.rss
    };
    let rss_u = ec.ols.rss;
    Ok(((rss_r - rss_u) / m as f64) / (rss_u / (n - k) as f64))
}

pub fn bounds_test(ec: &EcRegression) -> Result<BoundsTestResult> {
    let f_stat = level_f_stat(ec)?;
    let se = ec.ols.standard_errors();
    let t_stat = ec.ols.coefficients[ec.y_level_col] / se[ec.y_level_col];
    let k = ec.k_vars;
    let (f_bounds, t_bounds) = tables::bounds_bands(ec.case, k)?;
    // The 5% row drives the decision; rows are ordered 10%, 5%, 1%.
    let five = f_bounds[1];
    let decision = if f_stat > five.upper {
        BoundsDecision::Cointegration
    } else if f_stat < five.lower {
        BoundsDecision::NoCointegration
    } else {
        BoundsDecision::Inconclusive
    };
    Ok(BoundsTestResult {
        f_stat,
        t_stat,
        case: ec.case,
        k,
        f_bounds,
        t_bounds,
        decision,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testutil::Lcg;
    use super::super::{fit_ardl, to_ec_form};
    use super::*;
    use approx::assert_abs_diff_eq;

    fn noisy_pair(seed: u64, n: usize) -> (Series, Series) {
        let mut rng = Lcg(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mut y = vec![0.0; n];
        for t in 3..n {
            y[t] = 0.2 + 0.4 * y[t - 1] - 0.15 * y[t - 2] + 0.3 * x[t] + 0.1 * x[t - 1]
                + 0.3 * rng.normal();
        }
        (Series::new("y", y), Series::new("x", x))
    }

    #[test]
    fn ec_regression_reproduces_the_reparameterized_coefficients() {
        for (p, q) in [(1usize, 0usize), (1, 1), (2, 1), (3, 2)] {
            let (y, x) = noisy_pair(100 + (p * 10 + q) as u64, 400);
            let spec = ArdlSpec {
                p,
                q,
                with_constant: true,
                with_trend: false,
                cov: CovEstimator::Classical,
            };
            let xs = std::slice::from_ref(&x);
            let fit = fit_ardl(&y, xs, &[], &spec).unwrap();
            let ec = to_ec_form(&fit).unwrap();
            let reg = fit_ec_regression(&y, xs, &[], &spec).unwrap();

            // Coefficient on y_{t-1} is -alpha; on the x level, alpha*theta.
            assert_abs_diff_eq!(
                reg.ols.coefficients[reg.y_level_col],
                -ec.alpha,
                epsilon = 1e-8
            );
            assert_abs_diff_eq!(
                reg.ols.coefficients[reg.x_level_cols[0]],
                ec.alpha * ec.theta[0],
                epsilon = 1e-8
            );
            // Short-run blocks follow the levels in the layout.
            let base = reg.x_level_cols[0] + 1;
            for i in 0..p - 1 {
                assert_abs_diff_eq!(
                    reg.ols.coefficients[base + i],
                    ec.psi_y[i],
                    epsilon = 1e-8
                );
            }
            for i in 0..q {
                assert_abs_diff_eq!(
                    reg.ols.coefficients[base + (p - 1) + i],
                    ec.psi_x[(0, i)],
                    epsilon = 1e-8
                );
            }
            // Same column space, same projections: level fitted values
            // reconstruct from the difference-form ones.
            for r in 0..reg.design.nrows() {
                assert_abs_diff_eq!(
                    reg.ols.fitted[r] + reg.y_lag1[r],
                    fit.ols.fitted[r],
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn cointegrated_pair_is_detected() {
        // x is a random walk and y tracks it with stationary error, the
        // textbook cointegrated setup.
        let mut rng = Lcg(7);
        let n = 500;
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = x[t - 1] + rng.normal();
        }
        let mut y = vec![0.0; n];
        for t in 1..n {
            y[t] = 0.8 * x[t] + 0.5 * rng.normal();
        }
        let spec = ArdlSpec { p: 2, q: 1, with_constant: true, with_trend: false, cov: CovEstimator::Classical };
        let reg = fit_ec_regression(
            &Series::new("y", y),
            &[Series::new("x", x)],
            &[],
            &spec,
        )
        .unwrap();
        let res = bounds_test(&reg).unwrap();
        assert_eq!(res.decision, BoundsDecision::Cointegration);
        assert!(res.f_stat > res.f_bounds[2].upper, "f = {}", res.f_stat);
        assert!(res.t_stat < res.t_bounds[1].lower);
    }

    #[test]
    fn independent_random_walks_are_not_flagged() {
        let mut rng = Lcg(1234);
        let n = 500;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for t in 1..n {
            x[t] = x[t - 1] + rng.normal();
            y[t] = y[t - 1] + rng.normal();
        }
        let spec = ArdlSpec { p: 1, q: 0, with_constant: true, with_trend: false, cov: CovEstimator::Classical };
        let reg = fit_ec_regression(
            &Series::new("y", y),
            &[Series::new("x", x)],
            &[],
            &spec,
        )
        .unwrap();
        let res = bounds_test(&reg).unwrap();
        assert_ne!(res.decision, BoundsDecision::Cointegration);
    }

    #[test]
    fn band_ordering_and_level_monotonicity() {
        for case in [BoundsCase::UnrestrictedConstant, BoundsCase::UnrestrictedConstantTrend] {
            for k in 0..=3 {
                let (f, t) = tables::bounds_bands(case, k).unwrap();
                for band in f.iter().chain(t.iter()) {
                    assert!(band.lower <= band.upper, "case {case:?} k {k}");
                }
                // Stricter levels need larger F values.
                assert!(f[0].upper < f[1].upper && f[1].upper < f[2].upper);
                assert!(f[0].lower < f[1].lower && f[1].lower < f[2].lower);
            }
            assert!(tables::bounds_bands(case, 9).is_err());
        }
    }

    #[test]
    fn published_five_percent_bounds_are_reproduced() {
        // Pesaran, Shin and Smith (2001) report 4.94 / 5.73 for the
        // k = 1 unrestricted-constant case at 5%; the embedded simulated
        // table must sit close to that.
        let (f, _) = tables::bounds_bands(BoundsCase::UnrestrictedConstant, 1).unwrap();
        assert_abs_diff_eq!(f[1].lower, 4.94, epsilon = 0.35);
        assert_abs_diff_eq!(f[1].upper, 5.73, epsilon = 0.35);
        // And the t bound for the same case: -2.86 / -3.22.
        let (_, t) = tables::bounds_bands(BoundsCase::UnrestrictedConstant, 1).unwrap();
        assert_abs_diff_eq!(t[1].upper, -2.86, epsilon = 0.2);
        assert_abs_diff_eq!(t[1].lower, -3.22, epsilon = 0.2);
    }

    #[test]
    fn trendless_spec_requires_constant() {
        let (y, x) = noisy_pair(5, 200);
        let spec = ArdlSpec { p: 1, q: 1, with_constant: false, with_trend: false, cov: CovEstimator::Classical };
        assert!(matches!(
            fit_ec_regression(&y, &[x], &[], &spec),
            Err(CoreError::Config(_))
        ));
    }
}
