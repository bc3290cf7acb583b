//! Residual diagnostics: White's heteroskedasticity test,
//! Breusch-Godfrey serial correlation, and the CUSUM stability test on
//! recursive residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ArdlFit;
use crate::error::{CoreError, Result};
use crate::estimate::{ols_fit, tail_probability, CovEstimator, TailDist};

/// An LM-style test: n times the auxiliary R-squared against chi-square.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LmTest {
    pub stat: f64,
    pub p_value: f64,
    pub df: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CusumResult {
    /// Cumulative sums of scaled recursive residuals.
    pub path: Vec<f64>,
    /// 5% significance boundary per path point (symmetric about zero).
    pub bounds: Vec<f64>,
    pub stable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub white: LmTest,
    pub breusch_godfrey: LmTest,
    pub bg_order: usize,
    pub cusum: CusumResult,
}

/// Columns with no variation, which must not enter the product set.
fn is_constant_col(x: &DMatrix<f64>, c: usize) -> bool {
    let col = x.column(c);
    let first = col[0];
    col.iter().all(|v| (v - first).abs() < 1e-12)
}

/// Keeps only columns that extend the span of those already kept, by
/// modified Gram-Schmidt with a relative tolerance. The response's own
/// scale never matters because only R-squared is used downstream.
fn independent_columns(cols: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for col in cols {
        let norm0 = col.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut v = col.clone();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        if v.norm() > 1e-8 * norm0 {
            basis.push(&v / v.norm());
            kept.push(col);
        }
    }
    kept
}

/// White's test: the squared residuals regressed on the original
/// regressors, their squares, and their cross products. `x` is the full
/// design including any constant. The statistic is n times the auxiliary
/// R-squared with degrees of freedom equal to the auxiliary rank minus
/// one, so structurally duplicate products (dummies, interactions) do
/// not inflate the reference distribution.
pub fn white_test(x: &DMatrix<f64>, residuals: &DVector<f64>) -> Result<LmTest> {
    let n = x.nrows();
    if n != residuals.len() {
        return Err(CoreError::Config("residual/design length mismatch".into()));
    }
    let vary: Vec<usize> = (0..x.ncols()).filter(|&c| !is_constant_col(x, c)).collect();
    if vary.is_empty() {
        return Err(CoreError::Domain(
            "White test needs at least one non-constant regressor".into(),
        ));
    }
    let mut cols: Vec<DVector<f64>> = Vec::new();
    cols.push(DVector::from_element(n, 1.0));
    for &c in &vary {
        cols.push(x.column(c).into_owned());
    }
    for (a, &ca) in vary.iter().enumerate() {
        for &cb in &vary[a..] {
            cols.push(x.column(ca).component_mul(&x.column(cb)));
        }
    }
    let kept = independent_columns(cols);
    let df = kept.len() - 1;
    if df == 0 {
        return Err(CoreError::Domain(
            "White auxiliary regression is degenerate".into(),
        ));
    }
    if n <= kept.len() + 2 {
        return Err(CoreError::insufficient(
            "observations for the White auxiliary regression",
            kept.len() + 3,
            n,
        ));
    }
    let aux = DMatrix::from_columns(&kept);
    let e2 = residuals.map(|e| e * e);
    let fit = ols_fit(&e2, &aux, CovEstimator::Classical)?;
    let stat = n as f64 * fit.r_squared;
    let p_value = tail_probability(TailDist::ChiSquare { df: df as f64 }, stat)?;
    Ok(LmTest { stat, p_value, df })
}

/// Breusch-Godfrey LM test of residual autocorrelation up to `order`.
/// The lagged residuals are zero-padded so the auxiliary regression runs
/// over the full sample.
pub fn breusch_godfrey(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    order: usize,
) -> Result<LmTest> {
    let n = x.nrows();
    if n != residuals.len() {
        return Err(CoreError::Config("residual/design length mismatch".into()));
    }
    if order == 0 {
        return Err(CoreError::Config("autocorrelation order must be positive".into()));
    }
    if n <= x.ncols() + order + 2 {
        return Err(CoreError::insufficient(
            "observations for the Breusch-Godfrey regression",
            x.ncols() + order + 3,
            n,
        ));
    }
    let mut cols: Vec<DVector<f64>> = (0..x.ncols()).map(|c| x.column(c).into_owned()).collect();
    if !(0..x.ncols()).any(|c| is_constant_col(x, c)) {
        cols.insert(0, DVector::from_element(n, 1.0));
    }
    for lag in 1..=order {
        cols.push(DVector::from_fn(n, |t, _| {
            if t >= lag {
                residuals[t - lag]
            } else {
                0.0
            }
        }));
    }
    let aux = DMatrix::from_columns(&independent_columns(cols));
    let fit = ols_fit(residuals, &aux, CovEstimator::Classical)?;
    let stat = n as f64 * fit.r_squared;
    let p_value = tail_probability(TailDist::ChiSquare { df: order as f64 }, stat)?;
    Ok(LmTest { stat, p_value, df: order })
}

/// Standardized one-step-ahead prediction errors, computed with
/// recursive least-squares updates. Returns the residuals and the index
/// of the first predicted row (normally k).
pub fn recursive_residuals(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(Vec<f64>, usize)> {
    let n = x.nrows();
    let k = x.ncols();
    if n <= k + 1 {
        return Err(CoreError::insufficient("observations for recursion", k + 2, n));
    }
    // The startup window must be invertible; grow it past k if needed
    // (step dummies can zero out early rows).
    let mut m = k;
    let inv = loop {
        if m >= n {
            return Err(CoreError::Collinear(
                "no invertible startup window for recursive residuals".into(),
            ));
        }
        let x0 = x.rows(0, m);
        let xtx = x0.transpose() * x0;
        match xtx.clone().try_inverse() {
            Some(inv) if xtx.iter().all(|v| v.is_finite()) => break inv,
            _ => m += 1,
        }
    };
    let x0 = x.rows(0, m);
    let y0 = y.rows(0, m);
    let mut minv = inv;
    let mut b = &minv * (x0.transpose() * y0);
    let mut w = Vec::with_capacity(n - m);
    for t in m..n {
        let xt = x.row(t).transpose();
        let d = 1.0 + (xt.transpose() * &minv * &xt)[0];
        let err = y[t] - (x.row(t) * &b)[0];
        w.push(err / d.sqrt());
        let gain = &minv * &xt / d;
        b += &gain * err;
        minv -= &gain * (xt.transpose() * &minv);
    }
    Ok((w, m))
}

/// Brown-Durbin-Evans CUSUM of recursive residuals with 5% boundaries
/// 0.948 (sqrt(r) + 2 j / sqrt(r)) where r is the recursion length.
pub fn cusum(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<CusumResult> {
    let (w, m) = recursive_residuals(x, y)?;
    let r = w.len();
    if r < 3 {
        return Err(CoreError::insufficient("recursive residuals", 3, r));
    }
    let mean = w.iter().sum::<f64>() / r as f64;
    let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
    let sigma = var.sqrt();
    if sigma <= 0.0 {
        return Err(CoreError::Numeric("degenerate recursive residual variance".into()));
    }
    let sqrt_r = (r as f64).sqrt();
    let mut path = Vec::with_capacity(r);
    let mut bounds = Vec::with_capacity(r);
    let mut acc = 0.0;
    let mut stable = true;
    for (j, wi) in w.iter().enumerate() {
        acc += wi / sigma;
        let bound = 0.948 * (sqrt_r + 2.0 * (j + 1) as f64 / sqrt_r);
        if acc.abs() >= bound {
            stable = false;
        }
        path.push(acc);
        bounds.push(bound);
    }
    let _ = m;
    Ok(CusumResult { path, bounds, stable })
}

/// Runs the full diagnostic battery on a fitted model.
pub fn diagnostics(fit: &ArdlFit, bg_order: usize) -> Result<DiagnosticsReport> {
    if fit.ols.n <= fit.ols.k + 5 {
        return Err(CoreError::insufficient(
            "residual degrees of freedom for diagnostics",
            fit.ols.k + 6,
            fit.ols.n,
        ));
    }
    Ok(DiagnosticsReport {
        white: white_test(&fit.design, &fit.ols.residuals)?,
        breusch_godfrey: breusch_godfrey(&fit.design, &fit.ols.residuals, bg_order)?,
        bg_order,
        cusum: cusum(&fit.design, &fit.y_used)?,
    })
}
