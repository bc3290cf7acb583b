//! Distributed-lag time series models: ARDL(p,q) estimation, the
//! error-correction reparameterization with long-run coefficients, lag
//! selection by AIC, unit-root and cointegration bounds tests, and
//! residual diagnostics (White, Breusch-Godfrey, CUSUM).
//!
//! The level form regresses y_t on a constant, an optional linear trend,
//! p of its own lags, lags 0..q of each independent series, and any
//! non-lagged exogenous terms (period dummies, interactions). The
//! error-correction form is the same model rewritten in differences and
//! levels; both are estimated by [`crate::estimate::ols_fit`].

mod bounds;
mod diagnostics;
mod tables;
mod unit_root;

pub use bounds::{
    bounds_test, fit_ec_regression, level_f_stat, BoundsBand, BoundsCase, BoundsDecision,
    BoundsTestResult, EcRegression,
};
pub use diagnostics::{
    breusch_godfrey, cusum, diagnostics, recursive_residuals, white_test, CusumResult,
    DiagnosticsReport, LmTest,
};
pub use unit_root::{adf_test, mackinnon_critical_values, AdfVariant, UnitRootResult};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::estimate::{aic, ols_fit, CovEstimator, OlsFit};

/// Largest tolerated share of interpolated interior gaps per fit.
pub const MAX_MISSING_FRAC: f64 = 0.02;

/// A named, regularly spaced series. NaN marks a missing observation;
/// leading and trailing missings are trimmed jointly across all series
/// of a fit, interior ones are linearly interpolated up to
/// [`MAX_MISSING_FRAC`] of the span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Series { name: name.into(), values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArdlSpec {
    /// Own lags of the dependent series, at least 1.
    pub p: usize,
    /// Lags applied to every independent series (0 = contemporaneous only).
    pub q: usize,
    pub with_constant: bool,
    pub with_trend: bool,
    #[serde(default)]
    pub cov: CovEstimator,
}

impl Default for ArdlSpec {
    fn default() -> Self {
        ArdlSpec {
            p: 1,
            q: 1,
            with_constant: true,
            with_trend: false,
            cov: CovEstimator::default(),
        }
    }
}

impl ArdlSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(CoreError::Config(
                "ARDL requires at least one dependent-variable lag (p >= 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn with_lags(mut self, p: usize, q: usize) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    /// Deterministic columns (constant, trend).
    fn det_terms(&self) -> usize {
        self.with_constant as usize + self.with_trend as usize
    }
}

/// Series aligned, jointly trimmed, and gap-filled; shared by the level
/// and error-correction designs so their samples agree row for row.
pub(crate) struct Prepared {
    pub y: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub exog: Vec<Vec<f64>>,
    /// Index of the first retained observation in the input series.
    pub offset: usize,
    /// Number of time points that needed interpolation.
    pub interpolated: usize,
}

pub(crate) fn prepare(y: &Series, xs: &[Series], exog: &[Series]) -> Result<Prepared> {
    let n = y.len();
    for s in xs.iter().chain(exog) {
        if s.len() != n {
            return Err(CoreError::Config(format!(
                "series '{}' has length {}, expected {} to match '{}'",
                s.name,
                s.len(),
                n,
                y.name
            )));
        }
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(1 + xs.len() + exog.len());
    cols.push(y.values.clone());
    cols.extend(xs.iter().map(|s| s.values.clone()));
    cols.extend(exog.iter().map(|s| s.values.clone()));

    let all_finite = |t: usize| cols.iter().all(|c| c[t].is_finite());
    let Some(first) = (0..n).find(|&t| all_finite(t)) else {
        return Err(CoreError::insufficient("jointly observed time points", 1, 0));
    };
    let last = (0..n).rev().find(|&t| all_finite(t)).unwrap();
    let span = last - first + 1;

    let gaps = (first..=last).filter(|&t| !all_finite(t)).count();
    let allowed = (MAX_MISSING_FRAC * span as f64).floor() as usize;
    if gaps > allowed {
        return Err(CoreError::insufficient(
            "observed time points within the interior-gap cap",
            span - allowed,
            span - gaps,
        ));
    }

    for col in &mut cols {
        *col = col[first..=last].to_vec();
        fill_interior(col);
    }
    let mut it = cols.into_iter();
    Ok(Prepared {
        y: it.next().unwrap(),
        xs: it.by_ref().take(xs.len()).collect(),
        exog: it.collect(),
        offset: first,
        interpolated: gaps,
    })
}

/// Linear interpolation of NaN runs; endpoints are known finite.
fn fill_interior(col: &mut [f64]) {
    let mut t = 0;
    while t < col.len() {
        if col[t].is_finite() {
            t += 1;
            continue;
        }
        let lo = t - 1;
        let mut hi = t;
        while !col[hi].is_finite() {
            hi += 1;
        }
        let base = col[lo];
        let step = (col[hi] - base) / (hi - lo) as f64;
        for (i, v) in col[lo + 1..hi].iter_mut().enumerate() {
            *v = base + step * (i + 1) as f64;
        }
        t = hi;
    }
}

#[derive(Debug, Clone)]
pub struct ArdlFit {
    pub spec: ArdlSpec,
    pub y_name: String,
    pub x_names: Vec<String>,
    pub exo_names: Vec<String>,
    /// Constant term; 0 when the spec omits it.
    pub c0: f64,
    /// Trend slope; 0 when the spec omits it.
    pub c1: f64,
    /// phi[i] is the coefficient of y lagged i+1.
    pub phi: DVector<f64>,
    /// beta[(j, i)] is the lag-i coefficient of independent series j.
    pub beta: DMatrix<f64>,
    pub exo_coefs: DVector<f64>,
    pub ols: OlsFit,
    /// The regression design, retained for diagnostics.
    pub design: DMatrix<f64>,
    /// The trimmed response aligned with `design`.
    pub y_used: DVector<f64>,
    /// Offset of the first modeled row within the prepared series.
    pub start: usize,
    /// Offset of the prepared series within the input (leading rows
    /// trimmed for joint missingness). Row r of the design corresponds
    /// to input index `offset + start + r`.
    pub offset: usize,
    pub interpolated: usize,
}

impl ArdlFit {
    pub fn n_vars(&self) -> usize {
        self.x_names.len()
    }

    /// Design column of phi_i (1-based lag index).
    pub fn phi_col(&self, i: usize) -> usize {
        debug_assert!((1..=self.spec.p).contains(&i));
        self.spec.det_terms() + (i - 1)
    }

    /// Design column of beta_{j,lag}.
    pub fn beta_col(&self, j: usize, lag: usize) -> usize {
        debug_assert!(j < self.n_vars() && lag <= self.spec.q);
        self.spec.det_terms() + self.spec.p + j * (self.spec.q + 1) + lag
    }

    pub fn exo_col(&self, e: usize) -> usize {
        self.spec.det_terms() + self.spec.p + self.n_vars() * (self.spec.q + 1) + e
    }

    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.ols.k);
        if self.spec.with_constant {
            names.push("const".to_string());
        }
        if self.spec.with_trend {
            names.push("trend".to_string());
        }
        for i in 1..=self.spec.p {
            names.push(format!("{}.l{}", self.y_name, i));
        }
        for x in &self.x_names {
            for i in 0..=self.spec.q {
                names.push(format!("{x}.l{i}"));
            }
        }
        names.extend(self.exo_names.iter().cloned());
        names
    }

    pub fn aic(&self) -> f64 {
        aic(&self.ols)
    }

    pub fn summary(&self) -> Result<FitSummary> {
        let se = self.ols.standard_errors();
        let t = self.ols.t_statistics();
        let p = self.ols.p_values()?;
        let coefficients = self
            .coefficient_names()
            .into_iter()
            .enumerate()
            .map(|(j, name)| CoefficientRow {
                name,
                estimate: self.ols.coefficients[j],
                se: se[j],
                t: t[j],
                p: p[j],
            })
            .collect();
        Ok(FitSummary {
            y: self.y_name.clone(),
            p_lags: self.spec.p,
            q_lags: self.spec.q,
            with_constant: self.spec.with_constant,
            with_trend: self.spec.with_trend,
            n: self.ols.n,
            k: self.ols.k,
            r_squared: self.ols.r_squared,
            aic: self.aic(),
            interpolated: self.interpolated,
            coefficients,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
}

/// Serializable digest of a fit, consumed by pooling and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub y: String,
    pub p_lags: usize,
    pub q_lags: usize,
    pub with_constant: bool,
    pub with_trend: bool,
    pub n: usize,
    pub k: usize,
    pub r_squared: f64,
    pub aic: f64,
    pub interpolated: usize,
    pub coefficients: Vec<CoefficientRow>,
}

/// Builds the level-form design over rows `start..n` of the prepared
/// series. `start` must be at least max(p, q).
fn build_design(
    prep: &Prepared,
    spec: &ArdlSpec,
    start: usize,
) -> (DMatrix<f64>, DVector<f64>, usize) {
    let n = prep.y.len();
    let rows = n.saturating_sub(start);
    let k = spec.det_terms()
        + spec.p
        + prep.xs.len() * (spec.q + 1)
        + prep.exog.len();
    let mut design = DMatrix::zeros(rows, k);
    let mut yv = DVector::zeros(rows);
    for (r, t) in (start..n).enumerate() {
        let mut c = 0;
        if spec.with_constant {
            design[(r, c)] = 1.0;
            c += 1;
        }
        if spec.with_trend {
            design[(r, c)] = t as f64;
            c += 1;
        }
        for i in 1..=spec.p {
            design[(r, c)] = prep.y[t - i];
            c += 1;
        }
        for x in &prep.xs {
            for i in 0..=spec.q {
                design[(r, c)] = x[t - i];
                c += 1;
            }
        }
        for e in &prep.exog {
            design[(r, c)] = e[t];
            c += 1;
        }
        yv[r] = prep.y[t];
    }
    (design, yv, k)
}

/// Estimates the level-form ARDL(p,q) by least squares.
///
/// Observation t regresses on y_{t-1..t-p}, x_{t..t-q} for every
/// independent series, the exogenous terms at t, and the deterministic
/// terms; the first max(p, q) observations are trimmed. Requires more
/// than k + 10 usable rows.
pub fn fit_ardl(y: &Series, xs: &[Series], exog: &[Series], spec: &ArdlSpec) -> Result<ArdlFit> {
    spec.validate()?;
    let prep = prepare(y, xs, exog)?;
    fit_on_prepared(y, xs, exog, spec, &prep, spec.p.max(spec.q))
}

fn fit_on_prepared(
    y: &Series,
    xs: &[Series],
    exog: &[Series],
    spec: &ArdlSpec,
    prep: &Prepared,
    start: usize,
) -> Result<ArdlFit> {
    let (design, yv, k) = build_design(prep, spec, start);
    if design.nrows() <= k + 10 {
        return Err(CoreError::insufficient(
            "observations after lag trimming",
            k + 11,
            design.nrows(),
        ));
    }
    let ols = ols_fit(&yv, &design, spec.cov)?;

    let det = spec.det_terms();
    let c0 = if spec.with_constant { ols.coefficients[0] } else { 0.0 };
    let c1 = if spec.with_trend {
        ols.coefficients[spec.with_constant as usize]
    } else {
        0.0
    };
    let phi = DVector::from_fn(spec.p, |i, _| ols.coefficients[det + i]);
    let beta = DMatrix::from_fn(xs.len(), spec.q + 1, |j, i| {
        ols.coefficients[det + spec.p + j * (spec.q + 1) + i]
    });
    let exo_base = det + spec.p + xs.len() * (spec.q + 1);
    let exo_coefs = DVector::from_fn(exog.len(), |e, _| ols.coefficients[exo_base + e]);

    Ok(ArdlFit {
        spec: *spec,
        y_name: y.name.clone(),
        x_names: xs.iter().map(|s| s.name.clone()).collect(),
        exo_names: exog.iter().map(|s| s.name.clone()).collect(),
        c0,
        c1,
        phi,
        beta,
        exo_coefs,
        ols,
        design,
        y_used: yv,
        start,
        offset: prep.offset,
        interpolated: prep.interpolated,
    })
}

/// The error-correction reading of a level fit: speed of adjustment,
/// long-run coefficients, and short-run dynamics.
#[derive(Debug, Clone)]
pub struct EcFit {
    /// Speed of adjustment, 1 - sum(phi).
    pub alpha: f64,
    pub se_alpha: f64,
    /// Long-run coefficient per independent series, sum(beta)/alpha.
    pub theta: DVector<f64>,
    /// Delta-method standard errors under the fit's covariance estimator.
    pub se_theta: DVector<f64>,
    /// Short-run coefficients on lagged differences of y (length p-1).
    pub psi_y: DVector<f64>,
    /// psi_x[(j, i)] multiplies the i-th lagged difference of series j
    /// (i = 0..q-1); empty when q = 0.
    pub psi_x: DMatrix<f64>,
}

/// Reparameterizes a level fit into error-correction form.
///
/// Pure algebra on the estimated coefficients: refitting the
/// difference-form regression with [`fit_ec_regression`] reproduces
/// these values because the two designs span the same column space.
pub fn to_ec_form(fit: &ArdlFit) -> Result<EcFit> {
    let p = fit.spec.p;
    let q = fit.spec.q;
    let nv = fit.n_vars();
    let alpha = 1.0 - fit.phi.sum();
    if alpha.abs() <= 1e-8 {
        return Err(CoreError::Domain(format!(
            "speed of adjustment {alpha:.3e} is numerically zero (unit root); \
             long-run coefficients undefined"
        )));
    }
    let theta = DVector::from_fn(nv, |j, _| fit.beta.row(j).sum() / alpha);
    let psi_y = DVector::from_fn(p - 1, |i, _| -fit.phi.rows(i + 1, p - i - 1).sum());
    let psi_x = DMatrix::from_fn(nv, q, |j, i| -fit.beta.row(j).columns(i + 1, q - i).sum());

    // Delta method. alpha depends on the phi block alone; theta_j on the
    // phi block (gradient theta_j / alpha per entry) and on the beta_j
    // block (gradient 1 / alpha per entry).
    let cov = &fit.ols.covariance;
    let phi_cols: Vec<usize> = (1..=p).map(|i| fit.phi_col(i)).collect();
    let mut var_alpha = 0.0;
    for &a in &phi_cols {
        for &b in &phi_cols {
            var_alpha += cov[(a, b)];
        }
    }
    let se_alpha = var_alpha.max(0.0).sqrt();

    let se_theta = DVector::from_fn(nv, |j, _| {
        let beta_cols: Vec<usize> = (0..=q).map(|i| fit.beta_col(j, i)).collect();
        let g_phi = theta[j] / alpha;
        let g_beta = 1.0 / alpha;
        let mut var = 0.0;
        for &a in &phi_cols {
            for &b in &phi_cols {
                var += g_phi * g_phi * cov[(a, b)];
            }
            for &b in &beta_cols {
                var += 2.0 * g_phi * g_beta * cov[(a, b)];
            }
        }
        for &a in &beta_cols {
            for &b in &beta_cols {
                var += g_beta * g_beta * cov[(a, b)];
            }
        }
        var.max(0.0).sqrt()
    });

    Ok(EcFit { alpha, se_alpha, theta, se_theta, psi_y, psi_x })
}

/// Grid-searches (p, q) by AIC with every candidate fit on the common
/// most-trimmed sample. Ties break toward smaller p + q, then smaller p.
pub fn select_lags(
    y: &Series,
    xs: &[Series],
    exog: &[Series],
    base: &ArdlSpec,
    max_p: usize,
    max_q: usize,
) -> Result<(usize, usize)> {
    if max_p < 1 {
        return Err(CoreError::Config("lag grid needs max_p >= 1".into()));
    }
    let prep = prepare(y, xs, exog)?;
    let start = max_p.max(max_q);
    let mut best: Option<(f64, usize, usize)> = None;
    let mut last_err = None;
    for (p, q) in candidate_order(max_p, max_q) {
        let spec = base.with_lags(p, q);
        match fit_on_prepared(y, xs, exog, &spec, &prep, start) {
            Ok(fit) => {
                let a = fit.aic();
                // Strictly better only: ties keep the earlier, smaller
                // candidate.
                if best.map_or(true, |(b, _, _)| a < b) {
                    best = Some((a, p, q));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, p, q)) => Ok((p, q)),
        None => Err(last_err.unwrap_or_else(|| {
            CoreError::insufficient("fittable lag candidates", 1, 0)
        })),
    }
}

/// Grid enumeration order: ascending total lag count, then ascending p.
fn candidate_order(max_p: usize, max_q: usize) -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for total in 1..=(max_p + max_q) {
        for p in 1..=total.min(max_p) {
            let q = total - p;
            if q <= max_q {
                grid.push((p, q));
            }
        }
    }
    grid
}

#[cfg(test)]
pub(crate) mod testutil {
    /// Deterministic generator shared by the module tests; the Python
    /// scripts that froze the reference values reproduce it bit for bit.
    pub struct Lcg(pub u64);

    impl Lcg {
        pub fn uniform(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }

        /// Box-Muller, cosine branch only, to match the oracle scripts.
        pub fn normal(&mut self) -> f64 {
            let u1 = self.uniform();
            let u2 = self.uniform();
            (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    pub fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let mut rng = Lcg(seed);
        let mut y = 0.0;
        let mut out = Vec::with_capacity(n + 50);
        for _ in 0..n + 50 {
            y = phi * y + rng.normal();
            out.push(y);
        }
        out.split_off(50)
    }

    pub fn random_walk(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = Lcg(seed);
        let mut y = 0.0;
        (0..n)
            .map(|_| {
                y += rng.normal();
                y
            })
            .collect()
    }
}
