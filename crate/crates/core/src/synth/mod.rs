//! Ground-truth generators and Monte-Carlo oracles: simulated lag
//! processes with known coefficients, synthetic scored corpora with
//! planted causal effects, classifier-noise injection, and simulated
//! critical values for the unit-root and bounds tests.
//!
//! Everything here is seeded and deterministic: the same spec produces
//! byte-identical output, including under parallel generation, because
//! every tree or replication draws from its own counter-derived stream.

pub mod corpus_gen;
pub mod mc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ardl::Series;
use crate::error::{CoreError, Result};

pub use corpus_gen::{inject_classification_noise, simulate_corpus, CorpusSim, GroundTruth};
pub use mc::{
    empirical_quantile, mc_adf_critical_values, mc_bounds_critical_values, mc_null_quantiles,
    MIN_TABULATION_REPS,
};

/// Observations discarded from the start of every simulated process so
/// the retained sample starts near the stationary distribution.
pub const BURN_IN: usize = 200;

/// A lag process with known coefficients:
/// y_t = c0 + c1 t + sum phi_i y_{t-i} + sum_j sum_l beta[j][l] x_{j,t-l} + sigma e_t
/// with standard normal innovations and AR(1) driver series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArdlSim {
    pub seed: u64,
    /// Retained length after the burn-in.
    pub n: usize,
    pub c0: f64,
    /// Trend slope; the trend regressor is the retained index 0..n.
    pub c1: f64,
    pub phi: Vec<f64>,
    /// One coefficient vector per driver series, indexed by lag 0..=q.
    pub beta: Vec<Vec<f64>>,
    /// Innovation scale for y.
    pub sigma: f64,
    /// AR(1) coefficient shared by the driver series; 1.0 gives
    /// independent random walks.
    pub x_rho: f64,
    /// Permit sum(phi) == 1 (unit root). Explosive sums are always
    /// rejected.
    pub allow_nonstationary: bool,
}

impl Default for ArdlSim {
    fn default() -> Self {
        ArdlSim {
            seed: 0,
            n: 500,
            c0: 0.0,
            c1: 0.0,
            phi: vec![0.5],
            beta: vec![vec![0.3]],
            sigma: 1.0,
            x_rho: 0.0,
            allow_nonstationary: false,
        }
    }
}

/// Generate `(y, xs)` from the process in `spec`, burn-in discarded.
///
/// Driver series are mutually independent, each on its own random
/// stream, so adding a series never perturbs the others.
pub fn simulate_ardl_series(spec: &ArdlSim) -> Result<(Series, Vec<Series>)> {
    if spec.n < 2 {
        return Err(CoreError::Config(format!(
            "simulated length {} is too short",
            spec.n
        )));
    }
    if !spec.sigma.is_finite() || spec.sigma < 0.0 {
        return Err(CoreError::Config(format!(
            "innovation scale {} must be finite and non-negative",
            spec.sigma
        )));
    }
    if spec.x_rho.abs() > 1.0 {
        return Err(CoreError::Config(format!(
            "driver AR coefficient {} outside [-1, 1]",
            spec.x_rho
        )));
    }
    if spec.beta.iter().any(|b| b.is_empty()) {
        return Err(CoreError::Config(
            "every driver series needs at least a lag-0 coefficient".into(),
        ));
    }
    let phi_sum: f64 = spec.phi.iter().sum();
    if phi_sum > 1.0 + 1e-9 {
        return Err(CoreError::Domain(format!(
            "autoregressive coefficients sum to {phi_sum}; the process is explosive"
        )));
    }
    if !spec.allow_nonstationary && phi_sum.abs() >= 1.0 - 1e-12 {
        return Err(CoreError::Domain(format!(
            "autoregressive coefficients sum to {phi_sum}; set allow_nonstationary \
             to simulate a unit-root process"
        )));
    }

    let total = BURN_IN + spec.n;
    let nx = spec.beta.len();

    // Stream 0 drives y; stream j+1 drives x_j.
    let xs_raw: Vec<Vec<f64>> = (0..nx)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(j as u64 + 1);
            let mut x = Vec::with_capacity(total);
            let mut prev = 0.0;
            for _ in 0..total {
                let z: f64 = rng.sample(StandardNormal);
                prev = spec.x_rho * prev + z;
                x.push(prev);
            }
            x
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    let p = spec.phi.len();
    let mut y = vec![0.0; total];
    for t in 0..total {
        // Pre-sample lags are zero; the burn-in absorbs the transient.
        let trend = t as f64 - BURN_IN as f64;
        let z: f64 = rng.sample(StandardNormal);
        let mut v = spec.c0 + spec.c1 * trend + spec.sigma * z;
        for (i, f) in spec.phi.iter().enumerate() {
            if t > i {
                v += f * y[t - i - 1];
            }
        }
        for (j, bj) in spec.beta.iter().enumerate() {
            for (l, b) in bj.iter().enumerate() {
                if t >= l {
                    v += b * xs_raw[j][t - l];
                }
            }
        }
        y[t] = v;
    }
    let _ = p;

    let y_series = Series::new("y", y[BURN_IN..].to_vec());
    let x_series = xs_raw
        .into_iter()
        .enumerate()
        .map(|(j, x)| Series::new(format!("x{}", j + 1), x[BURN_IN..].to_vec()))
        .collect();
    Ok((y_series, x_series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ardl::{adf_test, fit_ardl, AdfVariant, ArdlSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_specs_give_byte_identical_output() {
        let spec = ArdlSim { seed: 9, n: 50, beta: vec![vec![0.3], vec![0.1, 0.2]], ..ArdlSim::default() };
        let (y1, xs1) = simulate_ardl_series(&spec).unwrap();
        let (y2, xs2) = simulate_ardl_series(&spec).unwrap();
        assert_eq!(y1.values, y2.values);
        assert_eq!(xs1.len(), 2);
        for (a, b) in xs1.iter().zip(&xs2) {
            assert_eq!(a.values, b.values);
        }
        let other = simulate_ardl_series(&ArdlSim { seed: 10, ..spec }).unwrap();
        assert_ne!(y1.values, other.0.values);
    }

    #[test]
    fn adding_a_driver_leaves_existing_streams_untouched() {
        let one = ArdlSim { seed: 3, n: 40, beta: vec![vec![0.2]], ..ArdlSim::default() };
        let two = ArdlSim { beta: vec![vec![0.2], vec![0.5]], ..one.clone() };
        let (_, xs1) = simulate_ardl_series(&one).unwrap();
        let (_, xs2) = simulate_ardl_series(&two).unwrap();
        assert_eq!(xs1[0].values, xs2[0].values);
    }

    #[test]
    fn seeded_fit_recovers_the_planted_coefficients() {
        let spec = ArdlSim {
            seed: 20250815,
            n: 10_000,
            c0: 0.4,
            phi: vec![0.5],
            beta: vec![vec![0.3, -0.1]],
            ..ArdlSim::default()
        };
        let (y, xs) = simulate_ardl_series(&spec).unwrap();
        let fit_spec = ArdlSpec { p: 1, q: 1, ..ArdlSpec::default() };
        let fit = fit_ardl(&y, &xs, &[], &fit_spec).unwrap();
        assert_abs_diff_eq!(fit.phi[0], 0.5, epsilon = 0.02);
        assert_abs_diff_eq!(fit.beta[(0, 0)], 0.3, epsilon = 0.02);
        assert_abs_diff_eq!(fit.beta[(0, 1)], -0.1, epsilon = 0.02);
        assert_abs_diff_eq!(fit.c0, 0.4, epsilon = 0.05);
    }

    #[test]
    fn trend_slope_survives_the_burn_in_alignment() {
        // The trend regressor in the fit is the retained index, so the
        // planted slope must come back on the retained segment.
        let spec = ArdlSim {
            seed: 77,
            n: 4000,
            c0: 1.0,
            c1: 0.05,
            phi: vec![0.4],
            beta: vec![vec![0.2]],
            sigma: 0.5,
            ..ArdlSim::default()
        };
        let (y, xs) = simulate_ardl_series(&spec).unwrap();
        let fit_spec = ArdlSpec { p: 1, q: 0, with_trend: true, ..ArdlSpec::default() };
        let fit = fit_ardl(&y, &xs, &[], &fit_spec).unwrap();
        assert_abs_diff_eq!(fit.c1, 0.05, epsilon = 0.005);
        assert_abs_diff_eq!(fit.phi[0], 0.4, epsilon = 0.05);
    }

    #[test]
    fn null_driver_confidence_intervals_cover_zero_at_nominal_rate() {
        // beta = 0: the lag-0 driver coefficient's 95% interval should
        // cover zero in about 95% of replications.
        let reps = 300usize;
        let mut covered = 0usize;
        for r in 0..reps {
            let spec = ArdlSim {
                seed: 5000 + r as u64,
                n: 300,
                phi: vec![0.4],
                beta: vec![vec![0.0]],
                ..ArdlSim::default()
            };
            let (y, xs) = simulate_ardl_series(&spec).unwrap();
            let fit = fit_ardl(&y, &xs, &[], &ArdlSpec { p: 1, q: 0, ..ArdlSpec::default() })
                .unwrap();
            let col = fit.beta_col(0, 0);
            let b = fit.ols.coefficients[col];
            let se = fit.ols.standard_errors()[col];
            if (b - 1.96 * se) <= 0.0 && 0.0 <= (b + 1.96 * se) {
                covered += 1;
            }
        }
        let rate = covered as f64 / reps as f64;
        assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
    }

    #[test]
    fn unit_root_spec_is_rarely_rejected_by_the_unit_root_test() {
        let reps = 300usize;
        let mut rejected = 0usize;
        for r in 0..reps {
            let spec = ArdlSim {
                seed: 9000 + r as u64,
                n: 200,
                phi: vec![1.0],
                beta: vec![],
                allow_nonstationary: true,
                ..ArdlSim::default()
            };
            let (y, _) = simulate_ardl_series(&spec).unwrap();
            let t = adf_test(&y.values, AdfVariant::Constant, 0).unwrap();
            rejected += t.rejects_unit_root_5pct as usize;
        }
        let rate = rejected as f64 / reps as f64;
        assert!(rate < 0.12, "size {rate} too far above the nominal 5%");
        assert!(rate > 0.005, "size {rate} suspiciously low");
    }

    #[test]
    fn explosive_and_unguarded_unit_root_specs_are_rejected() {
        let explosive = ArdlSim { phi: vec![0.7, 0.4], ..ArdlSim::default() };
        assert!(matches!(simulate_ardl_series(&explosive), Err(CoreError::Domain(_))));
        let explosive_override =
            ArdlSim { phi: vec![1.2], allow_nonstationary: true, ..ArdlSim::default() };
        assert!(matches!(simulate_ardl_series(&explosive_override), Err(CoreError::Domain(_))));
        let unguarded = ArdlSim { phi: vec![1.0], ..ArdlSim::default() };
        assert!(matches!(simulate_ardl_series(&unguarded), Err(CoreError::Domain(_))));
        let bad_rho = ArdlSim { x_rho: 1.5, ..ArdlSim::default() };
        assert!(matches!(simulate_ardl_series(&bad_rho), Err(CoreError::Config(_))));
    }

    #[test]
    fn retained_sample_sits_near_the_stationary_mean() {
        let spec = ArdlSim {
            seed: 4,
            n: 20_000,
            c0: 2.0,
            phi: vec![0.5],
            beta: vec![],
            ..ArdlSim::default()
        };
        let (y, _) = simulate_ardl_series(&spec).unwrap();
        let mean = y.values.iter().sum::<f64>() / y.values.len() as f64;
        // Unconditional mean c0 / (1 - phi) = 4.
        assert_abs_diff_eq!(mean, 4.0, epsilon = 0.15);
    }
}
