//! Monte-Carlo null distributions for the unit-root and bounds tests.
//!
//! The unit-root statistic is collected by running the real test on
//! simulated driftless random walks, so the tabulated law is exactly the
//! law of the statistic the library computes. The bounds statistics come
//! from the standard tabulation regression: the change in y on the
//! deterministics and the lagged levels, with the drivers either white
//! noise (stationary bound) or independent random walks (integrated
//! bound). Short-run augmentation terms do not enter; they leave the
//! limiting distributions unchanged.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ardl::{adf_test, AdfVariant, BoundsBand, BoundsCase};
use crate::error::{CoreError, Result};
use crate::estimate::{ols_fit, CovEstimator};

/// Fewer replications than this give quantiles too noisy to embed.
pub const MIN_TABULATION_REPS: usize = 10_000;

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_TABULATION_REPS {
        return Err(CoreError::Config(format!(
            "{reps} Monte-Carlo replications; tabulation needs at least {MIN_TABULATION_REPS}"
        )));
    }
    Ok(())
}

/// Linear-interpolation sample quantile (the common default, type 7).
/// `sorted` must be ascending and non-empty; `p` in [0, 1].
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn random_walk(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(n);
    let mut acc = 0.0;
    for _ in 0..n {
        let z: f64 = rng.sample(StandardNormal);
        acc += z;
        y.push(acc);
    }
    y
}

/// Quantiles of the unit-root statistic under the random-walk null, at
/// the given cumulative probabilities.
///
/// Each replication runs [`adf_test`] with zero augmentation lags on a
/// fresh walk of length `n` and keeps the statistic; the requested
/// quantiles are read off the sorted draws.
pub fn mc_null_quantiles(
    variant: AdfVariant,
    n: usize,
    reps: usize,
    probs: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    check_reps(reps)?;
    if probs.is_empty() {
        return Err(CoreError::Config("no quantile probabilities requested".into()));
    }
    if probs.windows(2).any(|w| w[0] >= w[1]) || probs.iter().any(|p| !(0.0..1.0).contains(p) || *p == 0.0) {
        return Err(CoreError::Config(
            "quantile probabilities must be strictly increasing within (0, 1)".into(),
        ));
    }
    let mut stats = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let y = random_walk(&mut rng, n);
        stats.push(adf_test(&y, variant, 0)?.stat);
    }
    stats.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| empirical_quantile(&stats, p)).collect())
}

/// Simulated critical values for the unit-root test at 1%, 5%, 10%.
pub fn mc_adf_critical_values(
    variant: AdfVariant,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<[f64; 3]> {
    let q = mc_null_quantiles(variant, n, reps, &[0.01, 0.05, 0.10], seed)?;
    Ok([q[0], q[1], q[2]])
}

// One tabulation replication: y a pure random walk, drivers either
// white noise or walks; returns (F on the joint level terms, t on the
// lagged level of y).
fn bounds_replication(
    rng: &mut ChaCha8Rng,
    case: BoundsCase,
    k: usize,
    n: usize,
    integrated_drivers: bool,
) -> Result<(f64, f64)> {
    let y = random_walk(rng, n);
    let xs: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            if integrated_drivers {
                random_walk(rng, n)
            } else {
                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            }
        })
        .collect();

    let det = match case {
        BoundsCase::UnrestrictedConstant => 1,
        BoundsCase::UnrestrictedConstantTrend => 2,
    };
    let rows = n - 1;
    let k_u = det + 1 + k;
    let mut x = DMatrix::zeros(rows, k_u);
    let mut dy = DVector::zeros(rows);
    for r in 0..rows {
        let t = r + 1;
        x[(r, 0)] = 1.0;
        if det == 2 {
            x[(r, 1)] = t as f64;
        }
        x[(r, det)] = y[t - 1];
        for (j, xj) in xs.iter().enumerate() {
            x[(r, det + 1 + j)] = xj[t - 1];
        }
        dy[r] = y[t] - y[t - 1];
    }
    let unrestricted = ols_fit(&dy, &x, CovEstimator::Classical)?;
    let t_stat = unrestricted.coefficients[det] / unrestricted.standard_errors()[det];

    // Restricted model keeps the deterministics only.
    let rss_r = if det == 1 {
        let mean = dy.iter().sum::<f64>() / rows as f64;
        dy.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
    } else {
        let xr = x.columns(0, 2).into_owned();
        ols_fit(&dy, &xr, CovEstimator::Classical)?.rss
    };
    let restrictions = (k + 1) as f64;
    let f_stat = ((rss_r - unrestricted.rss) / restrictions)
        / (unrestricted.rss / (rows - k_u) as f64);
    Ok((f_stat, t_stat))
}

/// Simulated bounds-test critical bands at 10%, 5%, 1%.
///
/// Returns `(f_bands, t_bands)`. Each band's `lower` is the numerically
/// smaller entry: for F that is the stationary-driver bound, for t the
/// integrated-driver bound (t critical values are negative).
pub fn mc_bounds_critical_values(
    case: BoundsCase,
    k: usize,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<([BoundsBand; 3], [BoundsBand; 3])> {
    check_reps(reps)?;
    if n < 30 + k {
        return Err(CoreError::insufficient(
            "observations for the bounds tabulation",
            30 + k,
            n,
        ));
    }

    let collect = |integrated: bool, stream_base: u64| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut fs = Vec::with_capacity(reps);
        let mut ts = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + rep as u64);
            let (f, t) = bounds_replication(&mut rng, case, k, n, integrated)?;
            fs.push(f);
            ts.push(t);
        }
        fs.sort_by(f64::total_cmp);
        ts.sort_by(f64::total_cmp);
        Ok((fs, ts))
    };

    // With no drivers the two polar cases coincide.
    let (f_stat, t_stat) = collect(false, 0)?;
    let (f_int, t_int) = if k == 0 {
        (f_stat.clone(), t_stat.clone())
    } else {
        collect(true, reps as u64)?
    };

    let levels = [0.10, 0.05, 0.01];
    let mut f_bands = [BoundsBand { level: 0.0, lower: 0.0, upper: 0.0 }; 3];
    let mut t_bands = f_bands;
    for (i, &level) in levels.iter().enumerate() {
        let f0 = empirical_quantile(&f_stat, 1.0 - level);
        let f1 = empirical_quantile(&f_int, 1.0 - level);
        f_bands[i] = BoundsBand { level, lower: f0.min(f1), upper: f0.max(f1) };
        let t0 = empirical_quantile(&t_stat, level);
        let t1 = empirical_quantile(&t_int, level);
        t_bands[i] = BoundsBand { level, lower: t0.min(t1), upper: t0.max(t1) };
    }
    Ok((f_bands, t_bands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ardl::mackinnon_critical_values;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simulated_five_percent_value_tracks_the_response_surface() {
        let n = 500;
        let cv = mc_adf_critical_values(AdfVariant::Constant, n, 12_000, 31).unwrap();
        let surface = mackinnon_critical_values(AdfVariant::Constant, n - 1);
        assert_abs_diff_eq!(cv[1], surface[1], epsilon = 0.1);
        // Ordering across levels comes free with quantiles of one sample.
        assert!(cv[0] < cv[1] && cv[1] < cv[2]);
    }

    #[test]
    fn doubling_replications_barely_moves_the_values() {
        let a = mc_adf_critical_values(AdfVariant::Constant, 300, 12_000, 7).unwrap();
        let b = mc_adf_critical_values(AdfVariant::Constant, 300, 24_000, 8).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 0.05);
        }
    }

    #[test]
    fn bounds_bands_are_ordered_and_widen_with_the_level() {
        let (f, t) = mc_bounds_critical_values(
            BoundsCase::UnrestrictedConstant,
            1,
            200,
            10_000,
            5,
        )
        .unwrap();
        for band in &f {
            assert!(band.lower < band.upper, "F band at {}", band.level);
            assert!(band.lower > 0.0);
        }
        // Rows are 10%, 5%, 1%: stricter levels push F up and t down.
        assert!(f[0].lower < f[1].lower && f[1].lower < f[2].lower);
        assert!(f[0].upper < f[1].upper && f[1].upper < f[2].upper);
        for band in &t {
            assert!(band.lower < band.upper, "t band at {}", band.level);
            assert!(band.upper < 0.0);
        }
        assert!(t[0].lower > t[1].lower && t[1].lower > t[2].lower);
    }

    #[test]
    fn driverless_case_collapses_to_a_single_bound() {
        let (f, t) =
            mc_bounds_critical_values(BoundsCase::UnrestrictedConstant, 0, 200, 10_000, 5)
                .unwrap();
        for band in f.iter().chain(&t) {
            assert_eq!(band.lower, band.upper);
        }
    }

    #[test]
    fn too_few_replications_is_a_config_error() {
        assert!(matches!(
            mc_adf_critical_values(AdfVariant::Constant, 100, 500, 1),
            Err(CoreError::Config(_))
        ));
        assert!(matches!(
            mc_bounds_critical_values(BoundsCase::UnrestrictedConstant, 1, 100, 9, 1),
            Err(CoreError::Config(_))
        ));
    }

    #[test]
    fn quantile_interpolates_and_clamps() {
        let v = [1.0, 2.0, 4.0, 8.0];
        assert_abs_diff_eq!(empirical_quantile(&v, 0.0), 1.0);
        assert_abs_diff_eq!(empirical_quantile(&v, 1.0), 8.0);
        assert_abs_diff_eq!(empirical_quantile(&v, 0.5), 3.0);
        assert_abs_diff_eq!(empirical_quantile(&v, 0.25 / 3.0 + 1.0 / 3.0), 2.5, epsilon = 1e-12);
    }
}
