//! Trend preparation for the report: per-series min-max scaling and a
//! centered moving average whose window shrinks at the edges.

/// Affine map of finite values onto [0, 1]; NaNs pass through. Returns
/// None when the series is constant (or has no finite values), because
/// the map is then undefined and the caller should plot raw values.
pub fn min_max_normalize(values: &[f64]) -> Option<Vec<f64>> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        return None;
    }
    Some(
        values
            .iter()
            .map(|&v| if v.is_finite() { (v - lo) / (hi - lo) } else { v })
            .collect(),
    )
}

/// Centered moving average over `window` consecutive points. An even
/// window takes one extra point on the left (a 14-point window spans
/// offsets -7..=+6). Near the edges the window shrinks to what exists.
/// NaN entries are skipped; a window with no finite entry yields NaN.
pub fn smooth_centered(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be positive");
    let n = values.len();
    let before = window / 2;
    let after = window - before - 1;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(before);
        let hi = (i + after).min(n.saturating_sub(1));
        let mut sum = 0.0;
        let mut count = 0usize;
        for &v in &values[lo..=hi] {
            if v.is_finite() {
                sum += v;
                count += 1;
            }
        }
        out.push(if count > 0 { sum / count as f64 } else { f64::NAN });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn same(a: f64, b: f64) -> bool {
        (a.is_nan() && b.is_nan()) || a == b
    }

    #[test]
    fn min_max_is_the_affine_map() {
        assert_eq!(
            min_max_normalize(&[0.0, 5.0, 10.0]).unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        let with_gap = min_max_normalize(&[2.0, f64::NAN, 4.0]).unwrap();
        assert_eq!(with_gap[0], 0.0);
        assert!(with_gap[1].is_nan());
        assert_eq!(with_gap[2], 1.0);
    }

    #[test]
    fn constant_series_cannot_be_normalized() {
        assert!(min_max_normalize(&[3.0, 3.0, 3.0]).is_none());
        assert!(min_max_normalize(&[f64::NAN, f64::NAN]).is_none());
        assert!(min_max_normalize(&[]).is_none());
    }

    // Independent definition: for every index, average the finite values
    // whose offset from the center lies in [-ceil((w-1)/2), +floor((w-1)/2)]
    // intersected with the series bounds.
    fn brute_force(values: &[f64], window: usize) -> Vec<f64> {
        let n = values.len() as i64;
        let before = (window / 2) as i64;
        let after = (window as i64) - before - 1;
        (0..n)
            .map(|i| {
                let mut sum = 0.0;
                let mut count = 0;
                for j in (i - before)..=(i + after) {
                    if j >= 0 && j < n && values[j as usize].is_finite() {
                        sum += values[j as usize];
                        count += 1;
                    }
                }
                if count > 0 { sum / count as f64 } else { f64::NAN }
            })
            .collect()
    }

    #[test]
    fn smoother_matches_the_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &n in &[1usize, 2, 13, 14, 15, 400, 1461] {
            let mut series: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            // A few gaps, clustered enough to empty some windows.
            for i in 0..n {
                if rng.random::<f64>() < 0.05 {
                    series[i] = f64::NAN;
                }
            }
            for &w in &[1usize, 2, 13, 14] {
                let fast = smooth_centered(&series, w);
                let slow = brute_force(&series, w);
                for i in 0..n {
                    assert!(
                        same(fast[i], slow[i]),
                        "n={n} w={w} i={i}: {} vs {}",
                        fast[i],
                        slow[i]
                    );
                }
            }
        }
    }

    #[test]
    fn fourteen_day_window_is_centered_with_the_extra_day_behind() {
        // At an interior index the window must cover offsets -7..=+6.
        let n = 40;
        let values: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let smoothed = smooth_centered(&values, 14);
        let i = 20;
        let expected: f64 = ((i - 7)..=(i + 6)).map(|j| j as f64).sum::<f64>() / 14.0;
        assert_eq!(smoothed[i as usize], expected);
        // Edges shrink: the first value averages offsets 0..=+6.
        let expected0: f64 = (0..=6).map(|j| j as f64).sum::<f64>() / 7.0;
        assert_eq!(smoothed[0], expected0);
        // The last averages offsets -7..=0.
        let expected_last: f64 = ((n - 8)..n).map(|j| j as f64).sum::<f64>() / 8.0;
        assert_eq!(smoothed[n as usize - 1], expected_last);
    }
}
