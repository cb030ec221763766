//! Order-statistic helpers shared by every indicator.

use crate::error::{Error, Result};

/// Linear-interpolation percentile: position `p = q/100 * (n - 1)` over the
/// sorted values, interpolating between the neighbouring order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("percentile of an empty set"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::invalid(format!(
            "percentile rank {q} outside [0, 100]"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("percentile input contains NaN"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, q))
}

/// Same as [`percentile`] on an already sorted, non-empty slice.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Correctly rounded sum (exact partials, round-half-even on the final
/// step), so the result does not depend on input order.
pub fn ordered_sum(values: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &v in values {
        let mut x = v;
        let mut kept = 0;
        for k in 0..partials.len() {
            let mut y = partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    let Some(mut hi) = partials.pop() else {
        return 0.0;
    };
    let mut lo = 0.0;
    while let Some(y) = partials.pop() {
        let x = hi;
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    if let Some(&next) = partials.last() {
        if (lo < 0.0 && next < 0.0) || (lo > 0.0 && next > 0.0) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
    }
    hi
}

/// Order-independent arithmetic mean; `None` for an empty slice.
pub fn ordered_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(ordered_sum(values) / values.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_examples() {
        assert_eq!(percentile(&[0.4], 90.0).unwrap(), 0.4);
        assert!((percentile(&[0.1, 0.2, 0.3], 90.0).unwrap() - 0.28).abs() < 1e-15);
        assert!(percentile(&[], 50.0).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn sum_is_correctly_rounded() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(ordered_sum(&xs), 2.0);
        let tenths = vec![0.1; 10];
        assert_eq!(ordered_sum(&tenths), 1.0);
        assert_eq!(ordered_sum(&[]), 0.0);
        // halfway case resolved by the trailing partial
        assert_eq!(
            ordered_sum(&[1.0, f64::EPSILON / 2.0, 1e-300]),
            1.0000000000000002
        );
        assert_eq!(ordered_sum(&[1.0, f64::EPSILON / 2.0]), 1.0);
    }

    #[test]
    fn uniform_p90_is_close_to_point_nine() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
        let p = percentile(&xs, 90.0).unwrap();
        // sort oracle: the 900th order statistic bounds the interpolated value
        let mut s = xs.clone();
        s.sort_by(f64::total_cmp);
        assert!(p >= s[899] && p <= s[900]);
        assert!((p - 0.9).abs() < 0.03);
    }
}
