//! Small statistics helpers.

use serde::Serialize;

/// Standard error of a proportion `p` estimated from `n` trials.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Percentiles {
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

/// `q`-th percentile (0..=100) of sorted data by linear interpolation
/// between closest ranks.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let rank = q / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64))
}

/// Quartiles of `values`; `None` when empty. NaN values are rejected.
pub fn percentiles(values: &[f64]) -> Option<Percentiles> {
    if values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Percentiles {
        p25: percentile_sorted(&sorted, 25.0)?,
        p50: percentile_sorted(&sorted, 50.0)?,
        p75: percentile_sorted(&sorted, 75.0)?,
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation.
pub fn std_dev(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Some(0.0);
    }
    Some((values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Percentile by explicit neighbours: the value `k` places in plus the
    /// weighted step to the next, written without the rank helper.
    fn naive(values: &[f64], q: f64) -> f64 {
        let mut v = values.to_vec();
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                j -= 1;
            }
        }
        let pos = (v.len() - 1) as f64 * q / 100.0;
        let k = pos as usize;
        if k + 1 >= v.len() {
            v[k]
        } else {
            v[k] + (v[k + 1] - v[k]) * (pos - k as f64)
        }
    }

    #[test]
    fn small_cases() {
        assert!(percentiles(&[]).is_none());
        let p = percentiles(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((p.p25, p.p50, p.p75), (1.75, 2.5, 3.25));
        let p = percentiles(&[7.0]).unwrap();
        assert_eq!((p.p25, p.p50, p.p75), (7.0, 7.0, 7.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_naive_sort(values in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let p = percentiles(&values).unwrap();
            for (q, got) in [(25.0, p.p25), (50.0, p.p50), (75.0, p.p75)] {
                prop_assert_eq!(got, naive(&values, q));
            }
            prop_assert!(p.p25 <= p.p50 && p.p50 <= p.p75);
        }
    }
}
