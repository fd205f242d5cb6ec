use serde::Serialize;

/// Descriptive statistics of a set of amounts (USD millions).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub total: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    /// Set when `sd` is the single-observation placeholder.
    pub sd_undefined: bool,
}

/// `None` for an empty sample.
pub fn summarize(label: impl Into<String>, values: &[f64]) -> Option<SummaryRow> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let total: f64 = values.iter().sum();
    let mean = total / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(SummaryRow {
        label: label.into(),
        n,
        mean,
        median,
        total,
        sd,
        sd_undefined: n == 1,
    })
}

/// Whether a displayed mean and total, each rounded to `decimals`, can come
/// from the same `n` values: `|mean * n - total| <= 2 * n * half_unit`.
pub fn display_consistent(mean: f64, n: usize, total: f64, decimals: i32) -> bool {
    let half_unit = 0.5 * 10f64.powi(-decimals);
    (mean * n as f64 - total).abs() <= 2.0 * n as f64 * half_unit + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        let r = summarize("x", &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(
            (r.n, r.mean, r.median, r.total, r.sd),
            (3, 4.0, 4.0, 12.0, 2.0)
        );
        let r = summarize("x", &[5.0]).unwrap();
        assert_eq!((r.mean, r.median, r.total, r.sd), (5.0, 5.0, 5.0, 0.0));
        assert!(r.sd_undefined);
        assert_eq!(summarize("x", &[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(summarize("x", &[]).is_none());
    }

    #[test]
    fn printed_row_is_consistent() {
        assert!(display_consistent(7.24, 8, 57.90, 2));
        assert!(!display_consistent(7.24, 8, 58.10, 2));
    }

    proptest! {
        #[test]
        fn invariants(mut v in proptest::collection::vec(0.0f64..1e4, 1..80), seed in any::<u64>()) {
            let r = summarize("x", &v).unwrap();
            prop_assert!((r.mean * r.n as f64 - r.total).abs() <= 1e-9 * r.total.abs().max(1.0));
            prop_assert!(r.sd >= 0.0);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= r.median && r.median <= hi);
            // rotate by a seed-dependent amount and reverse
            let k = (seed as usize) % v.len();
            v.rotate_left(k);
            v.reverse();
            prop_assert_eq!(summarize("x", &v).unwrap().median, r.median);
        }
    }
}
