use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::marketdata::{Quarter, QuarterGrid};

/// Annualized statistics of quarter-on-quarter percent changes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendStats {
    /// `mean(pc) * 400`.
    pub mean_pct: f64,
    /// `sd(pc) * 200`.
    pub sd_pct: f64,
    pub changes: usize,
    pub missing_quarters: usize,
    /// Changes dropped because the previous quarter's mean was zero.
    pub zero_base_skipped: usize,
}

/// Percent changes between adjacent grid quarters where both are observed.
/// A series with more than `max_missing` empty grid quarters is rejected.
pub fn percent_changes(
    series: &BTreeMap<Quarter, f64>,
    grid: &QuarterGrid,
    max_missing: usize,
) -> Result<TrendStats> {
    let missing = grid.iter().filter(|q| !series.contains_key(q)).count();
    if missing > max_missing {
        return Err(Error::Invalid(format!(
            "{missing} missing quarters, more than the allowed {max_missing}"
        )));
    }
    let mut pcs = Vec::new();
    let mut zero_base = 0;
    for pair in grid.quarters().windows(2) {
        let (Some(&prev), Some(&cur)) = (series.get(&pair[0]), series.get(&pair[1])) else {
            continue;
        };
        if prev == 0.0 {
            zero_base += 1;
            continue;
        }
        pcs.push((cur - prev) / prev);
    }
    if pcs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let (mean, var) = super::welch::mean_var(&pcs);
    Ok(TrendStats {
        mean_pct: mean * 400.0,
        sd_pct: var.sqrt() * 200.0,
        changes: pcs.len(),
        missing_quarters: missing,
        zero_base_skipped: zero_base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: i64) -> QuarterGrid {
        let q0: Quarter = "2010Q1".parse().unwrap();
        QuarterGrid::new(q0, q0.plus(n - 1)).unwrap()
    }

    fn series(values: &[Option<f64>]) -> BTreeMap<Quarter, f64> {
        let q0: Quarter = "2010Q1".parse().unwrap();
        values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (q0.plus(i as i64), v)))
            .collect()
    }

    #[test]
    fn compounding_ten_percent() {
        let t = percent_changes(
            &series(&[Some(100.0), Some(110.0), Some(121.0)]),
            &grid(3),
            20,
        )
        .unwrap();
        assert!((t.mean_pct - 40.0).abs() < 1e-9);
        assert!(t.sd_pct.abs() < 1e-9);
        assert_eq!(t.changes, 2);
    }

    #[test]
    fn constant_series() {
        let t = percent_changes(&series(&[Some(5.0); 6]), &grid(6), 20).unwrap();
        assert_eq!(t.mean_pct, 0.0);
    }

    #[test]
    fn missing_threshold() {
        let mut v = vec![None; 21];
        v.extend([Some(1.0), Some(2.0), Some(3.0)]);
        assert!(percent_changes(&series(&v), &grid(24), 20).is_err());
        let mut v = vec![None; 20];
        v.extend([Some(1.0), Some(2.0), Some(3.0)]);
        let t = percent_changes(&series(&v), &grid(23), 20).unwrap();
        assert_eq!(t.missing_quarters, 20);
    }

    #[test]
    fn gaps_and_zero_bases() {
        let t = percent_changes(
            &series(&[Some(1.0), None, Some(4.0), Some(0.0), Some(3.0), Some(6.0)]),
            &grid(6),
            20,
        )
        .unwrap();
        // 4 -> 0 is -100%, 0 -> 3 skipped, 3 -> 6 is +100%
        assert_eq!(t.changes, 2);
        assert_eq!(t.zero_base_skipped, 1);
        assert!(t.mean_pct.abs() < 1e-12);
    }
}
