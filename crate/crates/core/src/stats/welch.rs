use std::collections::BTreeMap;

use serde::Serialize;

use super::dist::two_sided_p;
use crate::error::{Error, Result};
use crate::ingest::SectorId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

pub(crate) fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Two-sample t-test without the equal-variance assumption.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchResult> {
    let got = a.len().min(b.len());
    if got < 2 {
        return Err(Error::InsufficientData { needed: 2, got });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (ua, ub) = (va / na, vb / nb);
    let se2 = ua + ub;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(WelchResult {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
            });
        }
        return Err(Error::DegenerateSamples);
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (ua * ua / (na - 1.0) + ub * ub / (nb - 1.0));
    Ok(WelchResult {
        t,
        df,
        p: two_sided_p(t, df),
    })
}

/// Pairwise Welch statistics over the full sector list. Cell `(r, c)` tests
/// row sector against column sector; the diagonal and any pair involving a
/// sector with fewer than two observations are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseMatrix {
    pub sectors: Vec<SectorId>,
    pub cells: Vec<Vec<Option<WelchResult>>>,
}

impl PairwiseMatrix {
    pub fn t(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col].map(|w| w.t)
    }
}

pub fn pairwise_matrix(samples: &BTreeMap<SectorId, Vec<f64>>) -> PairwiseMatrix {
    let sectors = SectorId::ALL.to_vec();
    let n = sectors.len();
    let mut cells = vec![vec![None; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (Some(a), Some(b)) = (samples.get(&sectors[i]), samples.get(&sectors[j])) else {
                continue;
            };
            if let Ok(w) = welch_t(a, b) {
                cells[i][j] = Some(w);
                cells[j][i] = Some(WelchResult { t: -w.t, ..w });
            }
        }
    }
    PairwiseMatrix { sectors, cells }
}
