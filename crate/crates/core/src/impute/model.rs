use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::{FeatureEncoder, PmvFeatureVector};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "vcperf-imputer";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputerKind {
    #[default]
    Ridge,
    Knn,
    /// Leave missing values missing.
    Passthrough,
}

/// Per-column mean and standard deviation; constant columns get sd 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let p = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut sd = vec![0.0; p];
        for r in rows {
            for ((s, v), m) in sd.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let sd = sd
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Standardizer { mean, sd }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    Ridge {
        lambda: f64,
        intercept: f64,
        weights: Vec<f64>,
    },
    Knn {
        k: usize,
        points: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
}

impl Regressor {
    /// Ridge with an unpenalized intercept on already standardized rows.
    pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Self> {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let y_bar = y.iter().sum::<f64>() / n as f64;
        // columns are centered on these rows only when the standardizer came
        // from the same rows; center again so the intercept stays exact
        let col_mean: Vec<f64> = (0..p)
            .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let xm = DMatrix::from_fn(n, p, |i, j| x[i][j] - col_mean[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_bar));
        let gram = xm.transpose() * &xm + DMatrix::identity(p, p) * lambda;
        let rhs = xm.transpose() * yc;
        let w = match gram.clone().cholesky() {
            Some(c) => c.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Model("singular ridge system".into()))?,
        };
        let weights: Vec<f64> = w.iter().copied().collect();
        let intercept = y_bar
            - weights
                .iter()
                .zip(&col_mean)
                .map(|(w, m)| w * m)
                .sum::<f64>();
        Ok(Regressor::Ridge {
            lambda,
            intercept,
            weights,
        })
    }

    pub fn fit_knn(x: &[Vec<f64>], y: &[f64], k: usize) -> Self {
        Regressor::Knn {
            k: k.min(x.len()).max(1),
            points: x.to_vec(),
            targets: y.to_vec(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Ridge {
                intercept, weights, ..
            } => intercept + weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>(),
            Regressor::Knn { k, points, targets } => {
                let mut d: Vec<(f64, usize)> = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum(), i))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.iter().take(*k).map(|(_, i)| targets[*i]).sum::<f64>() / *k as f64
            }
        }
    }
}

/// Fitted valuation model; predicts `ln(PMV in USD)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerModel {
    pub format: String,
    pub version: u32,
    pub encoder: FeatureEncoder,
    pub standardizer: Standardizer,
    pub regressor: Regressor,
}

impl ImputerModel {
    pub fn new(encoder: FeatureEncoder, standardizer: Standardizer, regressor: Regressor) -> Self {
        ImputerModel {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            encoder,
            standardizer,
            regressor,
        }
    }

    pub fn predict_log(&self, f: &PmvFeatureVector) -> f64 {
        let x = self.standardizer.apply(&self.encoder.encode(f));
        self.regressor.predict(&x)
    }

    /// Valuation in USD; always positive.
    pub fn predict_pmv(&self, f: &PmvFeatureVector) -> f64 {
        self.predict_log(f).exp()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ImputerModel = serde_json::from_str(text)?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model file {} v{}",
                m.format, m.version
            )));
        }
        Ok(m)
    }
}
