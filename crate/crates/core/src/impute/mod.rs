//! Missing post-money valuations estimated from round features by regression
//! on log valuation.

mod features;
mod model;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use features::{build_features, FeatureEncoder, PmvFeatureVector, NUMERIC_COLUMNS};
pub use model::{ImputerKind, ImputerModel, Regressor, Standardizer, MODEL_FORMAT, MODEL_VERSION};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputerConfig {
    pub kind: ImputerKind,
    /// Set from the run seed, not from the config file.
    #[serde(skip)]
    pub seed: u64,
    pub lambdas: Vec<f64>,
    pub folds: usize,
    pub holdout_fraction: f64,
    pub knn_k: usize,
    pub country_top_k: usize,
    pub min_labels: usize,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        ImputerConfig {
            kind: ImputerKind::Ridge,
            seed: 0,
            lambdas: vec![0.01, 0.1, 1.0, 10.0],
            folds: 5,
            holdout_fraction: 0.2,
            knn_k: 10,
            country_top_k: 20,
            min_labels: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorError {
    pub n: usize,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImputationReport {
    pub kind: ImputerKind,
    pub lambda: Option<f64>,
    /// Mean cross-validated squared log error per candidate penalty.
    pub cv_mse: Vec<(f64, f64)>,
    pub n_train: usize,
    pub n_holdout: usize,
    /// Absolute errors in log space on the holdout.
    pub holdout_mae: f64,
    pub holdout_median_ae: f64,
    pub per_sector: BTreeMap<String, SectorError>,
}

/// Feature vectors and observed valuations (USD) of every round with an observed PMV.
pub fn labeled_rounds(dataset: &Dataset) -> Vec<(PmvFeatureVector, f64)> {
    let orgs = dataset.organization_index();
    let by_org = dataset.rounds_by_org();
    dataset
        .rounds()
        .iter()
        .filter(|r| r.pmv_provenance == Provenance::Observed)
        .filter_map(|r| {
            let pmv = r.pmv_musd?;
            let history = by_org.get(r.org_id.as_str()).copied().unwrap_or(&[]);
            let f = build_features(r, history, orgs.get(r.org_id.as_str()).copied());
            Some((f, pmv * 1e6))
        })
        .collect()
}

fn fit_regressor(
    kind: ImputerKind,
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    k: usize,
) -> Result<Regressor> {
    match kind {
        ImputerKind::Ridge => Regressor::fit_ridge(x, y, lambda),
        ImputerKind::Knn => Ok(Regressor::fit_knn(x, y, k)),
        ImputerKind::Passthrough => Err(Error::Model("passthrough has no regressor".into())),
    }
}

fn fit_on(
    kind: ImputerKind,
    encoder: &FeatureEncoder,
    rows: &[&(PmvFeatureVector, f64)],
    lambda: f64,
    k: usize,
) -> Result<ImputerModel> {
    let raw: Vec<Vec<f64>> = rows.iter().map(|(f, _)| encoder.encode(f)).collect();
    let standardizer = Standardizer::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let y: Vec<f64> = rows.iter().map(|(_, v)| v.ln()).collect();
    let regressor = fit_regressor(kind, &x, &y, lambda, k)?;
    Ok(ImputerModel::new(encoder.clone(), standardizer, regressor))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fit the configured regressor on log valuation.
///
/// A seeded shuffle sets aside `holdout_fraction` of the rows for the report;
/// the penalty is chosen by k-fold cross-validation on the rest, and the
/// returned model is fitted on the training rows only.
pub fn fit_imputer(
    labeled: &[(PmvFeatureVector, f64)],
    cfg: &ImputerConfig,
) -> Result<(ImputerModel, ImputationReport)> {
    if cfg.kind == ImputerKind::Passthrough {
        return Err(Error::Config(
            "the passthrough imputer is not fitted".into(),
        ));
    }
    let needed = cfg.min_labels.max(2);
    if labeled.len() < needed {
        return Err(Error::TooFewLabels {
            needed,
            got: labeled.len(),
        });
    }
    if let Some((_, v)) = labeled.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Invalid(format!(
            "labeled valuation {v} is not positive"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    order.shuffle(&mut rng);
    let n_holdout =
        ((labeled.len() as f64 * cfg.holdout_fraction).ceil() as usize).clamp(1, labeled.len() - 1);
    let (holdout_idx, train_idx) = order.split_at(n_holdout);
    let train: Vec<&(PmvFeatureVector, f64)> = train_idx.iter().map(|&i| &labeled[i]).collect();
    let holdout: Vec<&(PmvFeatureVector, f64)> = holdout_idx.iter().map(|&i| &labeled[i]).collect();

    let encoder = FeatureEncoder::from_training(
        train.iter().map(|(f, _)| f.country.as_deref()),
        cfg.country_top_k,
    );

    let mut cv_mse = Vec::new();
    let lambda = if cfg.kind == ImputerKind::Ridge {
        let folds = cfg.folds.clamp(2, train.len());
        let mut best: Option<(f64, f64)> = None;
        for &lambda in &cfg.lambdas {
            let mut sse = 0.0;
            for fold in 0..folds {
                let fit_rows: Vec<_> = train
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % folds != fold)
                    .map(|(_, r)| *r)
                    .collect();
                let model = fit_on(cfg.kind, &encoder, &fit_rows, lambda, cfg.knn_k)?;
                sse += train
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % folds == fold)
                    .map(|(_, (f, v))| (model.predict_log(f) - v.ln()).powi(2))
                    .sum::<f64>();
            }
            let mse = sse / train.len() as f64;
            cv_mse.push((lambda, mse));
            if best.is_none_or(|(_, b)| mse < b) {
                best = Some((lambda, mse));
            }
        }
        Some(
            best.ok_or_else(|| Error::Config("imputer.lambdas is empty".into()))?
                .0,
        )
    } else {
        None
    };

    let model = fit_on(cfg.kind, &encoder, &train, lambda.unwrap_or(0.0), cfg.knn_k)?;

    let mut errors = Vec::with_capacity(holdout.len());
    let mut per_sector: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (f, v) in &holdout {
        let e = (model.predict_log(f) - v.ln()).abs();
        errors.push(e);
        let label = f.sector.map_or("other".to_owned(), |s| s.name().to_owned());
        let slot = per_sector.entry(label).or_default();
        slot.0 += 1;
        slot.1 += e;
    }
    let report = ImputationReport {
        kind: cfg.kind,
        lambda,
        cv_mse,
        n_train: train.len(),
        n_holdout: holdout.len(),
        holdout_mae: errors.iter().sum::<f64>() / errors.len() as f64,
        holdout_median_ae: median(errors),
        per_sector: per_sector
            .into_iter()
            .map(|(k, (n, s))| {
                (
                    k,
                    SectorError {
                        n,
                        mae: s / n as f64,
                    },
                )
            })
            .collect(),
    };
    Ok((model, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ImputeCounts {
    pub pmvs: usize,
    pub exit_values: usize,
}

/// Fill every missing PMV, and every missing exit value from a hypothetical
/// round at the exit date carrying the last round's terms. Observed and
/// already imputed values are left untouched.
pub fn impute_dataset(dataset: &Dataset, model: &ImputerModel) -> (Dataset, ImputeCounts) {
    let orgs = dataset.organization_index();
    let by_org = dataset.rounds_by_org();
    let mut counts = ImputeCounts::default();

    let rounds = dataset
        .rounds()
        .iter()
        .map(|r| {
            if r.pmv_musd.is_some() {
                return r.clone();
            }
            let history = by_org.get(r.org_id.as_str()).copied().unwrap_or(&[]);
            let f = build_features(r, history, orgs.get(r.org_id.as_str()).copied());
            counts.pmvs += 1;
            let mut out = r.clone();
            out.pmv_musd = Some(model.predict_pmv(&f) / 1e6);
            out.pmv_provenance = Provenance::Imputed;
            out
        })
        .collect();

    let exits = dataset
        .exits()
        .iter()
        .map(|e| {
            if e.exit_value_musd.is_some() {
                return e.clone();
            }
            let last = by_org
                .get(e.org_id.as_str())
                .and_then(|rs| rs.iter().rev().find(|r| r.date <= e.date));
            let Some(last) = last else {
                return e.clone();
            };
            let f = features::features_at(
                e.date,
                last.amount_musd,
                last.investor_count,
                last.lead_investor_rank,
                Some(last),
                orgs.get(e.org_id.as_str()).copied(),
            );
            counts.exit_values += 1;
            let mut out = e.clone();
            out.exit_value_musd = Some(model.predict_pmv(&f) / 1e6);
            out.value_provenance = Provenance::Imputed;
            out
        })
        .collect();

    (
        Dataset::new(dataset.organizations().to_vec(), rounds, exits),
        counts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SectorId;
    use rand::Rng;

    fn synthetic(n: usize, seed: u64, target: impl Fn(f64) -> f64) -> Vec<(PmvFeatureVector, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let m = 10f64.powf(rng.random_range(5.0..8.0));
                let f = PmvFeatureVector {
                    t_days: rng.random_range(30_000.0..35_000.0),
                    dt_days: rng.random_range(0.0..900.0),
                    m_usd: m,
                    dm_usd: rng.random_range(-1e6..1e6),
                    investors: rng.random_range(1..9) as f64,
                    lead_rank: rng.random_range(0..5) as f64,
                    sector: Some(SectorId::ALL[i % 19]),
                    country: Some(["US", "IL", "GB", "CN"][i % 4].to_owned()),
                };
                (f, target(m).exp())
            })
            .collect()
    }

    #[test]
    fn recovers_log_linear_target() {
        let data = synthetic(400, 1, |m| 2.0 * m.ln() - 8.0);
        let (_, rep) = fit_imputer(&data, &ImputerConfig::default()).unwrap();
        assert!(rep.holdout_mae < 0.05, "{rep:?}");
        assert_eq!(rep.n_train + rep.n_holdout, 400);
        assert_eq!(rep.n_holdout, 80);
    }

    #[test]
    fn multiple_of_money() {
        let data = synthetic(300, 2, |m| m.ln() + 4f64.ln());
        let (model, _) = fit_imputer(&data, &ImputerConfig::default()).unwrap();
        let mut f = data[0].0.clone();
        f.m_usd = 10e6;
        let pmv = model.predict_pmv(&f);
        assert!((pmv / 40e6 - 1.0).abs() < 0.05, "{pmv}");
    }

    #[test]
    fn constant_target() {
        let data = synthetic(100, 3, |_| 17.0);
        for kind in [ImputerKind::Ridge, ImputerKind::Knn] {
            let cfg = ImputerConfig {
                kind,
                ..ImputerConfig::default()
            };
            let (model, rep) = fit_imputer(&data, &cfg).unwrap();
            assert!(rep.holdout_mae < 1e-9);
            assert!((model.predict_log(&data[5].0) - 17.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_labels() {
        let data = synthetic(10, 4, |m| m.ln());
        let err = fit_imputer(&data, &ImputerConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewLabels {
                needed: 50,
                got: 10
            }
        ));
        assert!(err.to_string().contains("passthrough"));
    }

    #[test]
    fn unseen_country_uses_other_bucket() {
        let data = synthetic(120, 5, |m| m.ln() + 1.0);
        let (model, _) = fit_imputer(&data, &ImputerConfig::default()).unwrap();
        let mut a = data[0].0.clone();
        let mut b = a.clone();
        a.country = Some("ZZ".into());
        b.country = None;
        assert_eq!(model.predict_log(&a), model.predict_log(&b));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let data = synthetic(120, 6, |m| 0.8 * m.ln() + 3.0);
        for kind in [ImputerKind::Ridge, ImputerKind::Knn] {
            let cfg = ImputerConfig {
                kind,
                seed: 9,
                ..ImputerConfig::default()
            };
            let (model, _) = fit_imputer(&data, &cfg).unwrap();
            let again = ImputerModel::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(model, again);
            for (f, _) in &data {
                assert_eq!(
                    model.predict_pmv(f).to_bits(),
                    again.predict_pmv(f).to_bits()
                );
            }
            let (model2, _) = fit_imputer(&data, &cfg).unwrap();
            assert_eq!(model, model2);
        }
    }
}
