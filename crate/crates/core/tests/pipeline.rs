use vcperf_core::impute::{fit_imputer, impute_dataset, labeled_rounds, ImputerConfig};
use vcperf_core::ingest::Provenance;
use vcperf_core::pipeline::{ingest_texts, RunConfig};
use vcperf_core::sim::{simulate, SimSpec};
use vcperf_core::Error;

fn spec(missing: f64) -> SimSpec {
    let mut spec = SimSpec {
        n_firms: 150,
        seed: 21,
        ..SimSpec::default()
    };
    spec.rounds.pmv_missing_rate = missing;
    spec.exits.value_missing_rate = missing;
    spec
}

fn file<'a>(files: &'a [(&str, String)], name: &str) -> &'a str {
    &files
        .iter()
        .find(|(n, _)| *n == name)
        .expect("simulated file")
        .1
}

#[test]
fn simulated_files_ingest_without_rejects() {
    let synthetic = simulate(&spec(0.3)).unwrap();
    let files = synthetic.files().unwrap();
    let ingested = ingest_texts(
        file(&files, "organizations.csv"),
        file(&files, "funding_rounds.csv"),
        file(&files, "exits.csv"),
        &RunConfig::default(),
    )
    .unwrap();
    assert!(ingested.organization_rejects.is_empty());
    assert!(ingested.round_rejects.is_empty());
    assert!(ingested.exit_rejects.is_empty());
    // float_roundtrip keeps every value exact through the CSV text
    assert_eq!(ingested.dataset, synthetic.dataset);
}

#[test]
fn imputation_counts_and_idempotence() {
    let dataset = simulate(&spec(0.3)).unwrap().dataset;
    let missing = dataset
        .rounds()
        .iter()
        .filter(|r| r.pmv_provenance == Provenance::Missing)
        .count();
    assert!(missing > 0);
    let cfg = ImputerConfig {
        seed: 4,
        ..ImputerConfig::default()
    };
    let (model, _) = fit_imputer(&labeled_rounds(&dataset), &cfg).unwrap();
    let (once, counts) = impute_dataset(&dataset, &model);
    assert_eq!(counts.pmvs, missing);
    let imputed = once
        .rounds()
        .iter()
        .filter(|r| r.pmv_provenance == Provenance::Imputed)
        .count();
    assert_eq!(imputed, missing);
    assert!(once
        .rounds()
        .iter()
        .all(|r| r.pmv_musd.is_some_and(|v| v > 0.0)));
    for (a, b) in dataset.rounds().iter().zip(once.rounds()) {
        if a.pmv_provenance == Provenance::Observed {
            assert_eq!(a, b);
        }
    }

    let (twice, again) = impute_dataset(&once, &model);
    assert_eq!(twice, once);
    assert_eq!(again.pmvs, 0);
    assert_eq!(again.exit_values, 0);
}

#[test]
fn nothing_missing_leaves_dataset_unchanged() {
    let dataset = simulate(&spec(0.0)).unwrap().dataset;
    let (model, _) = fit_imputer(&labeled_rounds(&dataset), &ImputerConfig::default()).unwrap();
    let (out, counts) = impute_dataset(&dataset, &model);
    assert_eq!(out, dataset);
    assert_eq!(counts.pmvs, 0);
}

#[test]
fn imputer_fit_is_deterministic() {
    let dataset = simulate(&spec(0.3)).unwrap().dataset;
    let labeled = labeled_rounds(&dataset);
    let cfg = ImputerConfig::default();
    let (a, _) = fit_imputer(&labeled, &cfg).unwrap();
    let (b, _) = fit_imputer(&labeled, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn too_few_labels_is_reported() {
    let mut s = spec(0.0);
    s.n_firms = 10;
    s.rounds.per_firm = 2;
    let dataset = simulate(&s).unwrap().dataset;
    let err = fit_imputer(&labeled_rounds(&dataset), &ImputerConfig::default()).unwrap_err();
    assert!(matches!(err, Error::TooFewLabels { got: 20, .. }), "{err}");
}
