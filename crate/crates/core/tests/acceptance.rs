//! Acceptance checks, one line per criterion. Runs without the libtest
//! harness so the lines are always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use vcperf_core::econometrics::{
    annualize, arithmetic_moments, expected_log_return_from, AnnualKind,
};
use vcperf_core::impute::{fit_imputer, impute_dataset, labeled_rounds, ImputerConfig};
use vcperf_core::ingest::{FundingRound, Organization, Provenance, RoundType, SectorId, SectorKey};
use vcperf_core::marketdata::{
    available_log_market_returns, available_log_riskfree, MarketMoments, PriceSeries, RateSeries,
};
use vcperf_core::pipeline::{fit_stage, returns_stage, run, Market, RunConfig, Stage};
use vcperf_core::returns::{dilution_stake, to_daily, to_quarterly, DilutionMode, RoundTerms};
use vcperf_core::sim::{simulate, ExitPolicy, RoundPolicy, SimSpec};
use vcperf_core::stats::{build_report, display_consistent, summarize, welch_t, ReportConfig};
use vcperf_core::Dataset;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn recovery_spec(seed: u64) -> SimSpec {
    SimSpec {
        seed,
        n_firms: 500,
        quarters: 48,
        sectors: vec![SectorId::ArtificialIntelligence],
        rounds: RoundPolicy {
            per_firm: 1,
            ..RoundPolicy::default()
        },
        exits: ExitPolicy {
            mean_lag: 0.0,
            ..ExitPolicy::default()
        },
        ..SimSpec::default()
    }
}

fn parameter_recovery() -> Outcome {
    const SEEDS: u64 = 500;
    let started = Instant::now();
    let cfg = RunConfig::default();
    let grid = cfg.grid().expect("default window");
    let (mut gamma_hits, mut delta_hits, mut fitted) = (0, 0, 0);
    for seed in 0..SEEDS {
        let spec = recovery_spec(seed);
        let synthetic = simulate(&spec).expect("valid spec");
        let returns = returns_stage(&synthetic.dataset, &cfg).expect("returns");
        let index = PriceSeries::new(synthetic.index.clone()).expect("index");
        let rates = RateSeries::new(synthetic.riskfree.clone()).expect("rates");
        let market = Market {
            ln_rm: available_log_market_returns(&index, &grid),
            ln_rf: available_log_riskfree(&rates, &grid, cfg.riskfree_convention),
        };
        let fits = fit_stage(&returns.series, &market, &cfg);
        let Some(r) = fits
            .results
            .iter()
            .find(|r| r.fit.key == SectorKey::Sector(SectorId::ArtificialIntelligence))
        else {
            continue;
        };
        fitted += 1;
        let f = &r.fit;
        if (f.gamma - spec.firm.gamma).abs() <= 2.0 * f.se_gamma {
            gamma_hits += 1;
        }
        if (f.delta - spec.firm.delta).abs() <= 2.0 * f.se_delta {
            delta_hits += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let g = gamma_hits as f64 / SEEDS as f64;
    let d = delta_hits as f64 / SEEDS as f64;
    outcome(
        g >= 0.9 && d >= 0.9 && secs < 60.0,
        format!(
            "{fitted}/{SEEDS} fitted, gamma within 2 se {:.1}%, delta within 2 se {:.1}%, {secs:.1}s",
            100.0 * g,
            100.0 * d
        ),
    )
}

fn cross_table_consistency() -> Outcome {
    // (sector, gamma, delta, annual E[ln R] %) as printed
    const ROWS: [(&str, f64, f64, f64); 13] = [
        ("Artificial intelligence", 0.13, 0.48, 55.55),
        ("Cloud security", 0.11, 0.25, 47.21),
        ("Biometrics", 0.07, -0.68, 31.30),
        ("Blockchain", 0.26, -0.26, 105.42),
        ("Cyber security", 0.08, -0.32, 33.09),
        ("E-signature", 0.08, 0.49, 36.10),
        ("Fraud detection", 0.13, -0.56, 54.99),
        ("Internet of Things", 0.07, -0.35, 31.87),
        ("Machine learning", 0.13, 0.15, 52.57),
        ("Network security", 0.07, -0.20, 29.41),
        ("Privacy", 0.12, 1.71, 51.89),
        ("Private cloud", 0.12, -0.12, 50.81),
        ("All sectors", 0.07, 0.48, 34.17),
    ];
    // E/400 - gamma = mu_f + delta * premium, solved from the first two rows
    let (_, g1, d1, e1) = ROWS[0];
    let (_, g2, d2, e2) = ROWS[1];
    let (b1, b2) = (e1 / 400.0 - g1, e2 / 400.0 - g2);
    let premium = (b1 - b2) / (d1 - d2);
    let mu_f = b1 - d1 * premium;
    let mm = MarketMoments {
        mu_ln_rf: mu_f,
        mu_ln_rm: mu_f + premium,
        var_ln_rm: 0.0,
    };
    let mut worst = (0.0f64, "");
    let mut misses = Vec::new();
    for &(name, gamma, delta, printed) in &ROWS[2..] {
        let predicted = annualize(
            expected_log_return_from(gamma, delta, &mm),
            AnnualKind::LogMean,
        );
        let gap = (predicted - printed).abs();
        if gap > worst.0 {
            worst = (gap, name);
        }
        if gap > 3.0 {
            misses.push(format!("{name} {predicted:.2} vs {printed:.2}"));
        }
    }
    let mut detail = format!(
        "mu_f {mu_f:.5}, premium {premium:.5}; 11 rows predicted, worst {} off by {:.2} pp",
        worst.1, worst.0
    );
    if !misses.is_empty() {
        detail.push_str(&format!("; outside 3 pp: {}", misses.join(", ")));
    }
    outcome(misses.is_empty(), detail)
}

fn lognormal_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut jensen_violations) = (0.0f64, 0);
    for _ in 0..1000 {
        let mu = rng.random_range(-0.5..=0.5);
        let var = rng.random_range(0.0..=1.0);
        let (e_r, v_r) = arithmetic_moments(mu, var);
        let other_form = var.exp_m1() * (2.0 * mu + var).exp();
        worst = worst.max(rel_err(v_r, other_form));
        if e_r < mu.exp_m1() || e_r < mu {
            jensen_violations += 1;
        }
    }
    outcome(
        worst <= 1e-12 && jensen_violations == 0,
        format!("max relative gap {worst:.2e}, {jensen_violations} Jensen violations"),
    )
}

/// Final ownership of the first investor by explicit share issuance.
fn share_count_stake(cascade: &[RoundTerms]) -> f64 {
    let mut outstanding = 1.0;
    let mut held = 0.0;
    for (k, r) in cascade.iter().enumerate() {
        // new shares priced at the pre-money valuation
        let issued = outstanding * r.money / (r.valuation - r.money);
        if k == 0 {
            held = issued;
        }
        outstanding += issued;
    }
    held / outstanding
}

fn dilution_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_std, mut worst_printed) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=5);
        let cascade: Vec<RoundTerms> = (0..n)
            .map(|_| {
                let v = 10f64.powf(rng.random_range(0.0..4.0));
                RoundTerms::new(v * rng.random_range(0.01..0.95), v)
            })
            .collect();
        let got = dilution_stake(&cascade, DilutionMode::Standard).expect("valid cascade");
        worst_std = worst_std.max(rel_err(got, share_count_stake(&cascade)));

        let printed = dilution_stake(&cascade, DilutionMode::AsPrinted).expect("valid cascade");
        let mut direct = cascade[0].money / cascade[0].valuation;
        for w in cascade.windows(2) {
            direct *= (w[0].valuation - w[1].money) / w[1].valuation;
        }
        worst_printed = worst_printed.max(rel_err(printed, direct));
    }
    outcome(
        worst_std <= 1e-12 && worst_printed <= 1e-12,
        format!("standard max rel err {worst_std:.2e}, as-printed {worst_printed:.2e}"),
    )
}

fn welch_correctness() -> Outcome {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [2.0, 4.0, 6.0, 8.0, 10.0];
    let w = welch_t(&a, &b).expect("fixture");
    let fixture_ok = (w.t + 1.8974).abs() < 1e-3 && (w.df - 5.882).abs() < 1e-3;
    let same = welch_t(&a, &a).expect("equal samples");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut asym = 0;
    for _ in 0..1000 {
        let mut draw = || -> Vec<f64> {
            let n = rng.random_range(2..30);
            (0..n).map(|_| rng.random_range(-100.0..100.0)).collect()
        };
        let (x, y) = (draw(), draw());
        let (xy, yx) = (welch_t(&x, &y).unwrap(), welch_t(&y, &x).unwrap());
        if xy.t != -yx.t || xy.df != yx.df {
            asym += 1;
        }
    }
    outcome(
        fixture_ok && same.t == 0.0 && asym == 0,
        format!(
            "t {:.4}, df {:.3}, equal-sample t {}, {asym} antisymmetry failures",
            w.t, w.df, same.t
        ),
    )
}

fn return_scaling() -> Outcome {
    const DAYS: f64 = 91.3125;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r: f64 = rng.random_range(-0.99..10.0);
        let back = to_quarterly(to_daily(r, DAYS).unwrap(), DAYS).unwrap();
        worst = worst.max(rel_err(back, r));
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.2e}"))
}

fn table2_consistency() -> Outcome {
    let spec = SimSpec {
        n_firms: 300,
        sectors: SectorId::ALL.to_vec(),
        ..SimSpec::default()
    };
    let synthetic = simulate(&spec).expect("valid spec");
    let grid = RunConfig::default().grid().expect("default window");
    let report = build_report(&synthetic.dataset, &grid, &ReportConfig::default());
    let rows: Vec<_> = report
        .table2
        .iter()
        .flat_map(|r| std::iter::once(&r.funding).chain(r.pmv.as_ref()))
        .collect();
    let worst = rows
        .iter()
        .map(|s| rel_err(s.mean * s.n as f64, s.total))
        .fold(0.0, f64::max);

    // eight amounts whose mean and total display as 7.24 and 57.90
    let spam = [5.10, 6.35, 6.90, 7.15, 7.40, 7.75, 8.05, 9.20];
    let s = summarize("Spam Filtering", &spam).expect("non-empty");
    let (mean_2dp, total_2dp) = (format!("{:.2}", s.mean), format!("{:.2}", s.total));
    let spam_ok = mean_2dp == "7.24"
        && total_2dp == "57.90"
        && display_consistent(7.24, 8, 57.90, 2)
        && !display_consistent(7.24, 8, 58.10, 2);
    outcome(
        worst <= 1e-9 && spam_ok,
        format!(
            "{} summary rows, max rel gap {worst:.2e}; engineered row {mean_2dp} x 8 vs {total_2dp}",
            rows.len()
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("artifact"),
            )
        })
        .collect()
}

fn end_to_end_determinism() -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic/run.toml");
    let out = tempfile::tempdir().expect("tempdir");
    let mut cfg = match RunConfig::from_file(&config) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("fixture config: {e}")),
    };
    cfg.out = out.path().to_path_buf();
    let started = Instant::now();
    let first = run(&cfg, Stage::All).map(|_| snapshot(out.path()));
    let second = run(&cfg, Stage::All).map(|_| snapshot(out.path()));
    let secs = started.elapsed().as_secs_f64() / 2.0;
    match (first, second) {
        (Ok(a), Ok(b)) => outcome(
            a == b && secs < 30.0,
            format!(
                "{} artifacts, identical: {}, {secs:.2}s per run",
                a.len(),
                a == b
            ),
        ),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("run failed: {e}")),
    }
}

/// Rounds with `ln pmv = 2 ln M + c + noise`, a quarter of them unlabeled.
fn linear_fixture(n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.1).expect("valid sd");
    let c = -12.0;
    let start = NaiveDate::from_ymd_opt(2012, 1, 1).expect("valid date");
    let mut orgs = Vec::new();
    let mut rounds = Vec::new();
    for i in 0..n {
        let sector = SectorId::ALL[i % SectorId::ALL.len()];
        let org_id = format!("o{i:04}");
        orgs.push(Organization {
            org_id: org_id.clone(),
            name: format!("Org {i}"),
            country: Some(["US", "IL", "GB", "DE"][i % 4].to_owned()),
            tags: BTreeSet::from([sector.tag()]),
            sectors: BTreeSet::from([sector]),
        });
        let m_usd = 10f64.powf(rng.random_range(5.5..8.0));
        let ln_pmv = 2.0 * m_usd.ln() + c + noise.sample(&mut rng);
        let labeled = rng.random_range(0.0..1.0) < 0.75;
        rounds.push(FundingRound {
            round_id: format!("{org_id}-a"),
            org_id,
            date: start + chrono::Days::new(rng.random_range(0..3000)),
            amount_musd: m_usd / 1e6,
            pmv_musd: labeled.then(|| ln_pmv.exp() / 1e6),
            pmv_provenance: if labeled {
                Provenance::Observed
            } else {
                Provenance::Missing
            },
            investor_count: rng.random_range(1..10),
            lead_investor_rank: None,
            round_type: RoundType::SeriesA,
        });
    }
    Dataset::new(orgs, rounds, Vec::new())
}

fn imputer_sanity() -> Outcome {
    let dataset = linear_fixture(600);
    let cfg = ImputerConfig {
        seed: 1,
        ..ImputerConfig::default()
    };
    let (model, report) = match fit_imputer(&labeled_rounds(&dataset), &cfg) {
        Ok(fit) => fit,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let (imputed, counts) = impute_dataset(&dataset, &model);
    let mut modified = 0;
    for (before, after) in dataset.rounds().iter().zip(imputed.rounds()) {
        if before.pmv_provenance == Provenance::Observed
            && (after.pmv_musd != before.pmv_musd || after.pmv_provenance != Provenance::Observed)
        {
            modified += 1;
        }
    }
    outcome(
        report.holdout_mae < 0.15 && modified == 0,
        format!(
            "holdout MAE {:.4} on {} rows, {} imputed, {modified} observed valuations changed",
            report.holdout_mae, report.n_holdout, counts.pmvs
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("simulator parameter recovery", parameter_recovery),
        (
            "cross-table consistency of implied log returns",
            cross_table_consistency,
        ),
        ("lognormal identities", lognormal_identities),
        ("dilution oracle", dilution_oracle),
        ("Welch correctness", welch_correctness),
        ("return scaling round trip", return_scaling),
        ("summary table consistency", table2_consistency),
        ("end-to-end determinism", end_to_end_determinism),
        ("imputer sanity", imputer_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
