//! Synthetic markets, firm value paths, funding rounds and exits.
//!
//! Per quarter the benchmark log return is `mu_m + sigma_m * z_q` and a firm's
//! log share price moves by
//!
//! ```text
//! rf + gamma + delta * (dln V_m - rf) + sigma * e_q + idio_sigma * u_jq
//! ```
//!
//! where `e_q` is a shock common to the firm's sector and `u_jq` is
//! firm-specific (off by default). All draws come from ChaCha8 seeded with
//! `seed`, one stream per purpose: stream 0 for the market, `1 + i` for the
//! shocks of the `i`-th configured sector, `1000 + j` for firm `j`.
//!
//! Rounds issue new shares at the current price, so an investor's dilution
//! adjusted return from round to exit is exactly the change in share price.
//! Rounds are dated on the first day of a quarter and priced at the preceding
//! quarter end; exits are dated and priced on the last day of their quarter.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_exits, write_funding_rounds, write_organizations, Dataset, ExitEvent, ExitKind,
    FundingRound, Organization, Provenance, RoundType, SectorId,
};
use crate::marketdata::Quarter;
use crate::table::csv_text;

const MARKET_STREAM: u64 = 0;
const SECTOR_STREAM_BASE: u64 = 1;
const FIRM_STREAM_BASE: u64 = 1000;
const MAX_RAISE_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSpec {
    /// Quarterly log drift of the benchmark.
    pub mu_m: f64,
    /// Quarterly log volatility of the benchmark.
    pub sigma_m: f64,
    /// Constant quarterly log risk-free rate.
    pub rf: f64,
    pub index_base: f64,
}

impl Default for MarketSpec {
    fn default() -> Self {
        MarketSpec {
            mu_m: 0.02,
            sigma_m: 0.08,
            rf: 0.005,
            index_base: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirmSpec {
    pub gamma: f64,
    pub delta: f64,
    /// Volatility of the sector-wide shock.
    pub sigma: f64,
    /// Volatility of the firm-specific shock.
    pub idio_sigma: f64,
    /// Median post-money valuation of a first round, USD millions.
    pub initial_valuation_musd: f64,
    /// Log-scale dispersion of first-round valuations.
    pub valuation_dispersion: f64,
}

impl Default for FirmSpec {
    fn default() -> Self {
        FirmSpec {
            gamma: 0.07,
            delta: 0.48,
            sigma: 0.1418,
            idio_sigma: 0.0,
            initial_valuation_musd: 20.0,
            valuation_dispersion: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundPolicy {
    pub per_firm: usize,
    /// Mean quarters between rounds; spacing is `1 + Geometric`.
    pub mean_spacing: f64,
    /// Money raised as a fraction of post-money valuation.
    pub raise_fraction: f64,
    /// Probability that a non-first round's valuation is blanked.
    pub pmv_missing_rate: f64,
}

impl Default for RoundPolicy {
    fn default() -> Self {
        RoundPolicy {
            per_firm: 3,
            mean_spacing: 4.0,
            raise_fraction: 0.2,
            pmv_missing_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitPolicy {
    /// Probability that a firm exits at all.
    pub exit_probability: f64,
    /// Mean quarters from the last round to exit; the lag is Geometric and may be 0.
    pub mean_lag: f64,
    pub ipo_probability: f64,
    /// Probability that an exit's value is blanked.
    pub value_missing_rate: f64,
}

impl Default for ExitPolicy {
    fn default() -> Self {
        ExitPolicy {
            exit_probability: 1.0,
            mean_lag: 4.0,
            ipo_probability: 0.3,
            value_missing_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub seed: u64,
    pub start: Quarter,
    pub quarters: usize,
    pub n_firms: usize,
    pub market: MarketSpec,
    pub firm: FirmSpec,
    /// Firm `j` belongs to `sectors[j % len]`.
    pub sectors: Vec<SectorId>,
    /// Headquarters drawn uniformly from this list.
    pub countries: Vec<String>,
    pub rounds: RoundPolicy,
    pub exits: ExitPolicy,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            seed: 42,
            start: Quarter::new(2010, 1).expect("valid quarter"),
            quarters: 48,
            n_firms: 500,
            market: MarketSpec::default(),
            firm: FirmSpec::default(),
            sectors: vec![
                SectorId::ArtificialIntelligence,
                SectorId::CloudSecurity,
                SectorId::Privacy,
                SectorId::Security,
            ],
            countries: ["US", "US", "US", "IL", "GB", "CN", "CA", "DE"]
                .map(String::from)
                .to_vec(),
            rounds: RoundPolicy::default(),
            exits: ExitPolicy::default(),
        }
    }
}

impl SimSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SimSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("simulation spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.quarters == 0 {
            return bad("quarters must be at least 1".into());
        }
        if self.market.sigma_m < 0.0 || self.firm.sigma < 0.0 || self.firm.idio_sigma < 0.0 {
            return bad("volatilities must be non-negative".into());
        }
        for (name, p) in [
            ("rounds.pmv_missing_rate", self.rounds.pmv_missing_rate),
            ("exits.exit_probability", self.exits.exit_probability),
            ("exits.ipo_probability", self.exits.ipo_probability),
            ("exits.value_missing_rate", self.exits.value_missing_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.rounds.per_firm == 0 || self.rounds.per_firm > self.quarters {
            return bad(format!(
                "rounds.per_firm must be between 1 and quarters ({}), got {}",
                self.quarters, self.rounds.per_firm
            ));
        }
        if self.rounds.mean_spacing < 1.0 {
            return bad("rounds.mean_spacing must be at least 1".into());
        }
        if !(self.rounds.raise_fraction > 0.0) {
            return bad("rounds.raise_fraction must be positive".into());
        }
        if self.exits.mean_lag < 0.0 {
            return bad("exits.mean_lag must be non-negative".into());
        }
        if !(self.firm.initial_valuation_musd > 0.0) || self.market.index_base <= 0.0 {
            return bad("initial valuation and index base must be positive".into());
        }
        if self.sectors.is_empty() || self.countries.is_empty() {
            return bad("sectors and countries must be non-empty".into());
        }
        Ok(())
    }

    /// Simulated quarters in order.
    pub fn quarter_list(&self) -> Vec<Quarter> {
        (0..self.quarters as i64)
            .map(|i| self.start.plus(i))
            .collect()
    }

    fn raise_fraction(&self) -> f64 {
        if self.rounds.raise_fraction > MAX_RAISE_FRACTION {
            log::warn!(
                "raise fraction {} leaves no room for earlier investors; clamped to {}",
                self.rounds.raise_fraction,
                MAX_RAISE_FRACTION
            );
            MAX_RAISE_FRACTION
        } else {
            self.rounds.raise_fraction
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Quarterly log returns of the benchmark.
pub fn simulate_market(spec: &SimSpec) -> Vec<f64> {
    let mut rng = stream(spec.seed, MARKET_STREAM);
    normals(&mut rng, spec.quarters)
        .into_iter()
        .map(|z| spec.market.mu_m + spec.market.sigma_m * z)
        .collect()
}

/// Standard normal sector shocks, one per quarter.
pub fn simulate_sector_shocks(spec: &SimSpec, sector_index: usize) -> Vec<f64> {
    let mut rng = stream(spec.seed, SECTOR_STREAM_BASE + sector_index as u64);
    normals(&mut rng, spec.quarters)
}

/// Quarterly log share-price increments given market returns, sector shocks
/// and firm shocks (`idio` may be empty).
pub fn simulate_firm_path(
    spec: &SimSpec,
    market: &[f64],
    shocks: &[f64],
    idio: &[f64],
) -> Vec<f64> {
    let f = &spec.firm;
    let rf = spec.market.rf;
    market
        .iter()
        .enumerate()
        .map(|(q, m)| {
            let mut inc = rf + f.gamma + f.delta * (m - rf) + f.sigma * shocks[q];
            if let Some(u) = idio.get(q) {
                inc += f.idio_sigma * u;
            }
            inc
        })
        .collect()
}

/// Parameters and realized market path behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SimSpec,
    pub quarters: Vec<Quarter>,
    pub market_log_returns: Vec<f64>,
    pub sector_shocks: BTreeMap<SectorId, Vec<f64>>,
    pub n_rounds: usize,
    pub n_exits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    /// Benchmark levels at each quarter end, starting with the base quarter.
    pub index: Vec<(NaiveDate, f64)>,
    /// Annualized percent risk-free rate on each quarter's first day.
    pub riskfree: Vec<(NaiveDate, f64)>,
    pub truth: GroundTruth,
}

impl SyntheticDataset {
    /// File name and contents of every output.
    pub fn files(&self) -> Result<Vec<(&'static str, String)>> {
        let series = |rows: &[(NaiveDate, f64)], col: &str| {
            csv_text(
                &["date", col],
                rows.iter().map(|(d, v)| [d.to_string(), v.to_string()]),
            )
        };
        Ok(vec![
            (
                "organizations.csv",
                write_organizations(self.dataset.organizations()),
            ),
            (
                "funding_rounds.csv",
                write_funding_rounds(self.dataset.rounds()),
            ),
            ("exits.csv", write_exits(self.dataset.exits())),
            ("index.csv", series(&self.index, "level")),
            ("riskfree.csv", series(&self.riskfree, "rate")),
            (
                "ground_truth.json",
                serde_json::to_string_pretty(&self.truth)? + "\n",
            ),
        ])
    }
}

/// Draw a complete synthetic dataset from `spec`.
pub fn simulate(spec: &SimSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let market = simulate_market(spec);
    let shocks: Vec<Vec<f64>> = (0..spec.sectors.len())
        .map(|i| simulate_sector_shocks(spec, i))
        .collect();
    emit_dataset(spec, &market, &shocks)
}

/// Firms, rounds and exits on top of simulated market and sector paths.
pub fn emit_dataset(
    spec: &SimSpec,
    market: &[f64],
    shocks: &[Vec<f64>],
) -> Result<SyntheticDataset> {
    spec.validate()?;
    let quarters = spec.quarter_list();
    let n_q = spec.quarters;
    let fraction = spec.raise_fraction();
    let spacing = Geometric::new(1.0 / spec.rounds.mean_spacing)
        .map_err(|e| Error::Config(format!("rounds.mean_spacing: {e}")))?;
    let lag = Geometric::new(1.0 / (1.0 + spec.exits.mean_lag))
        .map_err(|e| Error::Config(format!("exits.mean_lag: {e}")))?;

    let mut organizations = Vec::with_capacity(spec.n_firms);
    let mut rounds = Vec::new();
    let mut exits = Vec::new();

    for j in 0..spec.n_firms {
        let mut rng = stream(spec.seed, FIRM_STREAM_BASE + j as u64);
        let sector_index = j % spec.sectors.len();
        let sector = spec.sectors[sector_index];
        let org_id = format!("f{j:05}");
        let country = spec.countries[rng.random_range(0..spec.countries.len())].clone();
        organizations.push(Organization {
            org_id: org_id.clone(),
            name: format!("Synthetic Firm {j}"),
            country: Some(country),
            tags: BTreeSet::from([sector.tag()]),
            sectors: BTreeSet::from([sector]),
        });

        let idio = if spec.firm.idio_sigma > 0.0 {
            normals(&mut rng, n_q)
        } else {
            Vec::new()
        };
        let increments = simulate_firm_path(spec, market, &shocks[sector_index], &idio);
        // ln_price[k] is the log price at the end of quarter k-1; index 0 is the base
        let mut ln_price = Vec::with_capacity(n_q + 1);
        ln_price.push(0.0);
        for inc in &increments {
            ln_price.push(ln_price.last().expect("non-empty") + inc);
        }

        let mut gaps: Vec<usize> = (1..spec.rounds.per_firm)
            .map(|_| 1 + spacing.sample(&mut rng) as usize)
            .collect();
        let mut span: usize = gaps.iter().sum();
        if span > n_q - 1 {
            gaps.iter_mut().for_each(|g| *g = 1);
            span = gaps.len();
        }
        let first = rng.random_range(0..n_q - span);
        let mut round_quarters = vec![first];
        for g in &gaps {
            round_quarters.push(round_quarters.last().expect("non-empty") + g);
        }

        let first_valuation = spec.firm.initial_valuation_musd
            * (spec.firm.valuation_dispersion * rng.sample::<f64, _>(StandardNormal)).exp();
        let mut shares = first_valuation / ln_price[first].exp() * (1.0 - fraction);
        for (k, &q) in round_quarters.iter().enumerate() {
            shares /= 1.0 - fraction;
            let valuation = ln_price[q].exp() * shares;
            let blank = rng.random::<f64>() < spec.rounds.pmv_missing_rate && k > 0;
            let investors = rng.random_range(1..=8u32);
            let lead = rng.random_range(0..=5u32);
            rounds.push(FundingRound {
                round_id: format!("{org_id}-r{k}"),
                org_id: org_id.clone(),
                date: quarters[q].first_day(),
                amount_musd: fraction * valuation,
                pmv_musd: (!blank).then_some(valuation),
                pmv_provenance: if blank {
                    Provenance::Missing
                } else {
                    Provenance::Observed
                },
                investor_count: investors,
                lead_investor_rank: (lead > 0).then_some(lead),
                round_type: round_type(k),
            });
        }

        let exits_at_all = rng.random::<f64>() < spec.exits.exit_probability;
        let exit_q = round_quarters.last().expect("non-empty") + lag.sample(&mut rng) as usize;
        let ipo = rng.random::<f64>() < spec.exits.ipo_probability;
        let blank = rng.random::<f64>() < spec.exits.value_missing_rate;
        if exits_at_all && exit_q < n_q {
            let value = ln_price[exit_q + 1].exp() * shares;
            exits.push(ExitEvent {
                org_id,
                date: quarters[exit_q].last_day(),
                kind: if ipo {
                    ExitKind::Ipo
                } else {
                    ExitKind::Acquisition
                },
                exit_value_musd: (!blank).then_some(value),
                value_provenance: if blank {
                    Provenance::Missing
                } else {
                    Provenance::Observed
                },
            });
        }
    }

    let mut index = vec![(spec.start.prev().last_day(), spec.market.index_base)];
    let mut ln_level = spec.market.index_base.ln();
    for (q, m) in quarters.iter().zip(market) {
        ln_level += m;
        index.push((q.last_day(), ln_level.exp()));
    }
    let annual_pct = 100.0 * (4.0 * spec.market.rf).exp_m1();
    let riskfree = quarters
        .iter()
        .map(|q| (q.first_day(), annual_pct))
        .collect();

    let truth = GroundTruth {
        spec: spec.clone(),
        quarters: quarters.clone(),
        market_log_returns: market.to_vec(),
        sector_shocks: spec
            .sectors
            .iter()
            .copied()
            .zip(shocks.iter().cloned())
            .collect(),
        n_rounds: rounds.len(),
        n_exits: exits.len(),
    };
    Ok(SyntheticDataset {
        dataset: Dataset::new(organizations, rounds, exits),
        index,
        riskfree,
        truth,
    })
}

fn round_type(k: usize) -> RoundType {
    match k {
        0 => RoundType::Seed,
        1 => RoundType::SeriesA,
        2 => RoundType::SeriesB,
        _ => RoundType::SeriesCPlus,
    }
}
