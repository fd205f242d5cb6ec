//! Dilution-adjusted returns from funding rounds to exit, rescaled to a
//! quarterly horizon and averaged per sector on the quarter grid.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Organization, SectorKey};
use crate::marketdata::{Quarter, QuarterGrid};

/// 365.25 / 4
pub const DAYS_PER_QUARTER: f64 = 91.3125;

/// How later rounds dilute an earlier investor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DilutionMode {
    /// Each later round `k` keeps `(v_k - m_k) / v_k` of existing equity.
    #[default]
    Standard,
    /// Numerator uses the previous valuation: `(v_{k-1} - m_k) / v_k`.
    AsPrinted,
}

impl DilutionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DilutionMode::Standard => "standard",
            DilutionMode::AsPrinted => "as-printed",
        }
    }
}

impl fmt::Display for DilutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DilutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "standard" => Ok(DilutionMode::Standard),
            "as-printed" | "asprinted" => Ok(DilutionMode::AsPrinted),
            other => Err(Error::Config(format!(
                "unknown dilution mode `{other}` (expected standard or as-printed)"
            ))),
        }
    }
}

/// Which rounds of a firm are treated as entry points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryPolicy {
    #[default]
    EveryRound,
    FirstRoundOnly,
}

/// Money raised and post-money valuation of one round, in the same unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTerms {
    pub money: f64,
    pub valuation: f64,
}

impl RoundTerms {
    pub fn new(money: f64, valuation: f64) -> Self {
        RoundTerms { money, valuation }
    }
}

/// Fraction of equity held at exit by the investors of `cascade[0]`, after
/// dilution by every later round in `cascade`.
pub fn dilution_stake(cascade: &[RoundTerms], mode: DilutionMode) -> Result<f64> {
    let (entry, later) = cascade
        .split_first()
        .ok_or_else(|| Error::Invalid("empty round cascade".into()))?;
    for r in cascade {
        if !(r.valuation.is_finite() && r.valuation > 0.0) {
            return Err(Error::Invalid(format!(
                "valuation must be positive, got {}",
                r.valuation
            )));
        }
        if !(r.money.is_finite() && r.money >= 0.0) {
            return Err(Error::Invalid(format!(
                "money raised must be non-negative, got {}",
                r.money
            )));
        }
    }
    let check = |r: &RoundTerms| {
        if r.money > r.valuation {
            Err(Error::StakeExceedsValuation {
                money: r.money,
                valuation: r.valuation,
            })
        } else {
            Ok(())
        }
    };
    check(entry)?;
    let mut stake = entry.money / entry.valuation;
    let mut previous = entry;
    for r in later {
        let kept = match mode {
            DilutionMode::Standard => {
                check(r)?;
                r.valuation - r.money
            }
            DilutionMode::AsPrinted => previous.valuation - r.money,
        };
        stake *= kept / r.valuation;
        previous = r;
    }
    Ok(stake)
}

/// Gross arithmetic return `(v_n * x - m) / m` of an investor who paid `money`.
pub fn return_to_exit(stake: f64, exit_value: f64, money: f64) -> Result<f64> {
    if !(money.is_finite() && money > 0.0) {
        return Err(Error::Invalid(format!(
            "money invested must be positive, got {money}"
        )));
    }
    if !(exit_value.is_finite() && exit_value >= 0.0) {
        return Err(Error::Invalid(format!(
            "exit value must be non-negative, got {exit_value}"
        )));
    }
    Ok((exit_value * stake - money) / money)
}

/// Implied daily rate `(1 + R)^(1/days) - 1`.
pub fn to_daily(r: f64, holding_days: f64) -> Result<f64> {
    if !(holding_days >= 1.0) {
        return Err(Error::Invalid(format!(
            "holding period must be at least one day, got {holding_days}"
        )));
    }
    if r <= -1.0 {
        return Err(Error::TotalLoss(r));
    }
    Ok(((r.ln_1p()) / holding_days).exp_m1())
}

/// Compound a daily rate over `days_per_quarter` days.
pub fn to_quarterly(daily: f64, days_per_quarter: f64) -> Result<f64> {
    if daily <= -1.0 {
        return Err(Error::TotalLoss(daily));
    }
    Ok((daily.ln_1p() * days_per_quarter).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnsConfig {
    pub mode: DilutionMode,
    pub days_per_quarter: f64,
    pub entry: EntryPolicy,
}

impl Default for ReturnsConfig {
    fn default() -> Self {
        ReturnsConfig {
            mode: DilutionMode::Standard,
            days_per_quarter: DAYS_PER_QUARTER,
            entry: EntryPolicy::EveryRound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReturn {
    pub org_id: String,
    pub round_id: String,
    pub entry_date: NaiveDate,
    pub exit_date: NaiveDate,
    pub holding_days: i64,
    pub stake: f64,
    /// Arithmetic return to exit.
    pub total_return: f64,
    /// `-1` for total losses.
    pub daily_rate: f64,
    /// `-1` for total losses.
    pub quarterly_rate: f64,
    pub total_loss: bool,
    pub mode: DilutionMode,
}

impl RoundReturn {
    pub fn exit_quarter(&self) -> Quarter {
        Quarter::of(self.exit_date)
    }
}

/// Counts of entry rounds that did or did not yield a return.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub exits: usize,
    pub exits_without_value: usize,
    pub exits_without_rounds: usize,
    pub entries: usize,
    pub computed: usize,
    pub total_losses: usize,
    pub excluded_missing_pmv: usize,
    pub excluded_zero_amount: usize,
    pub excluded_same_day: usize,
    pub excluded_invalid_stake: usize,
}

/// Returns to exit for every eligible entry round, ordered by `(org_id, round_id)`.
pub fn compute_round_returns(
    dataset: &Dataset,
    cfg: &ReturnsConfig,
) -> (Vec<RoundReturn>, CoverageReport) {
    let mut report = CoverageReport::default();
    let mut out = Vec::new();
    let rounds_by_org = dataset.rounds_by_org();

    for exit in dataset.exits() {
        report.exits += 1;
        let Some(exit_value) = exit.exit_value_musd else {
            report.exits_without_value += 1;
            continue;
        };
        let rounds: Vec<_> = rounds_by_org
            .get(exit.org_id.as_str())
            .map(|rs| rs.iter().filter(|r| r.date <= exit.date).collect())
            .unwrap_or_default();
        if rounds.is_empty() {
            report.exits_without_rounds += 1;
            continue;
        }
        let entries = match cfg.entry {
            EntryPolicy::EveryRound => rounds.len(),
            EntryPolicy::FirstRoundOnly => 1,
        };
        for i in 0..entries {
            report.entries += 1;
            let entry = rounds[i];
            let cascade: Option<Vec<RoundTerms>> = rounds[i..]
                .iter()
                .map(|r| r.pmv_musd.map(|v| RoundTerms::new(r.amount_musd, v)))
                .collect();
            let Some(cascade) = cascade else {
                report.excluded_missing_pmv += 1;
                continue;
            };
            if entry.amount_musd <= 0.0 {
                report.excluded_zero_amount += 1;
                continue;
            }
            let holding_days = (exit.date - entry.date).num_days();
            if holding_days < 1 {
                report.excluded_same_day += 1;
                continue;
            }
            let Ok(stake) = dilution_stake(&cascade, cfg.mode) else {
                report.excluded_invalid_stake += 1;
                continue;
            };
            let Ok(total_return) = return_to_exit(stake, exit_value, entry.amount_musd) else {
                report.excluded_invalid_stake += 1;
                continue;
            };
            let (daily_rate, quarterly_rate, total_loss) =
                match to_daily(total_return, holding_days as f64) {
                    Ok(d) => {
                        let q = to_quarterly(d, cfg.days_per_quarter)
                            .expect("daily rate above -1 compounds");
                        (d, q, false)
                    }
                    Err(_) => (-1.0, -1.0, true),
                };
            report.computed += 1;
            report.total_losses += usize::from(total_loss);
            out.push(RoundReturn {
                org_id: exit.org_id.clone(),
                round_id: entry.round_id.clone(),
                entry_date: entry.date,
                exit_date: exit.date,
                holding_days,
                stake,
                total_return,
                daily_rate,
                quarterly_rate,
                total_loss,
                mode: cfg.mode,
            });
        }
    }
    out.sort_by(|a, b| a.org_id.cmp(&b.org_id).then(a.round_id.cmp(&b.round_id)));
    (out, report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuarterPoint {
    pub mean_rq: f64,
    pub count: usize,
}

/// Mean quarterly-scaled return per exit quarter. Quarters without exits are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlySectorSeries {
    pub key: SectorKey,
    pub points: BTreeMap<Quarter, QuarterPoint>,
}

/// Average `r_q` per `(sector, exit quarter)`. A firm in several sectors
/// contributes to each of them; the pooled `AllSectors` series counts every
/// taxonomy firm once.
pub fn sector_series(
    returns: &[RoundReturn],
    organizations: &[Organization],
    grid: &QuarterGrid,
) -> Result<BTreeMap<SectorKey, QuarterlySectorSeries>> {
    let orgs: BTreeMap<&str, &Organization> = organizations
        .iter()
        .map(|o| (o.org_id.as_str(), o))
        .collect();
    let mut ordered: Vec<&RoundReturn> = returns.iter().collect();
    ordered.sort_by(|a, b| a.org_id.cmp(&b.org_id).then(a.round_id.cmp(&b.round_id)));

    let mut sums: BTreeMap<SectorKey, BTreeMap<Quarter, (f64, usize)>> = BTreeMap::new();
    for r in ordered {
        let q = r.exit_quarter();
        if !grid.contains(q) {
            return Err(Error::Invalid(format!(
                "exit of round {} falls in {q}, outside the grid {}..{}",
                r.round_id,
                grid.first(),
                grid.last()
            )));
        }
        let Some(org) = orgs.get(r.org_id.as_str()) else {
            continue;
        };
        if org.sectors.is_empty() {
            continue;
        }
        let keys = org
            .sectors
            .iter()
            .map(|&s| SectorKey::Sector(s))
            .chain(std::iter::once(SectorKey::AllSectors));
        for key in keys {
            let slot = sums.entry(key).or_default().entry(q).or_insert((0.0, 0));
            slot.0 += r.quarterly_rate;
            slot.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(key, by_q)| {
            let points = by_q
                .into_iter()
                .map(|(q, (sum, count))| {
                    (
                        q,
                        QuarterPoint {
                            mean_rq: sum / count as f64,
                            count,
                        },
                    )
                })
                .collect();
            (key, QuarterlySectorSeries { key, points })
        })
        .collect())
}

pub fn write_round_returns(returns: &[RoundReturn]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "org_id",
        "round_id",
        "entry_date",
        "exit_date",
        "holding_days",
        "R",
        "r_d",
        "r_q",
        "mode",
    ])
    .expect("in-memory write");
    for r in returns {
        w.write_record([
            r.org_id.clone(),
            r.round_id.clone(),
            r.entry_date.to_string(),
            r.exit_date.to_string(),
            r.holding_days.to_string(),
            r.total_return.to_string(),
            r.daily_rate.to_string(),
            r.quarterly_rate.to_string(),
            r.mode.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn write_sector_quarterly(series: &BTreeMap<SectorKey, QuarterlySectorSeries>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sector", "quarter", "mean_rq", "count"])
        .expect("in-memory write");
    for s in series.values() {
        for (q, p) in &s.points {
            w.write_record([
                s.key.to_string(),
                q.to_string(),
                p.mean_rq.to_string(),
                p.count.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
