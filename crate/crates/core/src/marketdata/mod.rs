//! Benchmark index and risk-free series, sampled onto a quarterly grid.
//!
//! Index levels are sampled at quarter ends: the level used for quarter `q` is
//! the last observation dated on or before the quarter's last day, and it must
//! fall inside `q`. Risk-free rates are read at the start of each quarter.

mod grid;

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{Quarter, QuarterGrid};

/// Per-quarter values keyed by quarter.
pub type QuarterlySeries = BTreeMap<Quarter, f64>;

/// Benchmark index levels, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    pub fn new(observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        check_increasing(&observations)?;
        if let Some((date, level)) = observations
            .iter()
            .find(|(_, level)| !(level.is_finite() && *level > 0.0))
        {
            return Err(Error::Invalid(format!(
                "index level on {date} must be positive and finite, got {level}"
            )));
        }
        Ok(PriceSeries { observations })
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    /// Parse `date,level` CSV. Any header names are accepted; cells holding
    /// `.` or nothing (FRED's missing-value markers) are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_two_column(text)?)
    }

    fn last_on_or_before(&self, date: NaiveDate) -> Option<(NaiveDate, f64)> {
        let idx = self.observations.partition_point(|(d, _)| *d <= date);
        idx.checked_sub(1).map(|i| self.observations[i])
    }

    fn quarter_end_level(&self, q: Quarter) -> Result<f64> {
        match self.last_on_or_before(q.last_day()) {
            Some((date, level)) if date >= q.first_day() => Ok(level),
            _ => Err(Error::MissingMarketData {
                quarter: q.to_string(),
                detail: "no index observation inside the quarter".into(),
            }),
        }
    }
}

/// Annualized percent rates (e.g. 3-month T-bill), strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    observations: Vec<(NaiveDate, f64)>,
}

impl RateSeries {
    pub fn new(observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        check_increasing(&observations)?;
        if let Some((date, rate)) = observations.iter().find(|(_, r)| !r.is_finite()) {
            return Err(Error::Invalid(format!(
                "rate on {date} is not finite: {rate}"
            )));
        }
        Ok(RateSeries { observations })
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    /// Parse `date,rate_percent` CSV with the same leniency as [`PriceSeries::from_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        Self::new(parse_two_column(text)?)
    }

    fn rate_at_start(&self, q: Quarter) -> Result<f64> {
        let start = q.first_day();
        let idx = self.observations.partition_point(|(d, _)| *d <= start);
        match idx.checked_sub(1).map(|i| self.observations[i]) {
            // stale rates older than the previous quarter are not carried forward
            Some((date, rate)) if date >= q.prev().first_day() => Ok(rate),
            _ => Err(Error::MissingMarketData {
                quarter: q.to_string(),
                detail: "no risk-free observation at or shortly before the quarter start".into(),
            }),
        }
    }
}

/// How an annualized percent rate becomes a quarterly log return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskFreeConvention {
    /// `ln(1 + r/100) / 4`
    #[default]
    LogCompound,
    /// `r / 100 / 4`
    Simple,
}

impl RiskFreeConvention {
    pub fn quarterly_log(self, annual_percent: f64) -> f64 {
        match self {
            RiskFreeConvention::LogCompound => (annual_percent / 100.0).ln_1p() / 4.0,
            RiskFreeConvention::Simple => annual_percent / 400.0,
        }
    }
}

/// Sample moments of the aligned quarterly market series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketMoments {
    pub mu_ln_rf: f64,
    pub mu_ln_rm: f64,
    pub var_ln_rm: f64,
}

impl MarketMoments {
    /// Mean quarterly log market premium, `mu_ln_rm - mu_ln_rf`.
    pub fn log_premium(&self) -> f64 {
        self.mu_ln_rm - self.mu_ln_rf
    }
}

/// `ln(level_q / level_{q-1})` for every quarter of the grid.
pub fn quarterly_log_market_returns(
    series: &PriceSeries,
    grid: &QuarterGrid,
) -> Result<QuarterlySeries> {
    grid.iter()
        .map(|q| log_market_return(series, q).map(|r| (q, r)))
        .collect()
}

/// Like [`quarterly_log_market_returns`] but keeps only the quarters whose
/// boundary levels are available.
pub fn available_log_market_returns(series: &PriceSeries, grid: &QuarterGrid) -> QuarterlySeries {
    grid.iter()
        .filter_map(|q| log_market_return(series, q).ok().map(|r| (q, r)))
        .collect()
}

fn log_market_return(series: &PriceSeries, q: Quarter) -> Result<f64> {
    let start = series.quarter_end_level(q.prev())?;
    let end = series.quarter_end_level(q)?;
    Ok((end / start).ln())
}

/// Quarterly log risk-free return from the rate observed at each quarter start.
pub fn quarterly_log_riskfree(
    series: &RateSeries,
    grid: &QuarterGrid,
    convention: RiskFreeConvention,
) -> Result<QuarterlySeries> {
    grid.iter()
        .map(|q| {
            series
                .rate_at_start(q)
                .map(|r| (q, convention.quarterly_log(r)))
        })
        .collect()
}

pub fn available_log_riskfree(
    series: &RateSeries,
    grid: &QuarterGrid,
    convention: RiskFreeConvention,
) -> QuarterlySeries {
    grid.iter()
        .filter_map(|q| {
            series
                .rate_at_start(q)
                .ok()
                .map(|r| (q, convention.quarterly_log(r)))
        })
        .collect()
}

/// Means of both series and the unbiased variance of the market series.
pub fn market_moments(ln_rm: &[f64], ln_rf: &[f64]) -> Result<MarketMoments> {
    if ln_rm.len() != ln_rf.len() {
        return Err(Error::Invalid(format!(
            "market and risk-free series differ in length ({} vs {})",
            ln_rm.len(),
            ln_rf.len()
        )));
    }
    let n = ln_rm.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mu_ln_rm = ln_rm.iter().sum::<f64>() / nf;
    let mu_ln_rf = ln_rf.iter().sum::<f64>() / nf;
    let var_ln_rm = ln_rm.iter().map(|x| (x - mu_ln_rm).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(MarketMoments {
        mu_ln_rf,
        mu_ln_rm,
        var_ln_rm,
    })
}

/// Download a CSV in one of the two-column shapes above.
#[cfg(feature = "fetch")]
pub fn fetch_csv(url: &str) -> Result<String> {
    let mut response = ureq::get(url)
        .call()
        .map_err(|e| Error::Invalid(format!("fetching {url}: {e}")))?;
    response
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Invalid(format!("reading {url}: {e}")))
}

fn check_increasing(observations: &[(NaiveDate, f64)]) -> Result<()> {
    match observations.windows(2).find(|w| w[0].0 >= w[1].0) {
        Some(w) => Err(Error::Invalid(format!(
            "observation dates must be strictly increasing ({} then {})",
            w[0].0, w[1].0
        ))),
        None => Ok(()),
    }
}

fn parse_two_column(text: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(crate::ingest::csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 {
            return Err(Error::Csv {
                line,
                message: "expected two columns".into(),
            });
        }
        let value = &record[1];
        if value.is_empty() || value == "." {
            continue;
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Csv {
            line,
            message: format!("bad date `{}`: {e}", &record[0]),
        })?;
        let value: f64 = value.parse().map_err(|_| Error::Csv {
            line,
            message: format!("bad number `{value}`"),
        })?;
        out.push((date, value));
    }
    Ok(out)
}
