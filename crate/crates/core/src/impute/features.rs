use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::{epoch, FundingRound, Organization, SectorId};

/// Inputs to the valuation regression for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct PmvFeatureVector {
    /// Days since 1926-01-01.
    pub t_days: f64,
    /// Days since the organization's previous round; 0 for the first.
    pub dt_days: f64,
    /// Money raised, USD.
    pub m_usd: f64,
    /// Change in money raised against the previous round, USD; 0 for the first.
    pub dm_usd: f64,
    pub investors: f64,
    /// Lead investor rank, 0 when unknown.
    pub lead_rank: f64,
    /// `None` is the "other" bucket.
    pub sector: Option<SectorId>,
    pub country: Option<String>,
}

/// Features for `round` given the same organization's earlier rounds in date order.
pub fn build_features(
    round: &FundingRound,
    history: &[FundingRound],
    org: Option<&Organization>,
) -> PmvFeatureVector {
    let prev = history
        .iter()
        .rev()
        .find(|r| r.date <= round.date && r.round_id != round.round_id);
    features_at(
        round.date,
        round.amount_musd,
        round.investor_count,
        round.lead_investor_rank,
        prev,
        org,
    )
}

pub(crate) fn features_at(
    date: NaiveDate,
    amount_musd: f64,
    investors: u32,
    lead_rank: Option<u32>,
    prev: Option<&FundingRound>,
    org: Option<&Organization>,
) -> PmvFeatureVector {
    let m_usd = amount_musd * 1e6;
    let (dt_days, dm_usd) = match prev {
        Some(p) => (
            (date - p.date).num_days() as f64,
            m_usd - p.amount_musd * 1e6,
        ),
        None => (0.0, 0.0),
    };
    PmvFeatureVector {
        t_days: (date - epoch()).num_days() as f64,
        dt_days,
        m_usd,
        dm_usd,
        investors: investors as f64,
        lead_rank: lead_rank.unwrap_or(0) as f64,
        sector: org.and_then(|o| o.sectors.iter().next().copied()),
        country: org.and_then(|o| o.country.clone()),
    }
}

fn signed_log(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

/// Numeric layout of a feature vector: six numeric columns, then sector and
/// country one-hot blocks each closed by an "other" column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub countries: Vec<String>,
}

pub const NUMERIC_COLUMNS: usize = 6;

impl FeatureEncoder {
    /// Keep the `k` most frequent countries, ties broken by code.
    pub fn from_training<'a, I>(countries: I, k: usize) -> Self
    where
        I: IntoIterator<Item = Option<&'a str>>,
    {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in countries.into_iter().flatten() {
            *counts.entry(c).or_default() += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
        FeatureEncoder {
            countries: ranked
                .into_iter()
                .take(k)
                .map(|(c, _)| c.to_owned())
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        NUMERIC_COLUMNS + SectorId::ALL.len() + 1 + self.countries.len() + 1
    }

    pub fn encode(&self, f: &PmvFeatureVector) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.width());
        x.extend([
            f.t_days,
            f.dt_days,
            f.m_usd.max(0.0).ln_1p(),
            signed_log(f.dm_usd),
            f.investors,
            f.lead_rank,
        ]);
        let n_sectors = SectorId::ALL.len();
        let mut sector = vec![0.0; n_sectors + 1];
        let slot = f
            .sector
            .and_then(|s| SectorId::ALL.iter().position(|&x| x == s))
            .unwrap_or(n_sectors);
        sector[slot] = 1.0;
        x.extend(sector);
        let mut country = vec![0.0; self.countries.len() + 1];
        let slot = f
            .country
            .as_deref()
            .and_then(|c| self.countries.iter().position(|x| x == c))
            .unwrap_or(self.countries.len());
        country[slot] = 1.0;
        x.extend(country);
        x
    }
}
