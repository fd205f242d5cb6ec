use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::sector::SectorId;
use crate::error::{Error, Result};

/// Earliest admissible event date; also the day-count epoch for imputation features.
pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1926, 1, 1).expect("valid epoch")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Organization {
    pub org_id: String,
    pub name: String,
    /// ISO-3166 alpha-2, uppercase. `None` when the export leaves it blank.
    pub country: Option<String>,
    pub tags: BTreeSet<String>,
    pub sectors: BTreeSet<SectorId>,
}

/// Where a valuation figure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Observed,
    Imputed,
    Missing,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Observed => "observed",
            Provenance::Imputed => "imputed",
            Provenance::Missing => "missing",
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "observed" => Ok(Provenance::Observed),
            "imputed" => Ok(Provenance::Imputed),
            "missing" | "" => Ok(Provenance::Missing),
            other => Err(Error::Invalid(format!("unknown provenance `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundType {
    Seed,
    SeriesA,
    SeriesB,
    SeriesCPlus,
    Debt,
    Other,
}

impl RoundType {
    pub fn as_str(self) -> &'static str {
        match self {
            RoundType::Seed => "seed",
            RoundType::SeriesA => "series_a",
            RoundType::SeriesB => "series_b",
            RoundType::SeriesCPlus => "series_c_plus",
            RoundType::Debt => "debt",
            RoundType::Other => "other",
        }
    }

    /// Lenient parse of export labels; unrecognised labels map to `Other`.
    pub fn parse_label(label: &str) -> RoundType {
        let norm: String = label
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric() || *c == '+')
            .collect();
        match norm.as_str() {
            "seed" | "preseed" | "angel" => RoundType::Seed,
            "seriesa" | "a" => RoundType::SeriesA,
            "seriesb" | "b" => RoundType::SeriesB,
            "seriesc" | "seriescplus" | "seriesc+" | "c" | "c+" | "seriesd" | "seriese"
            | "seriesf" | "seriesg" | "seriesh" => RoundType::SeriesCPlus,
            "debt" | "debtfinancing" => RoundType::Debt,
            _ => RoundType::Other,
        }
    }
}

impl fmt::Display for RoundType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FundingRound {
    pub round_id: String,
    pub org_id: String,
    pub date: NaiveDate,
    /// Money raised, USD millions.
    pub amount_musd: f64,
    /// Post-money valuation, USD millions.
    pub pmv_musd: Option<f64>,
    pub pmv_provenance: Provenance,
    pub investor_count: u32,
    pub lead_investor_rank: Option<u32>,
    pub round_type: RoundType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitKind {
    Ipo,
    Acquisition,
}

impl ExitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExitKind::Ipo => "ipo",
            ExitKind::Acquisition => "acquisition",
        }
    }
}

impl FromStr for ExitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ipo" => Ok(ExitKind::Ipo),
            "acquisition" | "acquired" | "m&a" => Ok(ExitKind::Acquisition),
            other => Err(Error::Invalid(format!("unknown exit kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitEvent {
    pub org_id: String,
    pub date: NaiveDate,
    pub kind: ExitKind,
    /// Exit valuation, USD millions. `None` until imputed when the export omits a price.
    pub exit_value_musd: Option<f64>,
    pub value_provenance: Provenance,
}

/// Inclusive date window used to restrict rounds and exits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Default for SampleWindow {
    fn default() -> Self {
        SampleWindow {
            start: NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid"),
            end: NaiveDate::from_ymd_opt(2022, 5, 31).expect("valid"),
        }
    }
}

impl SampleWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

impl FromStr for SampleWindow {
    type Err = Error;

    /// `YYYY-MM-DD:YYYY-MM-DD`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid window `{s}`, expected START:END dates"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = NaiveDate::parse_from_str(a.trim(), "%Y-%m-%d").map_err(|_| bad())?;
        let end = NaiveDate::parse_from_str(b.trim(), "%Y-%m-%d").map_err(|_| bad())?;
        if end < start {
            return Err(bad());
        }
        Ok(SampleWindow { start, end })
    }
}

impl fmt::Display for SampleWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// Organizations, rounds and exits after validation.
///
/// Rounds are kept sorted by `(org_id, date, round_id)`; exits by `org_id`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    organizations: Vec<Organization>,
    rounds: Vec<FundingRound>,
    exits: Vec<ExitEvent>,
}

impl Dataset {
    pub fn new(
        mut organizations: Vec<Organization>,
        mut rounds: Vec<FundingRound>,
        mut exits: Vec<ExitEvent>,
    ) -> Self {
        organizations.sort_by(|a, b| a.org_id.cmp(&b.org_id));
        sort_rounds(&mut rounds);
        exits.sort_by(|a, b| a.org_id.cmp(&b.org_id).then(a.date.cmp(&b.date)));
        Dataset {
            organizations,
            rounds,
            exits,
        }
    }

    pub fn organizations(&self) -> &[Organization] {
        &self.organizations
    }

    pub fn rounds(&self) -> &[FundingRound] {
        &self.rounds
    }

    pub fn exits(&self) -> &[ExitEvent] {
        &self.exits
    }

    pub fn into_parts(self) -> (Vec<Organization>, Vec<FundingRound>, Vec<ExitEvent>) {
        (self.organizations, self.rounds, self.exits)
    }

    pub fn organization_index(&self) -> BTreeMap<&str, &Organization> {
        self.organizations
            .iter()
            .map(|o| (o.org_id.as_str(), o))
            .collect()
    }

    /// Rounds grouped per organization, each group in chronological order.
    pub fn rounds_by_org(&self) -> BTreeMap<&str, &[FundingRound]> {
        let mut out = BTreeMap::new();
        let mut start = 0;
        for i in 1..=self.rounds.len() {
            if i == self.rounds.len() || self.rounds[i].org_id != self.rounds[start].org_id {
                if start < i {
                    out.insert(self.rounds[start].org_id.as_str(), &self.rounds[start..i]);
                }
                start = i;
            }
        }
        out
    }

    pub fn exit_by_org(&self) -> BTreeMap<&str, &ExitEvent> {
        self.exits.iter().map(|e| (e.org_id.as_str(), e)).collect()
    }

    /// Keep only rounds and exits dated inside `window`. Organizations are kept.
    pub fn restrict_to(&self, window: &SampleWindow) -> Dataset {
        Dataset {
            organizations: self.organizations.clone(),
            rounds: self
                .rounds
                .iter()
                .filter(|r| window.contains(r.date))
                .cloned()
                .collect(),
            exits: self
                .exits
                .iter()
                .filter(|e| window.contains(e.date))
                .cloned()
                .collect(),
        }
    }
}

pub(crate) fn sort_rounds(rounds: &mut [FundingRound]) {
    rounds.sort_by(|a, b| {
        a.org_id
            .cmp(&b.org_id)
            .then(a.date.cmp(&b.date))
            .then(a.round_id.cmp(&b.round_id))
    });
}
