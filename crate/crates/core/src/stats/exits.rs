use chrono::NaiveDate;
use serde::Serialize;

use crate::ingest::{Dataset, ExitKind, SectorId};

/// Days from an IPO firm's first recorded round to its listing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpoTiming {
    pub org_id: String,
    pub first_round: NaiveDate,
    pub ipo_date: NaiveDate,
    pub days: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurationStats {
    pub mean: f64,
    pub sd: f64,
    pub max: i64,
    pub min: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeToIpoRow {
    pub sector: SectorId,
    pub n_ipo: usize,
    /// `None` below the observation threshold.
    pub days: Option<DurationStats>,
    /// Mean and sample sd of investors per round.
    pub investors: Option<(f64, f64)>,
}

pub fn ipo_timings(dataset: &Dataset) -> Vec<IpoTiming> {
    let rounds = dataset.rounds_by_org();
    dataset
        .exits()
        .iter()
        .filter(|e| e.kind == ExitKind::Ipo)
        .filter_map(|e| {
            let first = rounds.get(e.org_id.as_str())?.first()?;
            Some(IpoTiming {
                org_id: e.org_id.clone(),
                first_round: first.date,
                ipo_date: e.date,
                days: (e.date - first.date).num_days(),
            })
        })
        .collect()
}

fn duration_stats(days: &[i64]) -> DurationStats {
    let values: Vec<f64> = days.iter().map(|&d| d as f64).collect();
    let (mean, var) = super::welch::mean_var(&values);
    DurationStats {
        mean,
        sd: var.sqrt(),
        max: *days.iter().max().expect("non-empty"),
        min: *days.iter().min().expect("non-empty"),
    }
}

/// Per-sector time to IPO; sectors with fewer than `min_obs` IPOs get `None`.
pub fn time_to_exit_stats(dataset: &Dataset, min_obs: usize) -> Vec<TimeToIpoRow> {
    let timings = ipo_timings(dataset);
    let orgs = dataset.organization_index();
    let by_sector = super::rounds_by_sector(dataset);
    SectorId::ALL
        .into_iter()
        .map(|sector| {
            let days: Vec<i64> = timings
                .iter()
                .filter(|t| {
                    orgs.get(t.org_id.as_str())
                        .is_some_and(|o| o.sectors.contains(&sector))
                })
                .map(|t| t.days)
                .collect();
            let investors = by_sector.get(&sector).map(|rounds| {
                let counts: Vec<f64> = rounds.iter().map(|r| r.investor_count as f64).collect();
                let (m, v) = super::welch::mean_var(&counts);
                (m, v.sqrt())
            });
            TimeToIpoRow {
                sector,
                n_ipo: days.len(),
                days: (days.len() >= min_obs.max(1)).then(|| duration_stats(&days)),
                investors,
            }
        })
        .collect()
}
