//! Descriptive and inferential tables: per-sector summaries, pairwise Welch
//! tests, quarterly trends, time to IPO and funding geography.

pub mod dist;
mod exits;
mod geography;
mod summary;
mod trends;
mod welch;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use exits::{ipo_timings, time_to_exit_stats, DurationStats, IpoTiming, TimeToIpoRow};
pub use geography::{geography_shares, GeographyShare, UNKNOWN_COUNTRY};
pub use summary::{display_consistent, summarize, SummaryRow};
pub use trends::{percent_changes, TrendStats};
pub use welch::{pairwise_matrix, welch_t, PairwiseMatrix, WelchResult};

use crate::ingest::{Dataset, FundingRound, SectorId};
use crate::marketdata::{Quarter, QuarterGrid};
use crate::table::{csv_text, fmt2, opt};

/// Rounds of every organization tagged with each sector. A round counts
/// toward each sector its organization belongs to.
pub fn rounds_by_sector(dataset: &Dataset) -> BTreeMap<SectorId, Vec<&FundingRound>> {
    let orgs = dataset.organization_index();
    let mut out: BTreeMap<SectorId, Vec<&FundingRound>> = BTreeMap::new();
    for r in dataset.rounds() {
        if let Some(org) = orgs.get(r.org_id.as_str()) {
            for &s in &org.sectors {
                out.entry(s).or_default().push(r);
            }
        }
    }
    out
}

/// Rounds of organizations in at least one sector, each counted once.
fn taxonomy_rounds(dataset: &Dataset) -> Vec<&FundingRound> {
    let orgs = dataset.organization_index();
    dataset
        .rounds()
        .iter()
        .filter(|r| {
            orgs.get(r.org_id.as_str())
                .is_some_and(|o| !o.sectors.is_empty())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub trend_max_missing: usize,
    pub ipo_min_obs: usize,
    pub geo_top_k: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            trend_max_missing: 20,
            ipo_min_obs: 10,
            geo_top_k: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub funding: SummaryRow,
    /// Over rounds with an observed or imputed valuation.
    pub pmv: Option<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub sector: SectorId,
    pub funding: Option<TrendStats>,
    pub pmv: Option<TrendStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub table2: Vec<Table2Row>,
    pub ttest_funding: PairwiseMatrix,
    pub ttest_pmv: PairwiseMatrix,
    pub trends: Vec<TrendRow>,
    pub time_to_ipo: Vec<TimeToIpoRow>,
    pub ipo_detail: Vec<IpoTiming>,
    pub geography: Vec<GeographyShare>,
}

fn table2_row(label: &str, rounds: &[&FundingRound]) -> Option<Table2Row> {
    let funding: Vec<f64> = rounds.iter().map(|r| r.amount_musd).collect();
    let pmv: Vec<f64> = rounds.iter().filter_map(|r| r.pmv_musd).collect();
    Some(Table2Row {
        funding: summarize(label, &funding)?,
        pmv: summarize(label, &pmv),
    })
}

fn quarterly_means<F>(rounds: &[&FundingRound], value: F) -> BTreeMap<Quarter, f64>
where
    F: Fn(&FundingRound) -> Option<f64>,
{
    let mut acc: BTreeMap<Quarter, (f64, usize)> = BTreeMap::new();
    for r in rounds {
        if let Some(v) = value(r) {
            let slot = acc.entry(Quarter::of(r.date)).or_default();
            slot.0 += v;
            slot.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(q, (s, n))| (q, s / n as f64))
        .collect()
}

/// All descriptive tables for `dataset` over the quarters of `grid`.
pub fn build_report(dataset: &Dataset, grid: &QuarterGrid, cfg: &ReportConfig) -> Report {
    let by_sector = rounds_by_sector(dataset);

    let mut table2: Vec<Table2Row> = by_sector
        .iter()
        .filter_map(|(s, rounds)| table2_row(s.name(), rounds))
        .collect();
    table2.extend(table2_row("Total", &taxonomy_rounds(dataset)));

    let funding_samples: BTreeMap<SectorId, Vec<f64>> = by_sector
        .iter()
        .map(|(s, rs)| (*s, rs.iter().map(|r| r.amount_musd).collect()))
        .collect();
    let pmv_samples: BTreeMap<SectorId, Vec<f64>> = by_sector
        .iter()
        .map(|(s, rs)| (*s, rs.iter().filter_map(|r| r.pmv_musd).collect()))
        .collect();

    let trends = by_sector
        .iter()
        .filter_map(|(s, rs)| {
            let in_grid: Vec<&FundingRound> = rs
                .iter()
                .copied()
                .filter(|r| grid.contains(Quarter::of(r.date)))
                .collect();
            let funding = percent_changes(
                &quarterly_means(&in_grid, |r| Some(r.amount_musd)),
                grid,
                cfg.trend_max_missing,
            )
            .ok();
            let pmv = percent_changes(
                &quarterly_means(&in_grid, |r| r.pmv_musd),
                grid,
                cfg.trend_max_missing,
            )
            .ok();
            (funding.is_some() || pmv.is_some()).then_some(TrendRow {
                sector: *s,
                funding,
                pmv,
            })
        })
        .collect();

    Report {
        table2,
        ttest_funding: pairwise_matrix(&funding_samples),
        ttest_pmv: pairwise_matrix(&pmv_samples),
        trends,
        time_to_ipo: time_to_exit_stats(dataset, cfg.ipo_min_obs),
        ipo_detail: ipo_timings(dataset),
        geography: SectorId::ALL
            .into_iter()
            .filter_map(|s| geography_shares(dataset, s, cfg.geo_top_k))
            .collect(),
    }
}

impl Report {
    /// `(file name, contents)` for every table, CSV and Markdown.
    pub fn artifacts(&self) -> Vec<(&'static str, String)> {
        vec![
            ("table2.csv", self.table2_csv()),
            ("table2.md", self.table2_markdown()),
            ("ttest_funding.csv", matrix_csv(&self.ttest_funding)),
            ("ttest_funding.md", matrix_markdown(&self.ttest_funding)),
            ("ttest_pmv.csv", matrix_csv(&self.ttest_pmv)),
            ("ttest_pmv.md", matrix_markdown(&self.ttest_pmv)),
            ("trends.csv", self.trends_csv()),
            ("trends.md", self.trends_markdown()),
            ("time_to_ipo.csv", self.time_to_ipo_csv()),
            ("time_to_ipo.md", self.time_to_ipo_markdown()),
            ("time_to_ipo_detail.csv", self.ipo_detail_csv()),
            ("geo_shares.csv", self.geo_csv()),
            ("geo_shares.md", self.geo_markdown()),
        ]
    }

    fn table2_csv(&self) -> String {
        let rows = self.table2.iter().map(|r| {
            let f = &r.funding;
            let p = r.pmv.as_ref();
            vec![
                f.label.clone(),
                f.n.to_string(),
                f.mean.to_string(),
                f.median.to_string(),
                f.total.to_string(),
                f.sd.to_string(),
                p.map_or(0, |p| p.n).to_string(),
                opt(p.map(|p| p.mean)),
                opt(p.map(|p| p.median)),
                opt(p.map(|p| p.total)),
                opt(p.map(|p| p.sd)),
            ]
        });
        csv_text(
            &[
                "sector",
                "n",
                "funding_mean",
                "funding_median",
                "funding_total",
                "funding_sd",
                "pmv_n",
                "pmv_mean",
                "pmv_median",
                "pmv_total",
                "pmv_sd",
            ],
            rows,
        )
    }

    fn table2_markdown(&self) -> String {
        let mut s = String::from(
            "| Sector | N | Funding avg. | Median | Total | SD | PMV avg. | Median | Total | SD |\n\
             |---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.table2 {
            let f = &r.funding;
            let p = r.pmv.as_ref();
            let _ = writeln!(
                s,
                "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {} | {} | {} | {} |",
                f.label,
                f.n,
                f.mean,
                f.median,
                f.total,
                f.sd,
                fmt2(p.map(|p| p.mean)),
                fmt2(p.map(|p| p.median)),
                fmt2(p.map(|p| p.total)),
                fmt2(p.map(|p| p.sd)),
            );
        }
        s
    }

    fn trends_csv(&self) -> String {
        let rows = self.trends.iter().map(|r| {
            vec![
                r.sector.name().to_owned(),
                opt(r.funding.as_ref().map(|t| t.mean_pct)),
                opt(r.funding.as_ref().map(|t| t.sd_pct)),
                opt(r.pmv.as_ref().map(|t| t.mean_pct)),
                opt(r.pmv.as_ref().map(|t| t.sd_pct)),
            ]
        });
        csv_text(
            &[
                "sector",
                "funding_mean_pct",
                "funding_sd_pct",
                "pmv_mean_pct",
                "pmv_sd_pct",
            ],
            rows,
        )
    }

    fn trends_markdown(&self) -> String {
        let mut s = String::from(
            "| Sector | Funding avg. % change | SD | PMV avg. % change | SD |\n|---|---|---|---|---|\n",
        );
        for r in &self.trends {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} |",
                r.sector,
                fmt2(r.funding.as_ref().map(|t| t.mean_pct)),
                fmt2(r.funding.as_ref().map(|t| t.sd_pct)),
                fmt2(r.pmv.as_ref().map(|t| t.mean_pct)),
                fmt2(r.pmv.as_ref().map(|t| t.sd_pct)),
            );
        }
        s
    }

    fn time_to_ipo_csv(&self) -> String {
        let rows = self.time_to_ipo.iter().map(|r| {
            let d = r.days.as_ref();
            vec![
                r.sector.name().to_owned(),
                r.n_ipo.to_string(),
                opt(d.map(|d| d.mean)),
                opt(d.map(|d| d.sd)),
                opt(d.map(|d| d.max as f64)),
                opt(d.map(|d| d.min as f64)),
                opt(r.investors.map(|i| i.0)),
                opt(r.investors.map(|i| i.1)),
            ]
        });
        csv_text(
            &[
                "sector",
                "n_ipo",
                "mean_days",
                "sd_days",
                "max_days",
                "min_days",
                "investors_mean",
                "investors_sd",
            ],
            rows,
        )
    }

    fn time_to_ipo_markdown(&self) -> String {
        let mut s = String::from(
            "| Sector | Avg. days | SD | Max | Min | Investors avg. | SD |\n|---|---|---|---|---|---|---|\n",
        );
        for r in &self.time_to_ipo {
            let d = r.days.as_ref();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.sector,
                fmt2(d.map(|d| d.mean)),
                fmt2(d.map(|d| d.sd)),
                d.map_or("NA".to_owned(), |d| d.max.to_string()),
                d.map_or("NA".to_owned(), |d| d.min.to_string()),
                fmt2(r.investors.map(|i| i.0)),
                fmt2(r.investors.map(|i| i.1)),
            );
        }
        s
    }

    fn ipo_detail_csv(&self) -> String {
        let rows = self.ipo_detail.iter().map(|t| {
            vec![
                t.org_id.clone(),
                t.first_round.to_string(),
                t.ipo_date.to_string(),
                t.days.to_string(),
            ]
        });
        csv_text(&["org_id", "first_round", "ipo_date", "days"], rows)
    }

    fn geo_rows(&self) -> Vec<(String, usize, String, f64)> {
        let mut out = Vec::new();
        for g in &self.geography {
            for (i, (country, share)) in g.top.iter().enumerate() {
                out.push((g.sector.name().to_owned(), i + 1, country.clone(), *share));
            }
            if let Some(other) = g.other {
                out.push((
                    g.sector.name().to_owned(),
                    g.top.len() + 1,
                    "Other".to_owned(),
                    other,
                ));
            }
        }
        out
    }

    fn geo_csv(&self) -> String {
        let rows = self
            .geo_rows()
            .into_iter()
            .map(|(s, rank, c, share)| vec![s, rank.to_string(), c, share.to_string()]);
        csv_text(&["sector", "rank", "country", "share"], rows)
    }

    fn geo_markdown(&self) -> String {
        let mut s = String::from("| Sector | Rank | Country | Share (%) |\n|---|---|---|---|\n");
        for (sector, rank, country, share) in self.geo_rows() {
            let _ = writeln!(
                s,
                "| {sector} | {rank} | {country} | {:.2} |",
                100.0 * share
            );
        }
        s
    }
}

fn matrix_csv(m: &PairwiseMatrix) -> String {
    let mut header = vec!["sector"];
    header.extend(m.sectors.iter().map(|s| s.name()));
    let rows = m.sectors.iter().enumerate().map(|(i, s)| {
        let mut row = vec![s.name().to_owned()];
        row.extend((0..m.sectors.len()).map(|j| {
            if i == j {
                String::new()
            } else {
                opt(m.t(i, j))
            }
        }));
        row
    });
    csv_text(&header, rows)
}

fn matrix_markdown(m: &PairwiseMatrix) -> String {
    let mut s = String::from("| Sector |");
    for sec in &m.sectors {
        let _ = write!(s, " {sec} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(m.sectors.len()));
    s.push('\n');
    for (i, sec) in m.sectors.iter().enumerate() {
        let _ = write!(s, "| {sec} |");
        for j in 0..m.sectors.len() {
            if i == j {
                s.push_str("  |");
            } else {
                let _ = write!(s, " {} |", fmt2(m.t(i, j)));
            }
        }
        s.push('\n');
    }
    s
}
