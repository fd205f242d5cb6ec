use std::collections::BTreeMap;

use serde::Serialize;

use crate::ingest::{Dataset, SectorId};

/// Label for rounds of organizations without a recorded country.
pub const UNKNOWN_COUNTRY: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeographyShare {
    pub sector: SectorId,
    pub total_musd: f64,
    /// Top countries by funding, largest first, as `(country, share)`.
    pub top: Vec<(String, f64)>,
    /// Share of every remaining country; `None` when nothing is left over.
    pub other: Option<f64>,
}

/// Funding share per headquarters country for one sector. Ties in funding
/// are broken by country code. `None` if the sector raised nothing.
pub fn geography_shares(dataset: &Dataset, sector: SectorId, k: usize) -> Option<GeographyShare> {
    let orgs = dataset.organization_index();
    let mut by_country: BTreeMap<String, f64> = BTreeMap::new();
    for r in dataset.rounds() {
        let Some(org) = orgs.get(r.org_id.as_str()) else {
            continue;
        };
        if !org.sectors.contains(&sector) {
            continue;
        }
        let country = org
            .country
            .clone()
            .unwrap_or_else(|| UNKNOWN_COUNTRY.to_owned());
        *by_country.entry(country).or_default() += r.amount_musd;
    }
    let total: f64 = by_country.values().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut ranked: Vec<(String, f64)> = by_country.into_iter().collect();
    // BTreeMap order already sorts by code; a stable sort keeps that for ties
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let rest: f64 = ranked.iter().skip(k).map(|c| c.1).sum();
    let other = (ranked.len() > k).then(|| rest / total);
    ranked.truncate(k);
    Some(GeographyShare {
        sector,
        total_musd: total,
        top: ranked.into_iter().map(|(c, v)| (c, v / total)).collect(),
        other,
    })
}
