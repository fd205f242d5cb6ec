//! Crunchbase-shaped CSV ingestion and sector assignment.

mod model;
mod parse;
mod sector;

pub use model::{
    epoch, Dataset, ExitEvent, ExitKind, FundingRound, Organization, Provenance, RoundType,
    SampleWindow,
};
pub(crate) use parse::csv_error;
pub use parse::{
    parse_exits, parse_funding_rounds, parse_organizations, write_exits, write_funding_rounds,
    write_organizations, write_rejections, ParseOptions, Parsed, Rejection,
};
pub use sector::{assign_sectors, full_taxonomy, normalize_tag, SectorId, SectorKey};

use crate::error::Result;

/// Raw CSV text of the three entity files.
#[derive(Debug, Clone, Copy)]
pub struct SourceTexts<'a> {
    pub organizations: &'a str,
    pub funding_rounds: &'a str,
    pub exits: &'a str,
}

/// A validated dataset and the rows each parser turned away.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub organization_rejects: Vec<Rejection>,
    pub round_rejects: Vec<Rejection>,
    pub exit_rejects: Vec<Rejection>,
}

/// Parse all three files with referential checks, then restrict to `window`.
pub fn load(texts: SourceTexts<'_>, strict: bool, window: Option<&SampleWindow>) -> Result<Loaded> {
    let orgs = parse_organizations(texts.organizations)?;
    let opts = if strict {
        ParseOptions::strict(&orgs.accepted)
    } else {
        ParseOptions::default()
    };
    let rounds = parse_funding_rounds(texts.funding_rounds, &opts)?;
    let exits = parse_exits(texts.exits, Some(&rounds.accepted), &opts)?;
    let dataset = Dataset::new(orgs.accepted, rounds.accepted, exits.accepted);
    let dataset = match window {
        Some(w) => dataset.restrict_to(w),
        None => dataset,
    };
    Ok(Loaded {
        dataset,
        organization_rejects: orgs.rejected,
        round_rejects: rounds.rejected,
        exit_rejects: exits.rejected,
    })
}
