use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::NaiveDate;

use super::model::{
    epoch, sort_rounds, ExitEvent, ExitKind, FundingRound, Organization, Provenance, RoundType,
};
use super::sector::{assign_sectors, full_taxonomy, normalize_tag};
use crate::error::{Error, Result};

pub const ORGANIZATIONS_HEADER: [&str; 4] = ["org_id", "name", "country_code", "tags"];
pub const ROUNDS_HEADER: [&str; 8] = [
    "round_id",
    "org_id",
    "date",
    "amount_musd",
    "pmv_musd",
    "investor_count",
    "lead_investor_rank",
    "round_type",
];
pub const EXITS_HEADER: [&str; 4] = ["org_id", "date", "kind", "exit_value_musd"];

/// A row that was read but not accepted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

/// Accepted records plus everything that was turned away.
#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub accepted: Vec<T>,
    pub rejected: Vec<Rejection>,
    /// Data rows read (header excluded).
    pub rows: usize,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Latest admissible date; defaults to today.
    pub max_date: NaiveDate,
    /// When set, rounds and exits referencing other organizations are rejected.
    pub known_orgs: Option<HashSet<String>>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_date: chrono::Local::now().date_naive(),
            known_orgs: None,
        }
    }
}

impl ParseOptions {
    pub fn strict(organizations: &[Organization]) -> Self {
        ParseOptions {
            known_orgs: Some(organizations.iter().map(|o| o.org_id.clone()).collect()),
            ..Default::default()
        }
    }

    fn check_org(&self, org_id: &str) -> std::result::Result<(), String> {
        match &self.known_orgs {
            Some(known) if !known.contains(org_id) => Err(format!("unknown org_id `{org_id}`")),
            _ => Ok(()),
        }
    }

    fn check_date(&self, date: NaiveDate) -> std::result::Result<(), String> {
        if date < epoch() || date > self.max_date {
            Err(format!(
                "date {date} outside [{}, {}]",
                epoch(),
                self.max_date
            ))
        } else {
            Ok(())
        }
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Csv {
        line,
        message: e.to_string(),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Checks the header against `expected`, allowing `optional` extra trailing columns.
/// Returns how many optional columns are present.
fn check_header(
    reader: &mut csv::Reader<&[u8]>,
    expected: &[&str],
    optional: &[&str],
) -> Result<usize> {
    let found: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let n_opt = found.len().checked_sub(expected.len());
    let ok = match n_opt {
        Some(k) if k <= optional.len() => found
            .iter()
            .zip(expected.iter().chain(optional))
            .all(|(f, e)| f == e),
        _ => false,
    };
    if !ok {
        return Err(Error::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(n_opt.unwrap_or(0))
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("bad date `{s}`"))
}

fn parse_f64(field: &str, s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad {field} `{s}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{field} is not finite"))
    }
}

fn parse_country(s: &str) -> std::result::Result<Option<String>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    if s.len() == 2 && s.chars().all(|c| c.is_ascii_alphabetic()) {
        Ok(Some(s.to_ascii_uppercase()))
    } else {
        Err(format!("country_code `{s}` is not ISO-3166 alpha-2"))
    }
}

/// Parse `organizations.csv`.
pub fn parse_organizations(text: &str) -> Result<Parsed<Organization>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &ORGANIZATIONS_HEADER, &[])?;
    let taxonomy = full_taxonomy();
    let mut seen = HashSet::new();
    let mut out = Parsed {
        accepted: Vec::new(),
        rejected: Vec::new(),
        rows: 0,
    };
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        out.rows += 1;
        let org_id = record[0].to_owned();
        let row = (|| {
            if org_id.is_empty() {
                return Err("empty org_id".to_owned());
            }
            if seen.contains(&org_id) {
                return Err(format!("duplicate org_id `{org_id}`"));
            }
            let country = parse_country(&record[2])?;
            let tags: BTreeSet<String> = record[3]
                .split(';')
                .map(normalize_tag)
                .filter(|t| !t.is_empty())
                .collect();
            let sectors = assign_sectors(&tags, &taxonomy);
            Ok(Organization {
                org_id: org_id.clone(),
                name: record[1].to_owned(),
                country,
                tags,
                sectors,
            })
        })();
        match row {
            Ok(org) => {
                seen.insert(org_id);
                out.accepted.push(org);
            }
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}

/// Parse `funding_rounds.csv`. An optional trailing `pmv_provenance` column is
/// honoured so imputed outputs can be read back.
pub fn parse_funding_rounds(text: &str, opts: &ParseOptions) -> Result<Parsed<FundingRound>> {
    let mut rdr = reader(text);
    let has_provenance = check_header(&mut rdr, &ROUNDS_HEADER, &["pmv_provenance"])? == 1;
    let mut seen = HashSet::new();
    let mut out = Parsed {
        accepted: Vec::new(),
        rejected: Vec::new(),
        rows: 0,
    };
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        out.rows += 1;
        let row = (|| {
            let round_id = record[0].to_owned();
            let org_id = record[1].to_owned();
            if round_id.is_empty() || org_id.is_empty() {
                return Err("empty round_id or org_id".to_owned());
            }
            if seen.contains(&round_id) {
                return Err(format!("duplicate round_id `{round_id}`"));
            }
            opts.check_org(&org_id)?;
            let date = parse_date(&record[2])?;
            opts.check_date(date)?;
            let amount_musd = parse_f64("amount_musd", &record[3])?;
            if amount_musd < 0.0 {
                return Err(format!("negative amount_musd {amount_musd}"));
            }
            let pmv_musd = match &record[4] {
                "" => None,
                s => {
                    let v = parse_f64("pmv_musd", s)?;
                    if v <= 0.0 {
                        return Err(format!("pmv_musd must be positive, got {v}"));
                    }
                    Some(v)
                }
            };
            let investor_count = match &record[5] {
                "" => 0,
                s => s.parse().map_err(|_| format!("bad investor_count `{s}`"))?,
            };
            let lead_investor_rank = match &record[6] {
                "" => None,
                s => {
                    let r: u32 = s
                        .parse()
                        .map_err(|_| format!("bad lead_investor_rank `{s}`"))?;
                    if r == 0 {
                        return Err("lead_investor_rank must be >= 1".to_owned());
                    }
                    Some(r)
                }
            };
            let round_type = RoundType::parse_label(&record[7]);
            let pmv_provenance = if has_provenance {
                let p: Provenance = record[8].parse().map_err(|e: Error| e.to_string())?;
                match (p, pmv_musd) {
                    (Provenance::Missing, Some(_)) => {
                        return Err("pmv present but provenance is missing".to_owned())
                    }
                    (Provenance::Observed | Provenance::Imputed, None) => {
                        return Err(format!("provenance {} without pmv", p.as_str()))
                    }
                    _ => p,
                }
            } else if pmv_musd.is_some() {
                Provenance::Observed
            } else {
                Provenance::Missing
            };
            Ok(FundingRound {
                round_id,
                org_id,
                date,
                amount_musd,
                pmv_musd,
                pmv_provenance,
                investor_count,
                lead_investor_rank,
                round_type,
            })
        })();
        match row {
            Ok(r) => {
                seen.insert(r.round_id.clone());
                out.accepted.push(r);
            }
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    sort_rounds(&mut out.accepted);
    Ok(out)
}

/// Parse `exits.csv`, keeping the earliest exit per organization.
///
/// With `rounds` supplied, exits dated before the organization's financing
/// history are rejected.
pub fn parse_exits(
    text: &str,
    rounds: Option<&[FundingRound]>,
    opts: &ParseOptions,
) -> Result<Parsed<ExitEvent>> {
    let mut rdr = reader(text);
    let has_provenance = check_header(&mut rdr, &EXITS_HEADER, &["value_provenance"])? == 1;

    let mut span: BTreeMap<&str, (NaiveDate, NaiveDate)> = BTreeMap::new();
    for r in rounds.unwrap_or(&[]) {
        span.entry(r.org_id.as_str())
            .and_modify(|(lo, hi)| {
                *lo = (*lo).min(r.date);
                *hi = (*hi).max(r.date);
            })
            .or_insert((r.date, r.date));
    }

    let mut out = Parsed {
        accepted: Vec::new(),
        rejected: Vec::new(),
        rows: 0,
    };
    let mut candidates: Vec<(u64, ExitEvent)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        out.rows += 1;
        let row = (|| {
            let org_id = record[0].to_owned();
            if org_id.is_empty() {
                return Err("empty org_id".to_owned());
            }
            opts.check_org(&org_id)?;
            let date = parse_date(&record[1])?;
            opts.check_date(date)?;
            let kind: ExitKind = record[2].parse().map_err(|e: Error| e.to_string())?;
            let exit_value_musd = match &record[3] {
                "" => None,
                s => {
                    let v = parse_f64("exit_value_musd", s)?;
                    if v <= 0.0 {
                        return Err(format!("exit_value_musd must be positive, got {v}"));
                    }
                    Some(v)
                }
            };
            let value_provenance = match (has_provenance, exit_value_musd) {
                (true, v) => {
                    let p: Provenance = record[4].parse().map_err(|e: Error| e.to_string())?;
                    if (p == Provenance::Missing) != v.is_none() {
                        return Err("exit value and provenance disagree".to_owned());
                    }
                    p
                }
                (false, Some(_)) => Provenance::Observed,
                (false, None) => Provenance::Missing,
            };
            if let Some(&(first, last)) = span.get(org_id.as_str()) {
                if date < first {
                    return Err("exit precedes financing history".to_owned());
                }
                if date < last {
                    return Err("exit precedes the last funding round".to_owned());
                }
            }
            Ok(ExitEvent {
                org_id,
                date,
                kind,
                exit_value_musd,
                value_provenance,
            })
        })();
        match row {
            Ok(e) => candidates.push((line, e)),
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }

    // earliest exit per org wins; ties go to the earlier line
    candidates.sort_by(|(la, a), (lb, b)| {
        a.org_id
            .cmp(&b.org_id)
            .then(a.date.cmp(&b.date))
            .then(la.cmp(lb))
    });
    let mut last_org: Option<String> = None;
    for (line, e) in candidates {
        if last_org.as_deref() == Some(e.org_id.as_str()) {
            out.rejected.push(Rejection {
                line,
                reason: format!("later exit for `{}`; earliest exit retained", e.org_id),
            });
        } else {
            last_org = Some(e.org_id.clone());
            out.accepted.push(e);
        }
    }
    out.rejected.sort_by_key(|r| r.line);
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_text(rows: Vec<Vec<String>>, header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_organizations(orgs: &[Organization]) -> String {
    let rows = orgs
        .iter()
        .map(|o| {
            vec![
                o.org_id.clone(),
                o.name.clone(),
                o.country.clone().unwrap_or_default(),
                o.tags.iter().cloned().collect::<Vec<_>>().join(";"),
            ]
        })
        .collect();
    to_text(rows, &ORGANIZATIONS_HEADER)
}

/// Rounds in the ingest schema plus the `pmv_provenance` column.
pub fn write_funding_rounds(rounds: &[FundingRound]) -> String {
    let rows = rounds
        .iter()
        .map(|r| {
            vec![
                r.round_id.clone(),
                r.org_id.clone(),
                r.date.to_string(),
                r.amount_musd.to_string(),
                fmt_opt(r.pmv_musd),
                r.investor_count.to_string(),
                r.lead_investor_rank
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
                r.round_type.as_str().to_owned(),
                r.pmv_provenance.as_str().to_owned(),
            ]
        })
        .collect();
    let mut header = ROUNDS_HEADER.to_vec();
    header.push("pmv_provenance");
    to_text(rows, &header)
}

/// Exits in the ingest schema plus the `value_provenance` column.
pub fn write_exits(exits: &[ExitEvent]) -> String {
    let rows = exits
        .iter()
        .map(|e| {
            vec![
                e.org_id.clone(),
                e.date.to_string(),
                e.kind.as_str().to_owned(),
                fmt_opt(e.exit_value_musd),
                e.value_provenance.as_str().to_owned(),
            ]
        })
        .collect();
    let mut header = EXITS_HEADER.to_vec();
    header.push("value_provenance");
    to_text(rows, &header)
}

pub fn write_rejections(rejected: &[Rejection]) -> String {
    let rows = rejected
        .iter()
        .map(|r| vec![r.line.to_string(), r.reason.clone()])
        .collect();
    to_text(rows, &["line", "reason"])
}
