//! Run configuration and the staged pipeline behind the command-line tool.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::econometrics::{
    fit_all, render_fits_markdown, render_implied_markdown, write_fits, write_implied,
    ConversionOrder, SectorResult,
};
use crate::error::{Error, Result};
use crate::impute::{
    fit_imputer, impute_dataset, labeled_rounds, ImputationReport, ImputeCounts, ImputerConfig,
    ImputerKind, ImputerModel,
};
use crate::ingest::{
    parse_exits, parse_funding_rounds, parse_organizations, write_exits, write_funding_rounds,
    write_organizations, write_rejections, Dataset, ParseOptions, Rejection, SampleWindow,
    SectorKey,
};
use crate::marketdata::{
    available_log_market_returns, available_log_riskfree, PriceSeries, QuarterGrid,
    QuarterlySeries, RateSeries, RiskFreeConvention,
};
use crate::returns::{
    compute_round_returns, sector_series, write_round_returns, write_sector_quarterly,
    CoverageReport, DilutionMode, EntryPolicy, QuarterlySectorSeries, ReturnsConfig, RoundReturn,
};
use crate::sim::{simulate, SimSpec};
use crate::stats::{build_report, Report, ReportConfig};

pub const TOOL_NAME: &str = "vcperf";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub organizations: PathBuf,
    pub funding_rounds: PathBuf,
    pub exits: PathBuf,
    pub index: PathBuf,
    pub riskfree: PathBuf,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            organizations: "organizations.csv".into(),
            funding_rounds: "funding_rounds.csv".into(),
            exits: "exits.csv".into(),
            index: "index.csv".into(),
            riskfree: "riskfree.csv".into(),
        }
    }
}

mod window_text {
    use super::SampleWindow;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &SampleWindow, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(w)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SampleWindow, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Everything a run depends on besides the input bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory that relative input paths are resolved against.
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    #[serde(with = "window_text")]
    pub window: SampleWindow,
    pub dilution: DilutionMode,
    pub entry: EntryPolicy,
    pub days_per_quarter: f64,
    pub riskfree_convention: RiskFreeConvention,
    pub conversion_order: ConversionOrder,
    pub min_quarters: usize,
    /// Reject rounds and exits that reference unknown organizations.
    pub strict_refs: bool,
    pub log_level: String,
    pub inputs: InputPaths,
    pub imputer: ImputerConfig,
    pub report: ReportConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let returns = ReturnsConfig::default();
        RunConfig {
            data: PathBuf::from("."),
            out: PathBuf::from("out"),
            seed: 0,
            window: SampleWindow::default(),
            dilution: returns.mode,
            entry: returns.entry,
            days_per_quarter: returns.days_per_quarter,
            riskfree_convention: RiskFreeConvention::default(),
            conversion_order: ConversionOrder::default(),
            min_quarters: 3,
            strict_refs: true,
            log_level: "info".into(),
            inputs: InputPaths::default(),
            imputer: ImputerConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn parse_env<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key}={value}")))
}

impl RunConfig {
    /// Parse a TOML config. When the file does not set `data`, relative inputs
    /// resolve against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if !table.contains_key("data") {
            cfg.data = path.parent().map(Path::to_path_buf).unwrap_or_default();
            if cfg.data.as_os_str().is_empty() {
                cfg.data = PathBuf::from(".");
            }
        }
        Ok(cfg)
    }

    /// Apply `VM_*` overrides from `vars`; other variables are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let (k, v) = (k.as_ref(), v.as_ref());
            match k {
                "VM_SEED" => self.seed = parse_env(k, v)?,
                "VM_OUT" => self.out = v.into(),
                "VM_DATA" => self.data = v.into(),
                "VM_DILUTION" => self.dilution = v.parse()?,
                "VM_WINDOW" => self.window = v.parse()?,
                "VM_MIN_QUARTERS" => self.min_quarters = parse_env(k, v)?,
                "VM_LOG_LEVEL" => self.log_level = v.to_owned(),
                "VM_IMPUTER" => {
                    self.imputer.kind = match v.to_ascii_lowercase().as_str() {
                        "ridge" => ImputerKind::Ridge,
                        "knn" => ImputerKind::Knn,
                        "passthrough" => ImputerKind::Passthrough,
                        _ => return Err(Error::Config(format!("unknown imputer `{v}`"))),
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_quarters < 3 {
            return Err(Error::Config(format!(
                "min_quarters must be at least 3, got {}",
                self.min_quarters
            )));
        }
        if !(self.days_per_quarter > 0.0) {
            return Err(Error::Config("days_per_quarter must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.data.join(p)
        }
    }

    pub fn returns_config(&self) -> ReturnsConfig {
        ReturnsConfig {
            mode: self.dilution,
            days_per_quarter: self.days_per_quarter,
            entry: self.entry,
        }
    }

    pub fn imputer_config(&self) -> ImputerConfig {
        ImputerConfig {
            seed: self.seed,
            ..self.imputer.clone()
        }
    }

    pub fn grid(&self) -> Result<QuarterGrid> {
        QuarterGrid::covering(self.window.start, self.window.end)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serializing config: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Impute,
    Returns,
    Fit,
    Report,
    /// Every stage; same artifacts as `Report`.
    All,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Impute => "impute",
            Stage::Returns => "returns",
            Stage::Fit => "fit",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An input file read in full, with its digest.
#[derive(Debug, Clone)]
pub struct InputFile {
    /// Path as configured, before resolution.
    pub path: PathBuf,
    pub text: String,
    pub sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(cfg: &RunConfig, p: &Path) -> Result<InputFile> {
    let resolved = cfg.resolve(p);
    let text = fs::read_to_string(&resolved).map_err(|e| Error::io(&resolved, e))?;
    Ok(InputFile {
        path: p.to_path_buf(),
        sha256: sha256_hex(text.as_bytes()),
        text,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FileCounts {
    pub rows: usize,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub organizations: FileCounts,
    pub funding_rounds: FileCounts,
    pub exits: FileCounts,
    pub rounds_outside_window: usize,
    pub exits_outside_window: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub report: IngestReport,
    pub organization_rejects: Vec<Rejection>,
    pub round_rejects: Vec<Rejection>,
    pub exit_rejects: Vec<Rejection>,
}

/// Parse the three entity files and restrict to the configured window.
pub fn ingest_texts(
    organizations: &str,
    funding_rounds: &str,
    exits: &str,
    cfg: &RunConfig,
) -> Result<Ingested> {
    let orgs = parse_organizations(organizations)?;
    let opts = if cfg.strict_refs {
        ParseOptions::strict(&orgs.accepted)
    } else {
        ParseOptions::default()
    };
    let rounds = parse_funding_rounds(funding_rounds, &opts)?;
    let exit_rows = parse_exits(exits, Some(&rounds.accepted), &opts)?;
    let counts = |rows, accepted, rejected| FileCounts {
        rows,
        accepted,
        rejected,
    };
    let mut report = IngestReport {
        organizations: counts(orgs.rows, orgs.accepted.len(), orgs.rejected.len()),
        funding_rounds: counts(rounds.rows, rounds.accepted.len(), rounds.rejected.len()),
        exits: counts(
            exit_rows.rows,
            exit_rows.accepted.len(),
            exit_rows.rejected.len(),
        ),
        ..IngestReport::default()
    };
    let full = Dataset::new(orgs.accepted, rounds.accepted, exit_rows.accepted);
    let dataset = full.restrict_to(&cfg.window);
    report.rounds_outside_window = full.rounds().len() - dataset.rounds().len();
    report.exits_outside_window = full.exits().len() - dataset.exits().len();
    Ok(Ingested {
        dataset,
        report,
        organization_rejects: orgs.rejected,
        round_rejects: rounds.rejected,
        exit_rejects: exit_rows.rejected,
    })
}

#[derive(Debug, Clone)]
pub struct Imputed {
    pub dataset: Dataset,
    pub model: Option<ImputerModel>,
    pub report: Option<ImputationReport>,
    pub counts: ImputeCounts,
}

pub fn impute_stage(dataset: &Dataset, cfg: &RunConfig) -> Result<Imputed> {
    let icfg = cfg.imputer_config();
    if icfg.kind == ImputerKind::Passthrough {
        return Ok(Imputed {
            dataset: dataset.clone(),
            model: None,
            report: None,
            counts: ImputeCounts::default(),
        });
    }
    let (model, report) = fit_imputer(&labeled_rounds(dataset), &icfg)?;
    let (dataset, counts) = impute_dataset(dataset, &model);
    log::info!(
        "imputed {} valuations and {} exit values",
        counts.pmvs,
        counts.exit_values
    );
    Ok(Imputed {
        dataset,
        model: Some(model),
        report: Some(report),
        counts,
    })
}

#[derive(Debug, Clone)]
pub struct Returns {
    pub returns: Vec<RoundReturn>,
    pub coverage: CoverageReport,
    pub series: BTreeMap<SectorKey, QuarterlySectorSeries>,
}

pub fn returns_stage(dataset: &Dataset, cfg: &RunConfig) -> Result<Returns> {
    let (returns, coverage) = compute_round_returns(dataset, &cfg.returns_config());
    let series = sector_series(&returns, dataset.organizations(), &cfg.grid()?)?;
    Ok(Returns {
        returns,
        coverage,
        series,
    })
}

#[derive(Debug, Clone)]
pub struct Market {
    pub ln_rm: QuarterlySeries,
    pub ln_rf: QuarterlySeries,
}

pub fn market_from_texts(index: &str, riskfree: &str, cfg: &RunConfig) -> Result<Market> {
    let grid = cfg.grid()?;
    let index = PriceSeries::from_csv(index)?;
    let rates = RateSeries::from_csv(riskfree)?;
    let ln_rm = available_log_market_returns(&index, &grid);
    let ln_rf = available_log_riskfree(&rates, &grid, cfg.riskfree_convention);
    for q in grid.iter() {
        if !ln_rm.contains_key(&q) {
            log::warn!("no benchmark return for {q}");
        }
        if !ln_rf.contains_key(&q) {
            log::warn!("no risk-free rate for {q}");
        }
    }
    Ok(Market { ln_rm, ln_rf })
}

#[derive(Debug, Clone)]
pub struct Fits {
    pub results: Vec<SectorResult>,
    pub skipped: BTreeMap<SectorKey, String>,
}

pub fn fit_stage(
    series: &BTreeMap<SectorKey, QuarterlySectorSeries>,
    market: &Market,
    cfg: &RunConfig,
) -> Fits {
    let (results, skipped) = fit_all(
        series,
        &market.ln_rm,
        &market.ln_rf,
        cfg.min_quarters,
        cfg.conversion_order,
    );
    for (k, why) in &skipped {
        log::info!("{k} not fitted: {why}");
    }
    Fits { results, skipped }
}

/// A file written to the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub config_sha256: String,
    pub inputs: Vec<InputRecord>,
    pub artifacts: Vec<Artifact>,
}

struct OutDir {
    root: PathBuf,
    written: Vec<Artifact>,
}

impl OutDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(Artifact {
            name: name.to_owned(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len(),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn finish(mut self, stage: &str, config_text: &str, inputs: &[InputFile]) -> Result<Manifest> {
        self.write("run_config.toml", config_text)?;
        self.written.sort_by(|a, b| a.name.cmp(&b.name));
        let manifest = Manifest {
            tool: TOOL_NAME.to_owned(),
            version: TOOL_VERSION.to_owned(),
            stage: stage.to_owned(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            inputs: inputs
                .iter()
                .map(|f| InputRecord {
                    path: f.path.display().to_string(),
                    sha256: f.sha256.clone(),
                    bytes: f.text.len(),
                })
                .collect(),
            artifacts: self.written.clone(),
        };
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Run every stage up to and including `last`, writing each stage's
/// artifacts and a manifest to `cfg.out`.
pub fn run(cfg: &RunConfig, last: Stage) -> Result<Manifest> {
    cfg.validate()?;
    let config_text = cfg.to_toml()?;

    let mut inputs = vec![
        read_input(cfg, &cfg.inputs.organizations)?,
        read_input(cfg, &cfg.inputs.funding_rounds)?,
        read_input(cfg, &cfg.inputs.exits)?,
    ];
    let market_files = if last >= Stage::Fit {
        let index = read_input(cfg, &cfg.inputs.index)?;
        let riskfree = read_input(cfg, &cfg.inputs.riskfree)?;
        inputs.push(index);
        inputs.push(riskfree);
        true
    } else {
        false
    };

    let mut out = OutDir::create(&cfg.out)?;

    let ingested = ingest_texts(&inputs[0].text, &inputs[1].text, &inputs[2].text, cfg)?;
    for (input, rejects) in [
        (&cfg.inputs.organizations, &ingested.organization_rejects),
        (&cfg.inputs.funding_rounds, &ingested.round_rejects),
        (&cfg.inputs.exits, &ingested.exit_rejects),
    ] {
        if !rejects.is_empty() {
            log::warn!("{} rows rejected from {}", rejects.len(), input.display());
        }
        out.write(
            &format!("{}.rejects.csv", file_name(input)),
            &write_rejections(rejects),
        )?;
    }
    let ds = &ingested.dataset;
    out.write(
        "organizations.csv",
        &write_organizations(ds.organizations()),
    )?;
    out.write("funding_rounds.csv", &write_funding_rounds(ds.rounds()))?;
    out.write("exits.csv", &write_exits(ds.exits()))?;
    out.write_json("ingest_report.json", &ingested.report)?;
    if last == Stage::Ingest {
        return out.finish(last.as_str(), &config_text, &inputs);
    }

    let imputed = impute_stage(ds, cfg)?;
    if let Some(model) = &imputed.model {
        out.write("imputer.model", &(model.to_json()? + "\n"))?;
    }
    out.write_json(
        "imputation_report.json",
        &serde_json::json!({
            "kind": cfg.imputer.kind,
            "fit": imputed.report,
            "imputed": imputed.counts,
        }),
    )?;
    out.write(
        "imputed_funding_rounds.csv",
        &write_funding_rounds(imputed.dataset.rounds()),
    )?;
    out.write("imputed_exits.csv", &write_exits(imputed.dataset.exits()))?;
    if last == Stage::Impute {
        return out.finish(last.as_str(), &config_text, &inputs);
    }

    let returns = returns_stage(&imputed.dataset, cfg)?;
    out.write("round_returns.csv", &write_round_returns(&returns.returns))?;
    out.write(
        "sector_quarterly.csv",
        &write_sector_quarterly(&returns.series),
    )?;
    out.write_json("coverage.json", &returns.coverage)?;
    if last == Stage::Returns {
        return out.finish(last.as_str(), &config_text, &inputs);
    }

    debug_assert!(market_files);
    let market = market_from_texts(&inputs[3].text, &inputs[4].text, cfg)?;
    let fits = fit_stage(&returns.series, &market, cfg);
    out.write("fits.csv", &write_fits(&fits.results))?;
    out.write("fits.md", &render_fits_markdown(&fits.results))?;
    out.write("implied.csv", &write_implied(&fits.results))?;
    out.write("implied.md", &render_implied_markdown(&fits.results))?;
    out.write_json(
        "fit_report.json",
        &serde_json::json!({
            "fitted": fits.results,
            "skipped": fits.skipped.iter().map(|(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
        }),
    )?;
    if last == Stage::Fit {
        return out.finish(last.as_str(), &config_text, &inputs);
    }

    let report: Report = build_report(&imputed.dataset, &cfg.grid()?, &cfg.report);
    for (name, text) in report.artifacts() {
        out.write(name, &text)?;
    }
    out.finish(last.as_str(), &config_text, &inputs)
}

/// Write a synthetic dataset drawn from the spec at `spec_path` into `out`.
pub fn run_simulation(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<Manifest> {
    let text = fs::read_to_string(spec_path).map_err(|e| Error::io(spec_path, e))?;
    let mut spec = SimSpec::from_toml(&text)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let synthetic = simulate(&spec)?;
    let mut dir = OutDir::create(out)?;
    for (name, contents) in synthetic.files()? {
        dir.write(name, &contents)?;
    }
    let spec_text =
        toml::to_string(&spec).map_err(|e| Error::Config(format!("serializing spec: {e}")))?;
    let input = InputFile {
        path: spec_path.to_path_buf(),
        sha256: sha256_hex(text.as_bytes()),
        text,
    };
    dir.finish("simulate", &spec_text, &[input])
}
