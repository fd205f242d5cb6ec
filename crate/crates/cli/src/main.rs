use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vcperf_core::ingest::SampleWindow;
use vcperf_core::pipeline::{run, run_simulation, Manifest, RunConfig, Stage};
use vcperf_core::returns::DilutionMode;
use vcperf_core::Error;

#[derive(Parser)]
#[command(
    name = "vcperf",
    version,
    about = "Venture returns, log market model fits and sector tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the entity CSVs and write the cleaned files and rejects.
    Ingest(RunArgs),
    /// Fill missing valuations and write the imputer model.
    Impute(RunArgs),
    /// Compute dilution-adjusted returns and sector quarterly means.
    Returns(RunArgs),
    /// Fit the log market model per sector.
    Fit(RunArgs),
    /// Write the descriptive tables.
    Report(RunArgs),
    /// Run every stage.
    All(RunArgs),
    /// Draw a synthetic dataset from a simulation spec.
    Simulate(SimArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding the input CSVs.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// `standard` or `as-printed`.
    #[arg(long)]
    dilution: Option<DilutionMode>,
    /// `START:END`, e.g. `2010-01-01:2022-05-31`.
    #[arg(long)]
    window: Option<SampleWindow>,
    #[arg(long)]
    min_quarters: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn init_logging(level: &str) {
    let _ = env_logger::Builder::new()
        .parse_filters(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

/// Defaults, then the config file, then `VM_*` variables, then flags.
fn build_config(args: RunArgs) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(v) = args.data {
        cfg.data = v;
    }
    if let Some(v) = args.out {
        cfg.out = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.dilution {
        cfg.dilution = v;
    }
    if let Some(v) = args.window {
        cfg.window = v;
    }
    if let Some(v) = args.min_quarters {
        cfg.min_quarters = v;
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<Manifest, Error> {
    let (args, stage) = match command {
        Command::Simulate(a) => {
            init_logging(&std::env::var("VM_LOG_LEVEL").unwrap_or_else(|_| "info".into()));
            return run_simulation(&a.spec, &a.out, a.seed);
        }
        Command::Ingest(a) => (a, Stage::Ingest),
        Command::Impute(a) => (a, Stage::Impute),
        Command::Returns(a) => (a, Stage::Returns),
        Command::Fit(a) => (a, Stage::Fit),
        Command::Report(a) => (a, Stage::Report),
        Command::All(a) => (a, Stage::All),
    };
    let cfg = build_config(args)?;
    init_logging(&cfg.log_level);
    run(&cfg, stage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(manifest) => {
            log::info!(
                "{} stage wrote {} artifacts",
                manifest.stage,
                manifest.artifacts.len()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            let body = serde_json::json!({
                "error": {
                    "kind": e.kind(),
                    "message": e.to_string(),
                    "path": e.path().map(|p| p.display().to_string()),
                }
            });
            eprintln!("{body}");
            if e.is_not_found() || matches!(e, Error::Config(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
