use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("unexpected csv header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("missing market data for {quarter}: {detail}")]
    MissingMarketData { quarter: String, detail: String },

    #[error("not enough observations: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error(
        "only {got} labeled rounds available, the imputer needs at least {needed}; \
         rerun with `imputer.kind = \"passthrough\"` to skip imputation"
    )]
    TooFewLabels { needed: usize, got: usize },

    #[error("stake exceeds 100%: money raised {money} is above post-money valuation {valuation}")]
    StakeExceedsValuation { money: f64, valuation: f64 },

    #[error("total loss: gross return {0} is at or below -100%")]
    TotalLoss(f64),

    #[error("degenerate samples: both variances are zero and means differ")]
    DegenerateSamples,

    #[error("config error: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// A file that should exist does not.
    pub fn is_not_found(&self) -> bool {
        matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }

    pub fn path(&self) -> Option<&std::path::Path> {
        match self {
            Error::Io { path, .. } => Some(path),
            _ => None,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Header { .. } => "header",
            Error::Invalid(_) => "invalid_input",
            Error::MissingMarketData { .. } => "missing_market_data",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::TooFewLabels { .. } => "too_few_labels",
            Error::StakeExceedsValuation { .. } => "stake_exceeds_valuation",
            Error::TotalLoss(_) => "total_loss",
            Error::DegenerateSamples => "degenerate_samples",
            Error::Config(_) => "config",
            Error::Model(_) => "model",
            Error::Json(_) => "json",
        }
    }
}
