//! Private-market performance toolkit: dilution-adjusted returns to exit,
//! quarterly log market model fits per sector, implied risk and return
//! figures, and the descriptive tables that go with them.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod econometrics;
pub mod error;
pub mod impute;
pub mod ingest;
pub mod marketdata;
pub mod pipeline;
pub mod returns;
pub mod sim;
pub mod stats;
mod table;

pub use error::{Error, Result};
pub use ingest::{Dataset, ExitEvent, FundingRound, Organization, SectorId, SectorKey};
pub use marketdata::{MarketMoments, Quarter, QuarterGrid};
