//! Batch drivers for the Dicke-Ising chain: simplex phase-diagram scans,
//! one-parameter slices with warm-start chaining, homodyne trajectory
//! ensembles and finite-size peak analysis.
//!
//! Every driver writes tab-separated tables with a `#` header block
//! carrying the format version, a hash of the physics configuration and
//! the column names. Rows appear in grid order regardless of which worker
//! finished first, so reruns and resumed runs produce identical files.

pub mod analysis;
pub mod config;
pub mod ensemble;
pub mod scan;
pub mod table;

mod pool;

pub use config::ScanConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("table: {0}")]
    Table(String),
    #[error("analysis: {0}")]
    Analysis(String),
    #[error(transparent)]
    Core(#[from] dicke_mps::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
