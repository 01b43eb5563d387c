use std::path::PathBuf;

use thiserror::Error;

use crate::solver::StepStats;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected L = {expected_length}, N = {expected_cells}; found L = {found_length}, N = {found_cells}")]
    GridMismatch {
        expected_length: f64,
        expected_cells: usize,
        found_length: f64,
        found_cells: usize,
    },

    #[error("non-finite value at node {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("mollifier width {width} is under-resolved on spacing {spacing} (need width > 2h)")]
    UnderResolvedKernel { width: f64, spacing: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp {
        t: f64,
        reason: String,
        stats: Option<StepStats>,
    },

    #[error("test function support [{t_lo}, {t_hi}] is not covered by the trajectory window [0, {t_end}]")]
    SupportOutsideWindow { t_lo: f64, t_hi: f64, t_end: f64 },

    #[error("test function is under-sampled: {found} snapshots inside its support, need at least {required}")]
    UnderSampledSupport { found: usize, required: usize },

    #[error("malformed input {path:?}: {reason}")]
    Malformed {
        path: Option<PathBuf>,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn malformed(path: Option<&std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.map(|p| p.to_path_buf()),
            reason: reason.into(),
        }
    }
}
