//! File formats, sweeps and reports around `wpan-core`, plus the library
//! half of the `wpan` command-line tool.

use std::io;
use std::path::{Path, PathBuf};

pub mod compare;
pub mod report;
pub mod scenario_file;
pub mod sweep;

pub use compare::{Band, CompareReport};
pub use scenario_file::{load_scenario, save_scenario, Scenario, ScenarioFile};

#[derive(Debug, thiserror::Error)]
pub enum ToolError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Scenario(Vec<String>),
    #[error(transparent)]
    Core(#[from] wpan_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl ToolError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ToolError>;
