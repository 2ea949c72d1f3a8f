//! Experiment orchestration: speedup studies, exports and reproduction
//! tables. Results are plain data; the CLI decides where they go.

mod exports;
mod study;
mod table1;

pub use exports::{
    export_clustering, export_landscape, BandSummary, ClusteringExport, LandscapeExport, MedianSplit,
};
pub use study::{
    run_speedup_study, write_study_outputs, DensityRow, ExperimentRecord, FitSummary, StudyConfig,
    StudyFailure, StudyOutcome,
};
pub use table1::{evaluate_counts, reproduce_table1, CountsEvaluation, Table1Row};

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Reads any config section from TOML, or JSON when the extension is
/// `.json`. Parse failures surface as [`Error::Config`].
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Run manifest written next to study outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub master_seed: u64,
    pub config: &'a C,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(master_seed: u64, config: &'a C) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            master_seed,
            config,
        }
    }
}
