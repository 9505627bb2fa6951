//! JSON run manifests. Everything outside `runtime` and `source_dir` is a
//! pure function of the inputs.

use std::path::Path;

use casimir_lab::protocol::{SampleKind, TripletPosition};
use casimir_lab::AnalysisOptions;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const DATASET_MANIFEST: &str = "manifest.json";
pub const ANALYSIS_MANIFEST: &str = "analysis_manifest.json";
pub const REPORT_MANIFEST: &str = "report_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub sample_id: String,
    pub kind: SampleKind,
    /// Nominal field of the triplet the sweep belongs to (mT).
    pub triplet_field_mt: f64,
    /// Field applied during this sweep (mT).
    pub field_mt: f64,
    pub replication: usize,
    pub position: TripletPosition,
    pub t_start_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the directory holding the manifest, or to `source_dir`
    /// for inputs.
    pub path: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepMeta>,
}

impl FileEntry {
    pub fn new(path: impl Into<String>, role: &str) -> Self {
        Self {
            path: path.into(),
            role: role.to_string(),
            sweep: None,
        }
    }
}

/// Wall-clock and machine-dependent metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Analysis options actually applied (analyze and report only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_enhancement: Option<f64>,
    /// Directory the inputs were read from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_dir: Option<String>,
    #[serde(default)]
    pub inputs: Vec<FileEntry>,
    pub files: Vec<FileEntry>,
    pub runtime: Runtime,
}

impl Manifest {
    pub fn new(command: &str, config: RunConfig, thermal_enhancement: Option<f64>) -> Self {
        Self {
            tool: "casimir-lab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.noise.seed,
            config,
            analysis: None,
            thermal_enhancement,
            source_dir: None,
            inputs: Vec::new(),
            files: Vec::new(),
            runtime: Runtime {
                started_unix_s: 0.0,
                elapsed_s: 0.0,
                threads: rayon::current_num_threads(),
            },
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}
