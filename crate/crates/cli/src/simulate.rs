use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use casimir_lab::protocol::run_campaign;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::format::{field_tag, sweep_file_name, write_sweep};
use crate::manifest::{FileEntry, Manifest, SweepMeta, DATASET_MANIFEST};
use crate::unix_now;

pub const SWEEP_DIR: &str = "sweeps";

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub n_triplets: usize,
    pub n_sweeps: usize,
    pub fields_mt: Vec<f64>,
    pub replications: usize,
    pub thermal_enhancement: Option<f64>,
    pub seed: u64,
}

impl std::fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fields: Vec<String> = self.fields_mt.iter().map(|h| format!("{h}")).collect();
        writeln!(
            f,
            "simulated {} triplets ({} sweeps), seed {}",
            self.n_triplets, self.n_sweeps, self.seed
        )?;
        writeln!(f, "fields (mT): {}", fields.join(", "))?;
        writeln!(f, "replications: {}", self.replications)?;
        match self.thermal_enhancement {
            Some(m) => write!(f, "scenario: thermal photons, M = {m:.4}"),
            None => write!(f, "scenario: zero-point"),
        }
    }
}

/// Two fields that round to the same μT would share file names.
fn check_field_tags(config: &RunConfig) -> Result<(), CliError> {
    let mut seen = BTreeMap::new();
    for &h in &config.campaign.fields_mt {
        if let Some(prev) = seen.insert(field_tag(h), h) {
            return Err(CliError::Config(format!(
                "[campaign] fields_mt: {prev} and {h} mT coincide at 1 uT resolution"
            )));
        }
    }
    Ok(())
}

/// Runs the campaign described by `config` and writes it under `out_dir`.
pub fn simulate(config: &RunConfig, out_dir: &Path) -> Result<SimulateSummary, CliError> {
    let started = unix_now();
    let clock = Instant::now();
    config.validate()?;
    check_field_tags(config)?;
    let campaign = config.campaign_config();
    let dataset = run_campaign(&campaign)?;

    let sweep_dir = out_dir.join(SWEEP_DIR);
    std::fs::create_dir_all(&sweep_dir).map_err(CliError::io(&sweep_dir))?;

    let entries: Vec<FileEntry> = dataset
        .triplets
        .iter()
        .flat_map(|t| {
            t.sweeps().map(|s| {
                let l = &s.label;
                let name = sweep_file_name(&l.sample_id, l.kind, t.field_mt, l.replication, l.position);
                FileEntry {
                    path: format!("{SWEEP_DIR}/{name}"),
                    role: "sweep".to_string(),
                    sweep: Some(SweepMeta {
                        sample_id: l.sample_id.clone(),
                        kind: l.kind,
                        triplet_field_mt: t.field_mt,
                        field_mt: l.field_mt,
                        replication: l.replication,
                        position: l.position,
                        t_start_s: l.t_start_s,
                    }),
                }
            })
        })
        .collect();
    let traces: Vec<_> = dataset.triplets.iter().flat_map(|t| t.sweeps()).collect();
    entries
        .par_iter()
        .zip(traces.par_iter())
        .try_for_each(|(e, trace)| write_sweep(&out_dir.join(&e.path), trace))?;

    let mut manifest = Manifest::new("simulate", config.clone(), dataset.thermal_enhancement);
    manifest.files = entries;
    manifest.files.push(FileEntry::new(DATASET_MANIFEST, "manifest"));
    manifest.runtime.started_unix_s = started;
    manifest.runtime.elapsed_s = clock.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(DATASET_MANIFEST))?;

    Ok(SimulateSummary {
        n_triplets: dataset.triplets.len(),
        n_sweeps: traces.len(),
        fields_mt: campaign.fields_mt.clone(),
        replications: campaign.replications,
        thermal_enhancement: dataset.thermal_enhancement,
        seed: campaign.noise.seed,
    })
}
