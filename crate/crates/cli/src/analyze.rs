use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use casimir_lab::analysis::analyze_campaign;
use casimir_lab::protocol::{campaign_schedule, SampleKind, TripletPosition};
use casimir_lab::{AnalysisOptions, CampaignAnalysis, SweepLabel, SweepTrace, TripletRecord};
use rayon::prelude::*;

use crate::error::CliError;
use crate::format::{fmt_f64, read_sweep_points, sweep_file_name, write_table};
use crate::manifest::{FileEntry, Manifest, ANALYSIS_MANIFEST, DATASET_MANIFEST};
use crate::unix_now;

pub const SHIFTS_CSV: &str = "shifts.csv";
pub const FITS_CSV: &str = "fits.csv";
pub const DIFFERENTIAL_CSV: &str = "differential.csv";
pub const NODES_CSV: &str = "differential_nodes.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

pub const SHIFTS_HEADER: [&str; 11] = [
    "sample_id",
    "kind",
    "field_mT",
    "replication",
    "t_start_s",
    "tc0_K",
    "delta_t",
    "sigma_delta_t",
    "shift_uK",
    "sigma_uK",
    "n_levels",
];
pub const FITS_HEADER: [&str; 16] = [
    "sample_id",
    "kind",
    "tc0_K",
    "tc0_drift_uK_per_hr",
    "n_zero_field_sweeps",
    "sensitivity_uK",
    "status",
    "field_threshold_mT",
    "include_linear",
    "n_points",
    "a_per_mT2",
    "b_per_mT",
    "cov_aa",
    "cov_ab",
    "cov_bb",
    "rms_residual",
];
pub const DIFFERENTIAL_HEADER: [&str; 3] = ["field_mT", "gap_uK", "sigma_uK"];
pub const NODES_HEADER: [&str; 8] = [
    "field_mT",
    "n_estimates",
    "cavity_delta_t",
    "cavity_sigma_delta_t",
    "gap_uK",
    "sigma_uK",
    "pooled_gap_uK",
    "pooled_sigma_uK",
];

/// Command-line overrides of the manifest's `[analysis]` section.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AnalyzeOverrides {
    pub fit_threshold_mt: Option<f64>,
    pub include_linear: bool,
}

/// Reads every triplet listed in a dataset directory. Fails with the list
/// of incomplete triplets if any scheduled sweep is absent.
pub fn load_dataset(in_dir: &Path) -> Result<(Manifest, Vec<TripletRecord>), CliError> {
    let manifest = Manifest::read(&in_dir.join(DATASET_MANIFEST))?;
    if manifest.command != "simulate" {
        return Err(CliError::Data(format!(
            "{} was written by `{}`, not `simulate`",
            in_dir.join(DATASET_MANIFEST).display(),
            manifest.command
        )));
    }
    manifest.config.validate()?;
    let campaign = manifest.config.campaign_config();

    let listed: HashMap<&str, &FileEntry> = manifest
        .files
        .iter()
        .filter(|e| e.sweep.is_some())
        .map(|e| (e.path.as_str(), e))
        .collect();

    let mut missing = Vec::new();
    let mut wanted = Vec::new();
    for s in campaign_schedule(&campaign) {
        let id = campaign.sample_id(s.kind);
        let mut absent = Vec::new();
        let mut entries = Vec::new();
        for pos in TripletPosition::ALL {
            let path = format!(
                "{}/{}",
                crate::simulate::SWEEP_DIR,
                sweep_file_name(id, s.kind, s.field_mt, s.replication, pos)
            );
            match listed.get(path.as_str()) {
                Some(e) if in_dir.join(&e.path).is_file() => entries.push(*e),
                _ => absent.push(pos.as_str()),
            }
        }
        if absent.is_empty() {
            wanted.push((s.field_mt, entries));
        } else {
            missing.push(format!(
                "{id} ({}) at {} mT, replication {}: missing {}",
                s.kind.as_str(),
                s.field_mt,
                s.replication,
                absent.join(", ")
            ));
        }
    }
    if !missing.is_empty() {
        return Err(CliError::IncompleteTriplet(missing));
    }

    let read = |e: &FileEntry| -> Result<SweepTrace, CliError> {
        let m = e.sweep.as_ref().expect("sweep entry");
        Ok(SweepTrace {
            label: SweepLabel {
                sample_id: m.sample_id.clone(),
                kind: m.kind,
                field_mt: m.field_mt,
                replication: m.replication,
                position: m.position,
                t_start_s: m.t_start_s,
            },
            points: read_sweep_points(&in_dir.join(&e.path))?,
        })
    };
    let triplets = wanted
        .par_iter()
        .map(|(h, e)| {
            Ok(TripletRecord {
                pre: read(e[0])?,
                mid: read(e[1])?,
                post: read(e[2])?,
                field_mt: *h,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((manifest, triplets))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn shift_rows(result: &CampaignAnalysis) -> Vec<Vec<String>> {
    result
        .shifts
        .iter()
        .map(|s| {
            let e = &s.estimate;
            let tc0 = result
                .samples
                .iter()
                .find(|m| m.sample_id == e.sample_id)
                .map_or(f64::NAN, |m| m.tc0_k);
            vec![
                e.sample_id.clone(),
                s.kind.as_str().to_string(),
                fmt_f64(e.field_mt),
                s.replication.to_string(),
                fmt_f64(s.t_start_s),
                fmt_f64(tc0),
                fmt_f64(e.delta_t),
                fmt_f64(e.sigma_delta_t),
                fmt_f64(e.shift_uk(tc0)),
                fmt_f64(e.sigma_uk(tc0)),
                e.n_levels.to_string(),
            ]
        })
        .collect()
}

fn fit_rows(result: &CampaignAnalysis) -> Vec<Vec<String>> {
    result
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![
                s.sample_id.clone(),
                s.kind.as_str().to_string(),
                fmt_f64(s.tc0_k),
                opt(s.tc0_drift_uk_per_hr),
                s.n_zero_field_sweeps.to_string(),
                opt(s.sensitivity_uk),
            ];
            match &s.fit {
                Some(f) => row.extend([
                    "ok".to_string(),
                    fmt_f64(f.field_threshold_mt),
                    f.include_linear.to_string(),
                    f.n_points.to_string(),
                    fmt_f64(f.a),
                    fmt_f64(f.b),
                    fmt_f64(f.covariance[0][0]),
                    fmt_f64(f.covariance[0][1]),
                    fmt_f64(f.covariance[1][1]),
                    fmt_f64(f.rms_residual),
                ]),
                None => {
                    row.push(s.fit_error.clone().unwrap_or_else(|| "no fit".into()));
                    row.extend(std::iter::repeat_n(String::new(), 9));
                }
            }
            row
        })
        .collect()
}

fn summary_text(result: &CampaignAnalysis, options: &AnalysisOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "casimir-lab analysis");
    match result.fit_threshold_mt {
        Some(th) => {
            let _ = writeln!(out, "high-field threshold: |H| >= {th:.4} mT");
        }
        None => {
            let _ = writeln!(out, "high-field threshold: none");
        }
    }
    for s in &result.samples {
        let _ = write!(
            out,
            "{} ({}): Tc0 = {:.7} K",
            s.sample_id,
            s.kind.as_str(),
            s.tc0_k
        );
        if let Some(d) = s.tc0_drift_uk_per_hr {
            let _ = write!(out, ", thermometer drift = {d:.2} uK/hr");
        }
        if let Some(sens) = s.sensitivity_uk {
            let _ = write!(out, ", sensitivity = {sens:.3} uK");
        }
        match &s.fit {
            Some(f) => {
                let _ = write!(out, ", a = {:.6e} +/- {:.2e} /mT^2", f.a, f.sigma_a());
                if f.include_linear {
                    let _ = write!(out, ", b = {:.6e} +/- {:.2e} /mT", f.b, f.sigma_b());
                }
                let _ = write!(out, " ({} points)", f.n_points);
            }
            None => {
                let _ = write!(out, ", fit: {}", s.fit_error.as_deref().unwrap_or("none"));
            }
        }
        out.push('\n');
    }
    match (&result.differential, &result.differential_error) {
        (Some(d), _) => {
            let _ = writeln!(
                out,
                "max_gap = {:.3} +/- {:.3} uK at {:.4} mT ({:.2} sigma, smoothing half-width {})",
                d.max_gap_uk,
                d.sigma_max_gap_uk,
                d.field_at_max_mt,
                d.significance(),
                options.smoothing_half_width
            );
        }
        (None, Some(e)) => {
            let _ = writeln!(out, "max_gap: unavailable ({e})");
        }
        (None, None) => {
            let _ = writeln!(out, "max_gap: unavailable");
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub result: CampaignAnalysis,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Analyzes the dataset in `in_dir` and writes the tables to `out_dir`.
pub fn analyze(
    in_dir: &Path,
    out_dir: &Path,
    overrides: AnalyzeOverrides,
) -> Result<AnalyzeOutput, CliError> {
    let started = unix_now();
    let clock = Instant::now();
    let (dataset_manifest, triplets) = load_dataset(in_dir)?;
    let mut options = dataset_manifest.config.analysis;
    if overrides.fit_threshold_mt.is_some() {
        options.fit_threshold_mt = overrides.fit_threshold_mt;
    }
    options.include_linear |= overrides.include_linear;
    let result = analyze_campaign(&triplets, &options)?;

    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    write_table(&out_dir.join(SHIFTS_CSV), &SHIFTS_HEADER, &shift_rows(&result))?;
    write_table(&out_dir.join(FITS_CSV), &FITS_HEADER, &fit_rows(&result))?;
    let (grid, nodes) = match &result.differential {
        Some(d) => (
            d.grid
                .iter()
                .map(|g| vec![fmt_f64(g.field_mt), fmt_f64(g.gap_uk), fmt_f64(g.sigma_uk)])
                .collect(),
            d.nodes
                .iter()
                .map(|n| {
                    vec![
                        fmt_f64(n.field_mt),
                        n.n_estimates.to_string(),
                        fmt_f64(n.cavity_delta_t),
                        fmt_f64(n.cavity_sigma_delta_t),
                        fmt_f64(n.gap_uk),
                        fmt_f64(n.sigma_uk),
                        fmt_f64(n.pooled_gap_uk),
                        fmt_f64(n.pooled_sigma_uk),
                    ]
                })
                .collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    write_table(&out_dir.join(DIFFERENTIAL_CSV), &DIFFERENTIAL_HEADER, &grid)?;
    write_table(&out_dir.join(NODES_CSV), &NODES_HEADER, &nodes)?;
    let summary = summary_text(&result, &options);
    let summary_path = out_dir.join(SUMMARY_TXT);
    std::fs::write(&summary_path, &summary).map_err(CliError::io(&summary_path))?;

    let mut manifest = Manifest::new(
        "analyze",
        dataset_manifest.config.clone(),
        dataset_manifest.thermal_enhancement,
    );
    manifest.seed = dataset_manifest.seed;
    manifest.analysis = Some(options);
    manifest.source_dir = Some(display_dir(in_dir));
    manifest.inputs = std::iter::once(FileEntry::new(DATASET_MANIFEST, "dataset-manifest"))
        .chain(
            dataset_manifest
                .files
                .iter()
                .filter(|e| e.sweep.is_some())
                .map(|e| FileEntry::new(e.path.clone(), "sweep")),
        )
        .collect();
    let outputs = [
        (SHIFTS_CSV, "shifts"),
        (FITS_CSV, "fits"),
        (DIFFERENTIAL_CSV, "differential"),
        (NODES_CSV, "differential-nodes"),
        (SUMMARY_TXT, "summary"),
        (ANALYSIS_MANIFEST, "manifest"),
    ];
    manifest.files = outputs.iter().map(|(p, r)| FileEntry::new(*p, r)).collect();
    manifest.runtime.started_unix_s = started;
    manifest.runtime.elapsed_s = clock.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(ANALYSIS_MANIFEST))?;

    Ok(AnalyzeOutput {
        result,
        summary,
        files: outputs.iter().map(|(p, _)| out_dir.join(p)).collect(),
    })
}

pub(crate) fn display_dir(dir: &Path) -> String {
    dir.canonicalize()
        .unwrap_or_else(|_| dir.to_path_buf())
        .display()
        .to_string()
}

pub(crate) fn kind_of(name: &str) -> Option<SampleKind> {
    match name {
        "film" => Some(SampleKind::Film),
        "cavity" => Some(SampleKind::Cavity),
        _ => None,
    }
}
