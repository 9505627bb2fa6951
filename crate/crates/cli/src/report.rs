use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use casimir_lab::num::units;
use casimir_lab::protocol::{SampleKind, TripletPosition};
use serde::Deserialize;

use crate::analyze::{display_dir, kind_of, FITS_CSV, SHIFTS_CSV};
use crate::error::CliError;
use crate::format::{fmt_f64, read_sweep_points, sweep_file_name, write_table};
use crate::manifest::{FileEntry, Manifest, ANALYSIS_MANIFEST, DATASET_MANIFEST, REPORT_MANIFEST};
use crate::simulate::SWEEP_DIR;
use crate::unix_now;

pub const PARABOLA_CSV: &str = "fig_parabola.csv";
pub const TRIPLET_CSV: &str = "fig_triplet.csv";
pub const THERMAL_CSV: &str = "fig_thermal.csv";

pub const PARABOLA_HEADER: [&str; 6] = ["sample_id", "kind", "series", "field_mT", "shift_uK", "sigma_uK"];
pub const TRIPLET_HEADER: [&str; 7] = [
    "sample_id",
    "field_mT",
    "replication",
    "position",
    "tau_s",
    "T_meas_K",
    "R_meas_ohm",
];
pub const THERMAL_HEADER: [&str; 10] = [
    "field_mT",
    "n_replications",
    "film_shift_uK",
    "film_sigma_uK",
    "cavity_shift_uK",
    "cavity_sigma_uK",
    "film_fit_uK",
    "gap_uK",
    "gap_sigma_uK",
    "thermal_enhancement",
];

/// Field whose triplet is shown in `fig_triplet.csv` (nearest configured).
pub const TRIPLET_FIELD_MT: f64 = 7.2;
const CURVE_SAMPLES: usize = 201;

#[derive(Debug, Clone, Deserialize)]
struct ShiftRow {
    sample_id: String,
    kind: String,
    #[serde(rename = "field_mT")]
    field_mt: f64,
    #[serde(rename = "shift_uK")]
    shift_uk: f64,
    #[serde(rename = "sigma_uK")]
    sigma_uk: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct FitRow {
    sample_id: String,
    kind: String,
    #[serde(rename = "tc0_K")]
    tc0_k: f64,
    status: String,
    #[serde(rename = "a_per_mT2")]
    a_per_mt2: Option<f64>,
    #[serde(rename = "b_per_mT")]
    b_per_mt: Option<f64>,
    cov_aa: Option<f64>,
    cov_ab: Option<f64>,
    cov_bb: Option<f64>,
}

impl FitRow {
    /// (shift, σ) in μK at `h`, when the fit succeeded.
    fn curve(&self, h: f64) -> Option<(f64, f64)> {
        let (a, b) = (self.a_per_mt2?, self.b_per_mt?);
        let (caa, cab, cbb) = (self.cov_aa?, self.cov_ab?, self.cov_bb?);
        let var = h.powi(4) * caa + 2.0 * h.powi(3) * cab + h * h * cbb;
        Some((
            units::k_to_uk((a * h * h + b * h) * self.tc0_k),
            units::k_to_uk(var.max(0.0).sqrt() * self.tc0_k),
        ))
    }
}

fn read_rows<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>, CliError> {
    let mut r =
        csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| row.map_err(|e| CliError::Data(format!("{}: {e}", path.display()))))
        .collect()
}

fn parabola_rows(shifts: &[ShiftRow], fits: &[FitRow]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in shifts {
        rows.push(vec![
            s.sample_id.clone(),
            s.kind.clone(),
            "point".into(),
            fmt_f64(s.field_mt),
            fmt_f64(s.shift_uk),
            fmt_f64(s.sigma_uk),
        ]);
    }
    let h_max = shifts.iter().map(|s| s.field_mt.abs()).fold(0.0, f64::max);
    let h_min = if shifts.iter().any(|s| s.field_mt < 0.0) {
        -h_max
    } else {
        0.0
    };
    for f in fits.iter().filter(|f| f.status == "ok") {
        for k in 0..CURVE_SAMPLES {
            let h = h_min + (h_max - h_min) * k as f64 / (CURVE_SAMPLES - 1) as f64;
            if let Some((y, s)) = f.curve(h) {
                rows.push(vec![
                    f.sample_id.clone(),
                    f.kind.clone(),
                    "fit".into(),
                    fmt_f64(h),
                    fmt_f64(y),
                    fmt_f64(s),
                ]);
            }
        }
        for s in shifts.iter().filter(|s| s.sample_id == f.sample_id) {
            if let Some((y, _)) = f.curve(s.field_mt) {
                rows.push(vec![
                    s.sample_id.clone(),
                    s.kind.clone(),
                    "residual".into(),
                    fmt_f64(s.field_mt),
                    fmt_f64(s.shift_uk - y),
                    fmt_f64(s.sigma_uk),
                ]);
            }
        }
    }
    rows
}

/// Mean and standard error of a group of estimates.
fn mean_sem(xs: &[&ShiftRow]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|s| s.shift_uk).sum::<f64>() / n;
    let sem = if xs.len() >= 2 {
        let var = xs.iter().map(|s| (s.shift_uk - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        xs[0].sigma_uk
    };
    (mean, sem)
}

fn thermal_rows(shifts: &[ShiftRow], fits: &[FitRow], m: f64) -> Vec<Vec<String>> {
    let mut by_field: BTreeMap<u64, (f64, Vec<&ShiftRow>, Vec<&ShiftRow>)> = BTreeMap::new();
    for s in shifts {
        // Order-preserving key for signed fields.
        let bits = s.field_mt.to_bits();
        let key = if s.field_mt.is_sign_negative() {
            !bits
        } else {
            bits | (1 << 63)
        };
        let entry = by_field
            .entry(key)
            .or_insert((s.field_mt, Vec::new(), Vec::new()));
        match kind_of(&s.kind) {
            Some(SampleKind::Film) => entry.1.push(s),
            Some(SampleKind::Cavity) => entry.2.push(s),
            None => {}
        }
    }
    let film_fit = fits.iter().find(|f| f.kind == "film" && f.status == "ok");
    by_field
        .values()
        .filter(|(_, film, cavity)| !film.is_empty() && !cavity.is_empty())
        .map(|(h, film, cavity)| {
            let (fm, fs) = mean_sem(film);
            let (cm, cs) = mean_sem(cavity);
            vec![
                fmt_f64(*h),
                film.len().min(cavity.len()).to_string(),
                fmt_f64(fm),
                fmt_f64(fs),
                fmt_f64(cm),
                fmt_f64(cs),
                film_fit
                    .and_then(|f| f.curve(*h))
                    .map(|(y, _)| fmt_f64(y))
                    .unwrap_or_default(),
                fmt_f64(fm - cm),
                fmt_f64(fs.hypot(cs)),
                fmt_f64(m),
            ]
        })
        .collect()
}

/// Writes plot-ready tables for the analysis in `in_dir` to `out_dir`.
pub fn report(in_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let started = unix_now();
    let clock = Instant::now();
    let analysis = Manifest::read(&in_dir.join(ANALYSIS_MANIFEST))?;
    if analysis.command != "analyze" {
        return Err(CliError::Data(format!(
            "{} was written by `{}`, not `analyze`",
            in_dir.join(ANALYSIS_MANIFEST).display(),
            analysis.command
        )));
    }
    let dataset_dir = PathBuf::from(
        analysis
            .source_dir
            .clone()
            .ok_or_else(|| CliError::Data("analysis manifest names no dataset directory".into()))?,
    );
    let shifts: Vec<ShiftRow> = read_rows(&in_dir.join(SHIFTS_CSV))?;
    let fits: Vec<FitRow> = read_rows(&in_dir.join(FITS_CSV))?;

    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    write_table(
        &out_dir.join(PARABOLA_CSV),
        &PARABOLA_HEADER,
        &parabola_rows(&shifts, &fits),
    )?;

    let config = &analysis.config;
    let field = config
        .campaign
        .fields_mt
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - TRIPLET_FIELD_MT)
                .abs()
                .total_cmp(&(b - TRIPLET_FIELD_MT).abs())
        })
        .ok_or_else(|| CliError::Data("campaign has no fields".into()))?;
    let film_id = &config.campaign.film_sample_id;
    let mut triplet_rows = Vec::new();
    let mut sweep_inputs = Vec::new();
    for pos in TripletPosition::ALL {
        let rel = format!(
            "{SWEEP_DIR}/{}",
            sweep_file_name(film_id, SampleKind::Film, field, 0, pos)
        );
        for p in read_sweep_points(&dataset_dir.join(&rel))? {
            triplet_rows.push(vec![
                film_id.clone(),
                fmt_f64(field),
                "0".into(),
                pos.as_str().into(),
                fmt_f64(p.tau_s),
                fmt_f64(p.t_meas_k),
                fmt_f64(p.r_meas_ohm),
            ]);
        }
        sweep_inputs.push(FileEntry::new(rel, "triplet-sweep"));
    }
    write_table(&out_dir.join(TRIPLET_CSV), &TRIPLET_HEADER, &triplet_rows)?;

    let m = analysis.thermal_enhancement.unwrap_or(1.0);
    write_table(
        &out_dir.join(THERMAL_CSV),
        &THERMAL_HEADER,
        &thermal_rows(&shifts, &fits, m),
    )?;

    let mut manifest = Manifest::new("report", analysis.config.clone(), analysis.thermal_enhancement);
    manifest.seed = analysis.seed;
    manifest.analysis = analysis.analysis;
    manifest.source_dir = Some(display_dir(in_dir));
    manifest.inputs = [
        FileEntry::new(ANALYSIS_MANIFEST, "analysis-manifest"),
        FileEntry::new(SHIFTS_CSV, "shifts"),
        FileEntry::new(FITS_CSV, "fits"),
        FileEntry::new(DATASET_MANIFEST, "dataset-manifest"),
    ]
    .into_iter()
    .chain(sweep_inputs)
    .collect();
    let outputs = [
        (PARABOLA_CSV, "fig-parabola"),
        (TRIPLET_CSV, "fig-triplet"),
        (THERMAL_CSV, "fig-thermal"),
        (REPORT_MANIFEST, "manifest"),
    ];
    manifest.files = outputs.iter().map(|(p, r)| FileEntry::new(*p, r)).collect();
    manifest.runtime.started_unix_s = started;
    manifest.runtime.elapsed_s = clock.elapsed().as_secs_f64();
    manifest.write(&out_dir.join(REPORT_MANIFEST))?;
    Ok(outputs.iter().map(|(p, _)| out_dir.join(p)).collect())
}
