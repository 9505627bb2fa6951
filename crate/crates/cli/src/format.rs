//! On-disk formats: sweep CSVs, file naming and float serialization.

use std::path::Path;

use casimir_lab::protocol::{SampleKind, TripletPosition};
use casimir_lab::{SweepPoint, SweepTrace};

use crate::error::CliError;

pub const SWEEP_HEADER: [&str; 3] = ["tau_s", "T_meas_K", "R_meas_ohm"];

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Signed field rounded to whole μT, e.g. `p007200uT` or `m003636uT`.
pub fn field_tag(field_mt: f64) -> String {
    let ut = (field_mt * 1000.0).round() as i64;
    let sign = if ut < 0 { 'm' } else { 'p' };
    format!("{sign}{:06}uT", ut.unsigned_abs())
}

/// `<sample>_<kind>_<field>_rep<NNN>_<position>.csv`, where `field` is the
/// triplet's nominal field (the outer zero-field sweeps carry it too).
pub fn sweep_file_name(
    sample_id: &str,
    kind: SampleKind,
    triplet_field_mt: f64,
    replication: usize,
    position: TripletPosition,
) -> String {
    format!(
        "{sample_id}_{}_{}_rep{replication:03}_{}.csv",
        kind.as_str(),
        field_tag(triplet_field_mt),
        position.as_str()
    )
}

pub fn write_sweep(path: &Path, trace: &SweepTrace) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_HEADER)?;
    for p in &trace.points {
        w.write_record([fmt_f64(p.tau_s), fmt_f64(p.t_meas_k), fmt_f64(p.r_meas_ohm)])?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn read_sweep_points(path: &Path) -> Result<Vec<SweepPoint>, CliError> {
    let mut r =
        csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(CliError::Data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            SWEEP_HEADER.join(","),
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|row| {
            let (tau_s, t_meas_k, r_meas_ohm): (f64, f64, f64) =
                row.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            Ok(SweepPoint {
                tau_s,
                t_meas_k,
                r_meas_ohm,
            })
        })
        .collect()
}

/// Writes a header plus rows of preformatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(CliError::io(path))
}
