//! Whole-campaign analysis: per-sample Tc0, per-triplet shifts, sensitivity,
//! film and cavity parabola fits, and the film–cavity differential signal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    differential_signal, drift_corrected_shift, estimate_sensitivity, extract_tc0, fit_parabola,
    AnalysisError, AnalysisOptions, DifferentialSignal, FitResult, ShiftEstimate,
};
use crate::num::{mean, units, Scalar};
use crate::protocol::{SampleKind, SweepTrace, TripletRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletShift<T> {
    pub kind: SampleKind,
    pub replication: usize,
    pub t_start_s: T,
    pub estimate: ShiftEstimate<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary<T> {
    pub sample_id: String,
    pub kind: SampleKind,
    /// Tc0 referred to the campaign clock origin (K): the intercept of the
    /// per-sweep zero-field Tc0 values regressed on their crossing times.
    pub tc0_k: T,
    /// Slope of that regression (μK per hour); `None` when all zero-field
    /// sweeps cross at the same time.
    pub tc0_drift_uk_per_hr: Option<T>,
    pub n_zero_field_sweeps: usize,
    /// Pooled replicate scatter of δt·Tc0 (μK); `None` without ≥ 3 repeats
    /// at any field.
    pub sensitivity_uk: Option<T>,
    pub fit: Option<FitResult<T>>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignAnalysis<T> {
    pub samples: Vec<SampleSummary<T>>,
    pub shifts: Vec<TripletShift<T>>,
    /// |H| threshold used for the parabola fits (mT).
    pub fit_threshold_mt: Option<T>,
    pub differential: Option<DifferentialSignal<T>>,
    pub differential_error: Option<String>,
}

impl<T: Scalar> CampaignAnalysis<T> {
    pub fn sample(&self, kind: SampleKind) -> Option<&SampleSummary<T>> {
        self.samples.iter().find(|s| s.kind == kind)
    }

    pub fn estimates_for(&self, sample_id: &str) -> Vec<ShiftEstimate<T>> {
        self.shifts
            .iter()
            .filter(|s| s.estimate.sample_id == sample_id)
            .map(|s| s.estimate.clone())
            .collect()
    }
}

/// Least-squares line through (time, Tc0) pairs: (intercept at t = 0, slope).
/// Falls back to the mean when the times do not spread.
fn tc0_at_origin<T: Scalar>(samples: &[(T, T)]) -> (T, Option<T>) {
    let ts: Vec<T> = samples.iter().map(|s| s.0).collect();
    let vs: Vec<T> = samples.iter().map(|s| s.1).collect();
    let (tm, vm) = (mean(&ts), mean(&vs));
    let sxx = ts.iter().fold(T::zero(), |a, &t| a + (t - tm) * (t - tm));
    let sxy = samples
        .iter()
        .fold(T::zero(), |a, &(t, v)| a + (t - tm) * (v - vm));
    let spread = ts.iter().fold(T::zero(), |m, &t| m.max((t - tm).abs()));
    if samples.len() < 2 || !(spread > T::epsilon() * (T::one() + tm.abs()) * T::lit(1e3)) {
        return (vm, None);
    }
    let slope = sxy / sxx;
    (vm - slope * tm, Some(slope))
}

/// Tc0 of one zero-field sweep and the campaign time at which the reading
/// closest to it was taken.
fn tc0_with_time<T: Scalar>(sweep: &SweepTrace<T>, window_fraction: T) -> Result<(T, T), AnalysisError> {
    let tc0 = extract_tc0(sweep, window_fraction)?;
    let nearest = sweep
        .points
        .iter()
        .min_by(|a, b| {
            (a.t_meas_k - tc0)
                .abs()
                .partial_cmp(&(b.t_meas_k - tc0).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map_or(T::zero(), |p| p.tau_s);
    Ok((sweep.label.t_start_s + nearest, tc0))
}

/// Groups estimates by exact field value, in ascending field order.
fn by_field<T: Scalar>(estimates: &[ShiftEstimate<T>]) -> Vec<(T, Vec<ShiftEstimate<T>>)> {
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| {
        a.field_mt
            .partial_cmp(&b.field_mt)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    sorted
        .chunk_by(|a, b| a.field_mt == b.field_mt)
        .map(|g| (g[0].field_mt, g.to_vec()))
        .collect()
}

/// Root-mean-square of the per-field replicate scatters.
pub fn pooled_sensitivity<T: Scalar>(estimates: &[ShiftEstimate<T>], tc0_k: T) -> Option<T> {
    let variances: Vec<T> = by_field(estimates)
        .iter()
        .filter_map(|(_, g)| estimate_sensitivity(g, tc0_k).ok())
        .map(|s| s * s)
        .collect();
    if variances.is_empty() {
        None
    } else {
        Some(mean(&variances).sqrt())
    }
}

/// Smallest |H| whose mean film shift reaches `multiple` × sensitivity.
fn high_field_threshold<T: Scalar>(
    film: &[ShiftEstimate<T>],
    tc0_k: T,
    sensitivity_uk: T,
    multiple: T,
) -> Option<T> {
    by_field(film)
        .iter()
        .filter(|(_, g)| {
            let shifts: Vec<T> = g.iter().map(|e| e.shift_uk(tc0_k)).collect();
            mean(&shifts) >= multiple * sensitivity_uk
        })
        .map(|(h, _)| h.abs())
        .fold(None, |m: Option<T>, h| Some(m.map_or(h, |m| m.min(h))))
}

/// Runs the full inverse pipeline over a campaign's triplets.
///
/// Each sample is normalized by its own zero-field sweeps. Film and cavity
/// samples are fitted above the same |H| threshold; the differential signal
/// compares the first film sample's fit with the first cavity sample's
/// estimates.
pub fn analyze_campaign<T: Scalar>(
    triplets: &[TripletRecord<T>],
    options: &AnalysisOptions<T>,
) -> Result<CampaignAnalysis<T>, AnalysisError> {
    options.validate()?;
    if triplets.is_empty() {
        return Err(AnalysisError::InsufficientData("no triplets".into()));
    }

    let mut sample_ids: Vec<(String, SampleKind)> = Vec::new();
    for t in triplets {
        if !sample_ids.iter().any(|(id, _)| id == t.sample_id()) {
            sample_ids.push((t.sample_id().to_string(), t.kind()));
        }
    }

    let tc0s = sample_ids
        .iter()
        .map(|(id, _)| {
            let zero_sweeps: Vec<_> = triplets
                .iter()
                .filter(|t| t.sample_id() == id)
                .flat_map(|t| [&t.pre, &t.post])
                .collect();
            let values = zero_sweeps
                .par_iter()
                .map(|s| tc0_with_time(s, options.tc0_window_fraction))
                .collect::<Result<Vec<(T, T)>, _>>()?;
            let (tc0, slope) = tc0_at_origin(&values);
            Ok((
                tc0,
                slope.map(|k_per_s| units::k_to_uk(k_per_s) * T::lit(units::SECONDS_PER_HOUR)),
                values.len(),
            ))
        })
        .collect::<Result<Vec<(T, Option<T>, usize)>, AnalysisError>>()?;
    let tc0_of = |id: &str| {
        let i = sample_ids.iter().position(|(s, _)| s == id).unwrap();
        tc0s[i].0
    };

    let shifts = triplets
        .par_iter()
        .map(|t| {
            Ok(TripletShift {
                kind: t.kind(),
                replication: t.replication(),
                t_start_s: t.pre.label.t_start_s,
                estimate: drift_corrected_shift(t, tc0_of(t.sample_id()), options)?,
            })
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;

    let estimates_of = |id: &str| -> Vec<ShiftEstimate<T>> {
        shifts
            .iter()
            .filter(|s| s.estimate.sample_id == id)
            .map(|s| s.estimate.clone())
            .collect()
    };

    let film_id = sample_ids
        .iter()
        .find(|(_, k)| *k == SampleKind::Film)
        .map(|(id, _)| id.clone());
    let cavity_id = sample_ids
        .iter()
        .find(|(_, k)| *k == SampleKind::Cavity)
        .map(|(id, _)| id.clone());

    let fit_threshold_mt = options.fit_threshold_mt.or_else(|| {
        let id = film_id.as_ref()?;
        let est = estimates_of(id);
        let tc0 = tc0_of(id);
        let sens = pooled_sensitivity(&est, tc0).unwrap_or_else(|| {
            let s: Vec<T> = est.iter().map(|e| e.sigma_uk(tc0)).collect();
            mean(&s)
        });
        high_field_threshold(&est, tc0, sens, options.threshold_sensitivity_multiple)
    });

    let samples: Vec<SampleSummary<T>> = sample_ids
        .iter()
        .zip(&tc0s)
        .map(|((id, kind), &(tc0, drift, n_zero))| {
            let est = estimates_of(id);
            let (fit, fit_error) = match fit_threshold_mt {
                Some(th) => match fit_parabola(&est, th, options.include_linear) {
                    Ok(f) => (Some(f), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                None => (None, Some("no field qualifies as high-field".to_string())),
            };
            SampleSummary {
                sample_id: id.clone(),
                kind: *kind,
                tc0_k: tc0,
                tc0_drift_uk_per_hr: drift,
                n_zero_field_sweeps: n_zero,
                sensitivity_uk: pooled_sensitivity(&est, tc0),
                fit,
                fit_error,
            }
        })
        .collect();

    let (differential, differential_error) = match (&film_id, &cavity_id) {
        (Some(f), Some(c)) => {
            let film = samples.iter().find(|s| &s.sample_id == f).unwrap();
            match &film.fit {
                Some(fit) => match differential_signal(
                    fit,
                    &estimates_of(c),
                    film.tc0_k,
                    options.smoothing_half_width,
                    options.grid_points,
                ) {
                    Ok(d) => (Some(d), None),
                    Err(e) => (None, Some(e.to_string())),
                },
                None => (None, Some("film fit unavailable".to_string())),
            }
        }
        _ => (
            None,
            Some("campaign needs both a film and a cavity sample".to_string()),
        ),
    };

    Ok(CampaignAnalysis {
        samples,
        shifts,
        fit_threshold_mt,
        differential,
        differential_error,
    })
}
