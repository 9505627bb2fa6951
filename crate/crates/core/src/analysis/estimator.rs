//! Level-averaged shift estimator and its drift-corrected triplet form.

use serde::{Deserialize, Serialize};

use super::inversion::{invert_at_levels, normal_resistance, LEVEL_BAND};
use super::{AnalysisError, AnalysisOptions};
use crate::num::{mean, sample_std, units, Scalar};
use crate::protocol::{SweepTrace, TripletRecord};

pub const MIN_LEVELS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimate<T> {
    pub sample_id: String,
    /// Nominal applied field (mT).
    pub field_mt: T,
    /// Reduced shift δt.
    pub delta_t: T,
    pub sigma_delta_t: T,
    pub n_levels: usize,
}

impl<T: Scalar> ShiftEstimate<T> {
    /// δt·Tc0 in μK.
    pub fn shift_uk(&self, tc0_k: T) -> T {
        units::k_to_uk(self.delta_t * tc0_k)
    }

    pub fn sigma_uk(&self, tc0_k: T) -> T {
        units::k_to_uk(self.sigma_delta_t * tc0_k)
    }
}

/// Even grid of `n` resistance levels strictly inside (0.2, 0.8)·R_N
/// (midpoints of `n` equal sub-intervals).
pub fn resistance_levels<T: Scalar>(rn_ohm: T, n: usize) -> Vec<T> {
    let (lo, hi) = (T::lit(LEVEL_BAND.0), T::lit(LEVEL_BAND.1));
    let nn = T::from_usize_lossy(n);
    (0..n)
        .map(|k| rn_ohm * (lo + (hi - lo) * (T::from_usize_lossy(k) + T::lit(0.5)) / nn))
        .collect()
}

/// δt = mean over resistance levels of [T(R, 0) − T(R, H)] / Tc0.
///
/// The standard error uses n_eff = n_levels / level_correlation, since
/// neighbouring levels interpolate between the same readings.
pub fn estimate_shift<T: Scalar>(
    zero: &SweepTrace<T>,
    field: &SweepTrace<T>,
    tc0_k: T,
    options: &AnalysisOptions<T>,
) -> Result<ShiftEstimate<T>, AnalysisError> {
    options.validate()?;
    if !(tc0_k > T::zero()) {
        return Err(AnalysisError::InvalidOption(format!(
            "Tc0 = {tc0_k} K must be > 0"
        )));
    }
    let levels = resistance_levels(normal_resistance(zero), options.n_levels);
    let t0 = invert_at_levels(zero, &levels, options.max_pooled_fraction)?;
    let th = invert_at_levels(field, &levels, options.max_pooled_fraction)?;
    let diffs: Vec<T> = t0
        .temperatures_k
        .iter()
        .zip(&th.temperatures_k)
        .map(|(&a, &b)| a - b)
        .collect();
    let n_eff = T::from_usize_lossy(options.n_levels) / options.level_correlation;
    Ok(ShiftEstimate {
        sample_id: field.label.sample_id.clone(),
        field_mt: field.label.field_mt,
        delta_t: mean(&diffs) / tc0_k,
        sigma_delta_t: sample_std(&diffs) / n_eff.sqrt() / tc0_k,
        n_levels: options.n_levels,
    })
}

/// Average of the pre→mid and post→mid estimates. A thermometer drift that
/// is linear in time cancels exactly for a symmetric schedule; the two
/// uncertainties are combined in quadrature.
pub fn drift_corrected_shift<T: Scalar>(
    triplet: &TripletRecord<T>,
    tc0_k: T,
    options: &AnalysisOptions<T>,
) -> Result<ShiftEstimate<T>, AnalysisError> {
    let (before, after) = one_sided_shifts(triplet, tc0_k, options)?;
    let two = T::lit(2.0);
    Ok(ShiftEstimate {
        delta_t: (before.delta_t + after.delta_t) / two,
        sigma_delta_t: before.sigma_delta_t.hypot(after.sigma_delta_t) / two,
        ..before
    })
}

/// The two uncorrected estimates of a triplet: (pre vs mid, post vs mid).
pub fn one_sided_shifts<T: Scalar>(
    triplet: &TripletRecord<T>,
    tc0_k: T,
    options: &AnalysisOptions<T>,
) -> Result<(ShiftEstimate<T>, ShiftEstimate<T>), AnalysisError> {
    Ok((
        estimate_shift(&triplet.pre, &triplet.mid, tc0_k, options)?,
        estimate_shift(&triplet.post, &triplet.mid, tc0_k, options)?,
    ))
}

/// Sample standard deviation of δt·Tc0 (μK) across repeated estimates
/// taken under identical conditions.
pub fn estimate_sensitivity<T: Scalar>(repeats: &[ShiftEstimate<T>], tc0_k: T) -> Result<T, AnalysisError> {
    if repeats.len() < 3 {
        return Err(AnalysisError::InsufficientData(format!(
            "sensitivity needs at least 3 repeats, got {}",
            repeats.len()
        )));
    }
    let shifts: Vec<T> = repeats.iter().map(|e| e.shift_uk(tc0_k)).collect();
    Ok(sample_std(&shifts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{FilmParams, Sample};
    use crate::protocol::{generate_sweep, NoiseModel, SampleKind, SweepLabel, TripletPosition};

    fn trace(h: f64, noise: &NoiseModel<f64>, seed: u64) -> SweepTrace<f64> {
        let label = SweepLabel {
            sample_id: "F1".into(),
            kind: SampleKind::Film,
            field_mt: h,
            replication: 0,
            position: TripletPosition::Mid,
            t_start_s: 0.0,
        };
        generate_sweep(
            label,
            &Sample::Film(FilmParams::default()),
            h,
            noise,
            1200.0,
            1200,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn identical_traces_give_zero() {
        let t = trace(0.0, &NoiseModel::default(), 3);
        let e = estimate_shift(&t, &t, 1.5, &AnalysisOptions::default()).unwrap();
        assert_eq!(e.delta_t, 0.0);
        assert_eq!(e.sigma_delta_t, 0.0);
        assert_eq!(e.n_levels, 50);
    }

    #[test]
    fn translation_is_recovered_exactly() {
        let t = trace(0.0, &NoiseModel::default(), 3);
        let shifted = t.translated(-37e-6);
        let e = estimate_shift(&t, &shifted, 1.5, &AnalysisOptions::default()).unwrap();
        assert!((e.delta_t - 37e-6 / 1.5).abs() < 1e-13);
    }

    #[test]
    fn calibrated_noiseless_shift_is_81_uk() {
        let q = NoiseModel::noiseless(0);
        let e = estimate_shift(
            &trace(0.0, &q, 1),
            &trace(7.2, &q, 2),
            1.5,
            &AnalysisOptions::default(),
        )
        .unwrap();
        assert!((e.shift_uk(1.5) - 81.0).abs() < 1e-6, "{}", e.shift_uk(1.5));
    }

    #[test]
    fn levels_sit_inside_band() {
        let lv = resistance_levels(300.0f64, 50);
        assert_eq!(lv.len(), 50);
        assert!(lv[0] > 60.0 && lv[49] < 240.0);
        assert!((lv[0] - 61.8).abs() < 1e-12);
    }

    #[test]
    fn too_few_levels_rejected() {
        let t = trace(0.0, &NoiseModel::noiseless(0), 1);
        let opts = AnalysisOptions {
            n_levels: 9,
            ..AnalysisOptions::default()
        };
        assert!(matches!(
            estimate_shift(&t, &t, 1.5, &opts),
            Err(AnalysisError::InvalidOption(_))
        ));
    }

    #[test]
    fn sensitivity_needs_three_and_is_zero_for_identical() {
        let e = ShiftEstimate {
            sample_id: "F1".into(),
            field_mt: 7.2,
            delta_t: 5e-5,
            sigma_delta_t: 1e-6,
            n_levels: 50,
        };
        assert!(estimate_sensitivity(&[e.clone(), e.clone()], 1.5).is_err());
        assert_eq!(
            estimate_sensitivity(&[e.clone(), e.clone(), e], 1.5).unwrap(),
            0.0
        );
    }
}
