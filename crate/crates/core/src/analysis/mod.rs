//! Inverse pipeline: zero-field Tc0 extraction, monotone trace inversion,
//! the level-averaged shift estimator, triplet drift correction, weighted
//! parabola fits, the film–cavity differential signal, and sensitivity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

pub mod campaign;
pub mod differential;
pub mod estimator;
pub mod fit;
pub mod inversion;
pub mod isotonic;

pub use campaign::{analyze_campaign, CampaignAnalysis, SampleSummary, TripletShift};
pub use differential::{differential_signal, DifferentialSignal, GapNode, GapPoint};
pub use estimator::{drift_corrected_shift, estimate_sensitivity, estimate_shift, ShiftEstimate};
pub use fit::{fit_parabola, FitResult};
pub use inversion::{extract_tc0, invert_trace, normal_resistance, InversionTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trace does not span the full transition: {0}")]
    IncompleteTransition(String),
    #[error("trace is not invertible: monotonization pooled {discarded_percent:.1}% of points")]
    NonMonotonic { discarded_percent: f64 },
    #[error("resistance level {level_ohm} Ω is outside the inverted range")]
    LevelOutOfRange { level_ohm: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("invalid analysis option: {0}")]
    InvalidOption(String),
}

/// Tunables of the estimation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions<T> {
    /// Number of resistance levels in (0.2, 0.8)·R_N averaged by the estimator.
    pub n_levels: usize,
    /// Level correlation divisor: n_eff = n_levels / level_correlation.
    pub level_correlation: T,
    /// Local-regression window for dR/dT, as a fraction of the trace length.
    pub tc0_window_fraction: T,
    /// Largest fraction of points monotonization may pool before the trace
    /// is declared non-invertible.
    pub max_pooled_fraction: T,
    /// Explicit lower |H| bound for the film parabola fit (mT).
    pub fit_threshold_mt: Option<T>,
    /// Without an explicit threshold, fields whose film shift is at least
    /// this multiple of the sensitivity qualify as high-field.
    pub threshold_sensitivity_multiple: T,
    pub include_linear: bool,
    /// Neighbouring field nodes on each side pooled when locating the
    /// maximum film–cavity gap (0 = raw nodes).
    pub smoothing_half_width: usize,
    pub grid_points: usize,
}

impl<T: Scalar> Default for AnalysisOptions<T> {
    fn default() -> Self {
        Self {
            n_levels: 50,
            level_correlation: T::lit(2.0),
            tc0_window_fraction: T::lit(0.05),
            max_pooled_fraction: T::lit(0.3),
            fit_threshold_mt: None,
            threshold_sensitivity_multiple: T::lit(10.0),
            include_linear: false,
            smoothing_half_width: 1,
            grid_points: 201,
        }
    }
}

impl<T: Scalar> AnalysisOptions<T> {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidOption(m));
        if self.n_levels < estimator::MIN_LEVELS {
            return bad(format!(
                "n_levels = {} must be >= {}",
                self.n_levels,
                estimator::MIN_LEVELS
            ));
        }
        if !(self.level_correlation >= T::one()) {
            return bad(format!(
                "level_correlation = {} must be >= 1",
                self.level_correlation
            ));
        }
        if !(self.tc0_window_fraction > T::zero() && self.tc0_window_fraction < T::lit(0.5)) {
            return bad(format!(
                "tc0_window_fraction = {} must be in (0, 0.5)",
                self.tc0_window_fraction
            ));
        }
        if !(self.max_pooled_fraction > T::zero() && self.max_pooled_fraction <= T::one()) {
            return bad("max_pooled_fraction must be in (0, 1]".into());
        }
        if let Some(t) = self.fit_threshold_mt {
            if !(t >= T::zero()) {
                return bad(format!("fit_threshold_mt = {t} must be >= 0"));
            }
        }
        if self.grid_points < 2 {
            return bad("grid_points must be >= 2".into());
        }
        Ok(())
    }
}
