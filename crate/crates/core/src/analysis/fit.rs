//! Weighted least-squares fit of δt(H) = a·H² (+ b·H).

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ShiftEstimate};
use crate::linalg::inverse_sym2;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    /// Coefficient of H² (δt per mT²).
    pub a: T,
    /// Coefficient of H (δt per mT); zero when the linear term is off.
    pub b: T,
    /// Covariance of (a, b).
    pub covariance: [[T; 2]; 2],
    /// Root-mean-square residual in δt.
    pub rms_residual: T,
    pub n_points: usize,
    pub field_threshold_mt: T,
    pub include_linear: bool,
}

impl<T: Scalar> FitResult<T> {
    pub fn delta_t(&self, h_mt: T) -> T {
        self.a * h_mt * h_mt + self.b * h_mt
    }

    /// Standard error of the fitted curve at `h_mt`.
    pub fn sigma_at(&self, h_mt: T) -> T {
        let g = [h_mt * h_mt, h_mt];
        let c = &self.covariance;
        let v = g[0] * g[0] * c[0][0] + T::lit(2.0) * g[0] * g[1] * c[0][1] + g[1] * g[1] * c[1][1];
        v.max(T::zero()).sqrt()
    }

    pub fn sigma_a(&self) -> T {
        self.covariance[0][0].max(T::zero()).sqrt()
    }

    pub fn sigma_b(&self) -> T {
        self.covariance[1][1].max(T::zero()).sqrt()
    }
}

const SINGULAR_TOL: f64 = 1e-12;

/// Fits the estimates with |field| ≥ `field_threshold_mt`, weighting each by
/// 1/σ². If any selected estimate has zero σ the fit falls back to equal
/// weights and scales the covariance by the residual variance.
pub fn fit_parabola<T: Scalar>(
    estimates: &[ShiftEstimate<T>],
    field_threshold_mt: T,
    include_linear: bool,
) -> Result<FitResult<T>, AnalysisError> {
    let used: Vec<&ShiftEstimate<T>> = estimates
        .iter()
        .filter(|e| e.field_mt.abs() >= field_threshold_mt)
        .collect();
    if used.len() < 3 {
        return Err(AnalysisError::InsufficientData(format!(
            "parabola fit needs at least 3 estimates with |H| >= {field_threshold_mt} mT, got {}",
            used.len()
        )));
    }
    let equal_weights = used.iter().any(|e| !(e.sigma_delta_t > T::zero()));
    let weight = |e: &ShiftEstimate<T>| {
        if equal_weights {
            T::one()
        } else {
            T::one() / (e.sigma_delta_t * e.sigma_delta_t)
        }
    };

    let (mut s40, mut s30, mut s20, mut s2y, mut s1y) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for e in &used {
        let (w, h, y) = (weight(e), e.field_mt, e.delta_t);
        let h2 = h * h;
        s40 = s40 + w * h2 * h2;
        s30 = s30 + w * h2 * h;
        s20 = s20 + w * h2;
        s2y = s2y + w * h2 * y;
        s1y = s1y + w * h * y;
    }

    let (a, b, mut cov) = if include_linear {
        let inv = inverse_sym2([[s40, s30], [s30, s20]], T::lit(SINGULAR_TOL)).ok_or_else(|| {
            AnalysisError::SingularFit("H² and H columns are collinear (need distinct |H| values)".into())
        })?;
        let a = inv[0][0] * s2y + inv[0][1] * s1y;
        let b = inv[1][0] * s2y + inv[1][1] * s1y;
        (a, b, inv)
    } else {
        if !(s40 > T::zero()) {
            return Err(AnalysisError::SingularFit("all selected fields are zero".into()));
        }
        let z = T::zero();
        (s2y / s40, z, [[T::one() / s40, z], [z, z]])
    };

    let residuals: Vec<T> = used
        .iter()
        .map(|e| e.delta_t - (a * e.field_mt * e.field_mt + b * e.field_mt))
        .collect();
    let n = used.len();
    let ss: T = residuals.iter().map(|&r| r * r).sum();
    let rms = (ss / T::from_usize_lossy(n)).sqrt();

    if equal_weights {
        let p = if include_linear { 2 } else { 1 };
        let s2 = if n > p {
            ss / T::from_usize_lossy(n - p)
        } else {
            T::zero()
        };
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s2;
            }
        }
    }

    Ok(FitResult {
        a,
        b,
        covariance: cov,
        rms_residual: rms,
        n_points: n,
        field_threshold_mt,
        include_linear,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(h: f64, dt: f64, s: f64) -> ShiftEstimate<f64> {
        ShiftEstimate {
            sample_id: "F1".into(),
            field_mt: h,
            delta_t: dt,
            sigma_delta_t: s,
            n_levels: 50,
        }
    }

    #[test]
    fn exact_parabola_is_interpolated() {
        let a = 1.0417e-4 / 100.0;
        let data: Vec<_> = [3.0, 5.0, 7.0, 9.0]
            .iter()
            .map(|&h| est(h, a * h * h, 1e-6))
            .collect();
        let fit = fit_parabola(&data, 0.0, false).unwrap();
        assert!(((fit.a - a) / a).abs() < 1e-12);
        assert_eq!(fit.b, 0.0);
        assert!(fit.rms_residual < 1e-18);
        let lin = fit_parabola(&data, 0.0, true).unwrap();
        assert!(((lin.a - a) / a).abs() < 1e-10);
        assert!(lin.b.abs() < 1e-14);
    }

    #[test]
    fn threshold_selects_high_fields() {
        let data: Vec<_> = [1.0, 2.0, 6.0, 7.0, 8.0]
            .iter()
            .map(|&h| est(h, h * h, 1.0))
            .collect();
        let fit = fit_parabola(&data, 5.0, false).unwrap();
        assert_eq!(fit.n_points, 3);
        assert_eq!(fit.field_threshold_mt, 5.0);
        assert!(matches!(
            fit_parabola(&data, 7.5, false),
            Err(AnalysisError::InsufficientData(_))
        ));
    }

    #[test]
    fn equal_fields_are_singular_with_linear_term() {
        let data = vec![est(5.0, 1.0, 0.1), est(5.0, 1.1, 0.1), est(5.0, 0.9, 0.1)];
        assert!(matches!(
            fit_parabola(&data, 0.0, true),
            Err(AnalysisError::SingularFit(_))
        ));
        let zeros = vec![est(0.0, 0.0, 0.1); 3];
        assert!(matches!(
            fit_parabola(&zeros, 0.0, false),
            Err(AnalysisError::SingularFit(_))
        ));
    }

    #[test]
    fn covariance_matches_closed_form() {
        // quadratic-only: var(a) = 1 / Σ H⁴/σ²
        let data: Vec<_> = [2.0, 4.0, 6.0].iter().map(|&h| est(h, 0.0, 0.5)).collect();
        let fit = fit_parabola(&data, 0.0, false).unwrap();
        let expect = 1.0 / ((16.0 + 256.0 + 1296.0) / 0.25);
        assert!((fit.covariance[0][0] - expect).abs() < 1e-18);
        let lin = fit_parabola(&data, 0.0, true).unwrap();
        let c = lin.covariance;
        assert_eq!(c[0][1], c[1][0]);
        assert!(c[0][0] > 0.0 && c[1][1] > 0.0 && c[0][0] * c[1][1] >= c[0][1] * c[0][1]);
    }

    #[test]
    fn signed_fields_resolve_tilt_term() {
        let (a, b) = (2e-6, 5e-4);
        let data: Vec<_> = [-8.0, -4.0, 4.0, 8.0]
            .iter()
            .map(|&h| est(h, a * h * h + b * h, 1e-7))
            .collect();
        let fit = fit_parabola(&data, 0.0, true).unwrap();
        assert!((fit.b - b).abs() < 1e-15);
        assert!((fit.a - a).abs() < 1e-16);
    }
}
