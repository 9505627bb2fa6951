//! Closed-form forward models: the thin-film parallel critical field, its
//! tilt-corrected inverse, the gap scaling of the cavity free-energy
//! variation, the phenomenological cavity shift curve, the black-body
//! enhancement factor, and the resistive-transition shape.
//!
//! Units: thicknesses and gaps in nm, fields as μ₀H in mT, temperatures in K,
//! transition widths in mK, Casimir displacements in μK, resistances in Ω,
//! angles in rad. Reduced shifts δt are dimensionless.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{units, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhysicsError {
    #[error("{quantity} = {value} is outside its domain ({domain})")]
    Domain {
        quantity: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

fn check<T: Scalar>(
    ok: bool,
    name: &'static str,
    value: T,
    reason: &'static str,
) -> Result<(), PhysicsError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PhysicsError::InvalidParameter {
            name,
            value: value.as_f64(),
            reason,
        })
    }
}

/// A bare superconducting film.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct FilmParams<T> {
    /// Film thickness D (nm).
    pub thickness_nm: T,
    /// Penetration depth λ(0) (nm).
    pub lambda0_nm: T,
    /// Bulk zero-temperature critical field μ₀H₀ (mT).
    pub h0_mt: T,
    /// Zero-field transition temperature (K).
    pub tc0_k: T,
    /// Normal-state resistance (Ω).
    pub rn_ohm: T,
    /// 10%–90% transition width (mK).
    pub width_mk: T,
    /// Field–sample misalignment angle (rad).
    pub theta_rad: T,
}

impl<T: Scalar> Default for FilmParams<T> {
    fn default() -> Self {
        Self {
            thickness_nm: T::lit(14.0),
            lambda0_nm: T::lit(280.0),
            h0_mt: T::lit(10.0),
            tc0_k: T::lit(1.5),
            rn_ohm: T::lit(300.0),
            width_mk: T::lit(10.0),
            theta_rad: T::zero(),
        }
    }
}

impl<T: Scalar> FilmParams<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        check(
            self.thickness_nm > T::zero(),
            "thickness_nm",
            self.thickness_nm,
            "must be > 0",
        )?;
        check(
            self.lambda0_nm > T::zero(),
            "lambda0_nm",
            self.lambda0_nm,
            "must be > 0",
        )?;
        check(self.h0_mt > T::zero(), "h0_mt", self.h0_mt, "must be > 0")?;
        check(self.tc0_k > T::zero(), "tc0_k", self.tc0_k, "must be > 0")?;
        check(self.rn_ohm > T::zero(), "rn_ohm", self.rn_ohm, "must be > 0")?;
        check(
            self.width_mk > T::zero(),
            "width_mk",
            self.width_mk,
            "must be > 0",
        )?;
        check(
            self.theta_rad.abs() < T::lit(0.1),
            "theta_rad",
            self.theta_rad,
            "|theta| must be < 0.1 rad",
        )
    }

    /// Coefficient of H² in δt(H): D² / (24 λ(0)² H₀²), per mT².
    pub fn quadratic_coefficient(&self) -> T {
        let d = self.thickness_nm;
        let l = self.lambda0_nm;
        let h0 = self.h0_mt;
        d * d / (T::lit(24.0) * l * l * h0 * h0)
    }

    /// Coefficient of H in δt(H): sin θ / H₀, per mT.
    pub fn linear_coefficient(&self) -> T {
        self.theta_rad.sin() / self.h0_mt
    }

    /// Logistic scale w_e such that the 10%→90% rise spans `width_mk` (K).
    pub fn logistic_scale_k(&self) -> T {
        units::mk_to_k(self.width_mk) / (T::lit(2.0) * T::lit(9.0).ln())
    }
}

/// A film that forms one plate of a Casimir cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct CavityParams<T> {
    pub film: FilmParams<T>,
    /// Dielectric gap L (nm).
    pub gap_nm: T,
    /// Crossover gap L₀ (nm).
    pub crossover_gap_nm: T,
    /// Gap exponent α.
    pub gap_exponent: T,
    /// Maximum Casimir-induced displacement of the critical temperature (μK).
    pub delta_t_max_uk: T,
    /// Field scale below which the displacement turns on (mT).
    pub h_rise_mt: T,
    /// Field scale above which cavity and film curves merge (mT).
    pub h_merge_mt: T,
}

impl<T: Scalar> Default for CavityParams<T> {
    fn default() -> Self {
        Self {
            film: FilmParams::default(),
            gap_nm: T::lit(6.0),
            crossover_gap_nm: T::lit(10.0),
            gap_exponent: T::lit(1.15),
            delta_t_max_uk: T::lit(7.0),
            h_rise_mt: T::lit(1.0),
            h_merge_mt: T::lit(20.0),
        }
    }
}

impl<T: Scalar> CavityParams<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        self.film.validate()?;
        check(self.gap_nm > T::zero(), "gap_nm", self.gap_nm, "must be > 0")?;
        check(
            self.crossover_gap_nm > T::zero(),
            "crossover_gap_nm",
            self.crossover_gap_nm,
            "must be > 0",
        )?;
        check(
            self.gap_exponent > T::zero(),
            "gap_exponent",
            self.gap_exponent,
            "must be > 0",
        )?;
        check(
            self.delta_t_max_uk >= T::zero(),
            "delta_t_max_uk",
            self.delta_t_max_uk,
            "must be >= 0",
        )?;
        check(
            self.h_rise_mt > T::zero(),
            "h_rise_mt",
            self.h_rise_mt,
            "must be > 0",
        )?;
        check(
            self.h_merge_mt > self.h_rise_mt,
            "h_merge_mt",
            self.h_merge_mt,
            "must exceed h_rise_mt",
        )
    }

    /// Same cavity with the displacement scale multiplied by `factor`
    /// (used for the thermal-photon scenario).
    pub fn enhanced(&self, factor: T) -> Self {
        Self {
            delta_t_max_uk: self.delta_t_max_uk * factor,
            ..*self
        }
    }

    /// Same cavity rebuilt at a different gap, with the displacement scale
    /// following the gap dependence of the free-energy variation.
    pub fn with_gap(&self, gap_nm: T) -> Result<Self, PhysicsError> {
        let old = cavity_energy_ratio(self.gap_nm, self.crossover_gap_nm, self.gap_exponent)?;
        let new = cavity_energy_ratio(gap_nm, self.crossover_gap_nm, self.gap_exponent)?;
        Ok(Self {
            gap_nm,
            delta_t_max_uk: self.delta_t_max_uk * new / old,
            ..*self
        })
    }
}

/// Environment whose thermal photons reach the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct ThermalEnvironment<T> {
    /// Environment temperature (K).
    pub t_env_k: T,
    /// Effective frequency multiplier in hν_eff = x_eff·k_B·T_c.
    pub x_eff: T,
}

impl<T: Scalar> Default for ThermalEnvironment<T> {
    fn default() -> Self {
        Self {
            t_env_k: T::lit(300.0),
            x_eff: T::lit(10.0),
        }
    }
}

impl<T: Scalar> ThermalEnvironment<T> {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        check(self.t_env_k > T::zero(), "t_env_k", self.t_env_k, "must be > 0")?;
        check(self.x_eff > T::zero(), "x_eff", self.x_eff, "must be > 0")
    }
}

/// Parallel critical field μ₀H∥ (mT) at reduced temperature `t = T/Tc0`.
pub fn critical_field<T: Scalar>(film: &FilmParams<T>, t: T) -> Result<T, PhysicsError> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(PhysicsError::Domain {
            quantity: "reduced temperature",
            value: t.as_f64(),
            domain: "[0, 1]",
        });
    }
    Ok(film.h0_mt * T::lit(24.0).sqrt() * (film.lambda0_nm / film.thickness_nm) * (T::one() - t).sqrt())
}

/// Reduced shift δt = 1 − T/Tc0 of a bare film at signed field `h_mt`,
/// including the linear term from a misaligned field.
pub fn delta_t_of_field<T: Scalar>(film: &FilmParams<T>, h_mt: T) -> T {
    film.quadratic_coefficient() * h_mt * h_mt + film.linear_coefficient() * h_mt
}

/// Gap dependence of the cavity free-energy variation, normalized to 1 at L = 0.
pub fn cavity_energy_ratio<T: Scalar>(gap_nm: T, l0_nm: T, alpha: T) -> Result<T, PhysicsError> {
    if !(gap_nm >= T::zero()) {
        return Err(PhysicsError::Domain {
            quantity: "gap",
            value: gap_nm.as_f64(),
            domain: "L >= 0",
        });
    }
    if !(l0_nm > T::zero()) {
        return Err(PhysicsError::Domain {
            quantity: "crossover gap",
            value: l0_nm.as_f64(),
            domain: "L0 > 0",
        });
    }
    if !(alpha > T::zero()) {
        return Err(PhysicsError::Domain {
            quantity: "gap exponent",
            value: alpha.as_f64(),
            domain: "alpha > 0",
        });
    }
    Ok(T::one() / (T::one() + (gap_nm / l0_nm).powf(alpha)))
}

/// Casimir-induced critical-temperature displacement (μK) at field `h_mt`.
///
/// Vanishes at zero field, plateaus near `delta_t_max_uk` for
/// `h_rise ≪ |H| ≪ h_merge`, and decays once the curves merge.
pub fn cavity_shift<T: Scalar>(cavity: &CavityParams<T>, h_mt: T) -> T {
    let rise = h_mt / cavity.h_rise_mt;
    let merge = h_mt / cavity.h_merge_mt;
    cavity.delta_t_max_uk * (T::one() - (-(rise * rise)).exp()) * (-(merge * merge)).exp()
}

/// Reduced shift of the cavity film: the bare-film δt lowered by the
/// Casimir displacement expressed in units of Tc0.
///
/// Not clamped at zero: at low field the cavity curve sits below the bare
/// parabola by the full displacement and only returns to 0 as H → 0.
pub fn delta_t_cavity<T: Scalar>(cavity: &CavityParams<T>, h_mt: T) -> T {
    delta_t_of_field(&cavity.film, h_mt) - units::uk_to_k(cavity_shift(cavity, h_mt)) / cavity.film.tc0_k
}

/// Ratio of black-body spectral energy densities at ν_eff for the
/// environment and transition temperatures.
pub fn thermal_enhancement<T: Scalar>(tc_k: T, env: &ThermalEnvironment<T>) -> Result<T, PhysicsError> {
    validate_thermal_inputs(tc_k, env)?;
    Ok(T::lit(2.0) / ((env.x_eff * tc_k / env.t_env_k).exp() - T::one()))
}

/// Small-argument form of [`thermal_enhancement`]: 2·T_env / (x_eff·Tc),
/// i.e. T_env / (5 Tc) for x_eff = 10.
pub fn thermal_enhancement_approx<T: Scalar>(
    tc_k: T,
    env: &ThermalEnvironment<T>,
) -> Result<T, PhysicsError> {
    validate_thermal_inputs(tc_k, env)?;
    Ok(T::lit(2.0) * env.t_env_k / (env.x_eff * tc_k))
}

fn validate_thermal_inputs<T: Scalar>(tc_k: T, env: &ThermalEnvironment<T>) -> Result<(), PhysicsError> {
    if !(tc_k > T::zero()) {
        return Err(PhysicsError::Domain {
            quantity: "Tc",
            value: tc_k.as_f64(),
            domain: "Tc > 0",
        });
    }
    if !(env.t_env_k > T::zero()) {
        return Err(PhysicsError::Domain {
            quantity: "T_env",
            value: env.t_env_k.as_f64(),
            domain: "T_env > 0",
        });
    }
    env.validate()
}

/// Which kind of sample a sweep is taken on, with its forward model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample<T> {
    Film(FilmParams<T>),
    Cavity(CavityParams<T>),
}

impl<T: Scalar> Sample<T> {
    pub fn film(&self) -> &FilmParams<T> {
        match self {
            Sample::Film(f) => f,
            Sample::Cavity(c) => &c.film,
        }
    }

    pub fn cavity(&self) -> Option<&CavityParams<T>> {
        match self {
            Sample::Film(_) => None,
            Sample::Cavity(c) => Some(c),
        }
    }

    pub fn delta_t(&self, h_mt: T) -> T {
        match self {
            Sample::Film(f) => delta_t_of_field(f, h_mt),
            Sample::Cavity(c) => delta_t_cavity(c, h_mt),
        }
    }

    /// Transition midpoint Tc(H) = Tc0·(1 − δt(H)) in K.
    pub fn critical_temperature(&self, h_mt: T) -> T {
        self.film().tc0_k * (T::one() - self.delta_t(h_mt))
    }

    pub fn resistance(&self, temperature_k: T, h_mt: T) -> T {
        resistance_curve(self.film(), temperature_k, h_mt, self.cavity())
    }
}

/// Logistic resistive transition R(T) at field `h_mt`, centred on the film
/// or cavity Tc(H).
pub fn resistance_curve<T: Scalar>(
    film: &FilmParams<T>,
    temperature_k: T,
    h_mt: T,
    cavity: Option<&CavityParams<T>>,
) -> T {
    let dt = match cavity {
        Some(c) => delta_t_cavity(c, h_mt),
        None => delta_t_of_field(film, h_mt),
    };
    let tc = film.tc0_k * (T::one() - dt);
    let we = film.logistic_scale_k();
    film.rn_ohm / (T::one() + (-(temperature_k - tc) / we).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn film() -> FilmParams<f64> {
        FilmParams::default()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn critical_field_vanishes_at_tc() {
        assert_eq!(critical_field(&film(), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn critical_field_prefactor_collapses() {
        let f = FilmParams {
            lambda0_nm: 14.0 / 24f64.sqrt(),
            ..film()
        };
        assert!(rel(critical_field(&f, 0.0).unwrap(), f.h0_mt) < 1e-14);
    }

    #[test]
    fn critical_field_reference_value() {
        // mpmath, 30 digits: 34.9927106111882585...
        let f = FilmParams {
            thickness_nm: 14.0,
            lambda0_nm: 100.0,
            h0_mt: 10.0,
            ..film()
        };
        let h = critical_field(&f, 0.99).unwrap();
        assert!((h - 34.992_710_611_188_26).abs() < 1e-9);
        assert!((h - 34.99).abs() < 5e-3);
    }

    #[test]
    fn critical_field_rejects_out_of_domain() {
        assert!(matches!(
            critical_field(&film(), 1.01),
            Err(PhysicsError::Domain { .. })
        ));
        assert!(critical_field(&film(), -0.01).is_err());
        assert!(critical_field(&film(), f64::NAN).is_err());
    }

    #[test]
    fn delta_t_zero_at_zero_field() {
        let f = FilmParams {
            theta_rad: 0.05,
            ..film()
        };
        assert_eq!(delta_t_of_field(&f, 0.0), 0.0);
    }

    #[test]
    fn delta_t_calibrated_shift_at_7_2_mt() {
        // 196 / (24·280²·10²) · 7.2² · 1.5 K = 81.0 μK exactly
        let f = film();
        let shift_uk = delta_t_of_field(&f, 7.2) * f.tc0_k * 1e6;
        assert!((shift_uk - 81.0).abs() < 1e-9, "{shift_uk}");
    }

    #[test]
    fn delta_t_inverts_critical_field() {
        let f = film();
        for &t in &[0.0, 0.3, 0.9, 0.999, 0.999_999] {
            let h = critical_field(&f, t).unwrap();
            let back = delta_t_of_field(&f, h);
            assert!(rel(back, 1.0 - t) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn energy_ratio_anchors() {
        assert_eq!(cavity_energy_ratio(0.0, 10.0, 1.15).unwrap(), 1.0);
        assert_eq!(cavity_energy_ratio(10.0, 10.0, 1.15).unwrap(), 0.5);
        // mpmath: 0.642779721318676083...
        let r = cavity_energy_ratio(6.0f64, 10.0, 1.15).unwrap();
        assert!((r - 0.642_779_721_318_676).abs() < 1e-14);
        assert!(cavity_energy_ratio(-1.0, 10.0, 1.15).is_err());
    }

    #[test]
    fn cavity_shift_values() {
        let c = CavityParams::<f64> {
            delta_t_max_uk: 7.0,
            h_rise_mt: 1.0,
            h_merge_mt: 20.0,
            ..CavityParams::default()
        };
        assert_eq!(cavity_shift(&c, 0.0), 0.0);
        // mpmath: 6.5758914396030048..., 6.1491271754495191...
        assert!((cavity_shift(&c, 5.0) - 6.575_891_439_603_005).abs() < 1e-12);
        assert!((cavity_shift(&c, 7.2) - 6.149_127_175_449_519).abs() < 1e-12);
        let off = CavityParams {
            delta_t_max_uk: 0.0,
            ..c
        };
        for h in [0.0, 0.5, 3.0, 50.0] {
            assert_eq!(cavity_shift(&off, h), 0.0);
        }
    }

    #[test]
    fn cavity_delta_t_composition() {
        let c = CavityParams::<f64>::default();
        assert_eq!(delta_t_cavity(&c, 0.0), 0.0);
        let bare = CavityParams {
            delta_t_max_uk: 0.0,
            ..c
        };
        assert_eq!(delta_t_cavity(&bare, 4.0), delta_t_of_field(&bare.film, 4.0));
        // mpmath: 4.99005818830336538...e-5
        let v = delta_t_cavity(&c, 7.2);
        assert!((v - 4.990_058_188_303_365e-5).abs() < 1e-17);
    }

    #[test]
    fn cavity_curve_dips_below_zero_at_low_field() {
        let c = CavityParams::<f64>::default();
        assert!(delta_t_cavity(&c, 1.0) < 0.0);
    }

    #[test]
    fn thermal_enhancement_reference() {
        let env = ThermalEnvironment::<f64>::default();
        let m = thermal_enhancement(1.5, &env).unwrap();
        // mpmath: 39.0083329861317778...
        assert!((m - 39.008_332_986_131_78).abs() < 1e-10);
        assert!((thermal_enhancement_approx(1.5, &env).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_enhancement_unity_point() {
        let env = ThermalEnvironment {
            t_env_k: 10.0 * 1.5 / 3f64.ln(),
            x_eff: 10.0,
        };
        assert!((thermal_enhancement(1.5, &env).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_enhancement_rejects_zero_environment() {
        let env = ThermalEnvironment {
            t_env_k: 0.0,
            x_eff: 10.0,
        };
        assert!(thermal_enhancement(1.5, &env).is_err());
        assert!(thermal_enhancement_approx(1.5, &env).is_err());
    }

    #[test]
    fn resistance_midpoint_and_limits() {
        let f = FilmParams {
            width_mk: 1.0,
            ..film()
        };
        let tc = f.tc0_k * (1.0 - delta_t_of_field(&f, 3.0));
        assert!((resistance_curve(&f, tc, 3.0, None) - 150.0).abs() < 1e-9);
        assert!((resistance_curve(&f, tc + 0.5e-3, 3.0, None) - 270.0).abs() < 1e-9);
        assert!((resistance_curve(&f, tc - 0.5e-3, 3.0, None) - 30.0).abs() < 1e-9);
        assert!((resistance_curve(&f, 100.0, 3.0, None) - 300.0).abs() < 1e-9);
        assert!(resistance_curve(&f, 1e-3, 3.0, None) < 1e-9);
    }

    #[test]
    fn gap_rescaling_follows_energy_ratio() {
        let c = CavityParams::<f64>::default();
        let wide = c.with_gap(10.0).unwrap();
        let expect = c.delta_t_max_uk * 0.5 / cavity_energy_ratio(6.0, 10.0, 1.15).unwrap();
        assert!((wide.delta_t_max_uk - expect).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_bad_parameters() {
        assert!(film().validate().is_ok());
        assert!(FilmParams {
            theta_rad: 0.2,
            ..film()
        }
        .validate()
        .is_err());
        assert!(FilmParams {
            thickness_nm: 0.0,
            ..film()
        }
        .validate()
        .is_err());
        let c = CavityParams::<f64>::default();
        assert!(c.validate().is_ok());
        assert!(CavityParams { h_merge_mt: 0.5, ..c }.validate().is_err());
        assert!(CavityParams {
            delta_t_max_uk: -1.0,
            ..c
        }
        .validate()
        .is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let f = FilmParams::<f32>::default();
        let shift = delta_t_of_field(&f, 7.2) * f.tc0_k * 1e6;
        assert!((shift - 81.0).abs() < 1e-3);
    }
}
