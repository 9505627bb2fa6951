//! Simulator and estimation toolkit for differential critical-field
//! measurements of the Casimir-energy variation in superconducting cavities.
//!
//! * [`physics`]: critical-field law, tilt term, cavity gap scaling and shift
//!   curve, thermal-photon enhancement, resistive transition.
//! * [`protocol`]: noisy, drifting transition sweeps, zero/field/zero
//!   triplets and deterministic multi-field campaigns.
//! * [`analysis`]: Tc0 extraction, trace inversion, the level-averaged shift
//!   estimator, drift correction, parabola fits and the differential signal.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types used by the command line.

// `!(x > 0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
mod linalg;
pub mod num;
pub mod physics;
pub mod protocol;

pub use num::Scalar;

pub type FilmParams = physics::FilmParams<f64>;
pub type CavityParams = physics::CavityParams<f64>;
pub type ThermalEnvironment = physics::ThermalEnvironment<f64>;
pub type Sample = physics::Sample<f64>;
pub type NoiseModel = protocol::NoiseModel<f64>;
pub type SweepPoint = protocol::SweepPoint<f64>;
pub type SweepLabel = protocol::SweepLabel<f64>;
pub type SweepTrace = protocol::SweepTrace<f64>;
pub type TripletRecord = protocol::TripletRecord<f64>;
pub type CampaignConfig = protocol::CampaignConfig<f64>;
pub type Dataset = protocol::Dataset<f64>;
pub type AnalysisOptions = analysis::AnalysisOptions<f64>;
pub type ShiftEstimate = analysis::ShiftEstimate<f64>;
pub type FitResult = analysis::FitResult<f64>;
pub type DifferentialSignal = analysis::DifferentialSignal<f64>;
pub type CampaignAnalysis = analysis::CampaignAnalysis<f64>;

pub type FilmParams32 = physics::FilmParams<f32>;
pub type CavityParams32 = physics::CavityParams<f32>;
pub type CampaignConfig32 = protocol::CampaignConfig<f32>;
