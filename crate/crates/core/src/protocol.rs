//! Measurement-campaign simulator.
//!
//! A sweep ramps the true sample temperature linearly across the transition
//! while the thermometer reading carries white noise plus a slow linear
//! drift. Sweeps are grouped in zero-field / field / zero-field triplets at
//! equal time intervals, and triplets are repeated for every configured
//! field and replication on a film sample and a cavity sample.
//!
//! Every sweep draws from its own ChaCha stream whose seed is a pure
//! function of the master seed and the sweep's identity, so a campaign can
//! be generated in any order or in parallel with bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{units, Scalar};
use crate::physics::{
    thermal_enhancement, CavityParams, FilmParams, PhysicsError, Sample, ThermalEnvironment,
};

pub const MIN_POINTS_PER_SWEEP: usize = 50;

/// Half-width of the swept window, in transition widths.
const WINDOW_HALF_WIDTHS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid campaign configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("sweep window [{low_k} K, {high_k} K] is non-physical")]
    Window { low_k: f64, high_k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct NoiseModel<T> {
    /// Standard deviation of the per-reading thermometer noise (μK).
    pub sigma_fast_uk: T,
    /// Linear drift of the thermometer offset (μK per hour).
    pub drift_rate_uk_per_hr: T,
    /// Optional resistance read noise (Ω).
    pub resistance_noise_ohm: T,
    pub seed: u64,
}

impl<T: Scalar> Default for NoiseModel<T> {
    fn default() -> Self {
        Self {
            sigma_fast_uk: T::lit(41.0),
            drift_rate_uk_per_hr: T::lit(-50.0),
            resistance_noise_ohm: T::zero(),
            seed: 2010,
        }
    }
}

impl<T: Scalar> NoiseModel<T> {
    /// Same seed, no fast noise, no drift.
    pub fn noiseless(seed: u64) -> Self {
        Self {
            sigma_fast_uk: T::zero(),
            drift_rate_uk_per_hr: T::zero(),
            resistance_noise_ohm: T::zero(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Film,
    Cavity,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Film => "film",
            SampleKind::Cavity => "cavity",
        }
    }
}

/// Position of a sweep inside its triplet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripletPosition {
    Pre,
    Mid,
    Post,
}

impl TripletPosition {
    pub const ALL: [TripletPosition; 3] = [Self::Pre, Self::Mid, Self::Post];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pre => "pre",
            Self::Mid => "mid",
            Self::Post => "post",
        }
    }

    fn index(self) -> u64 {
        match self {
            Self::Pre => 0,
            Self::Mid => 1,
            Self::Post => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint<T> {
    pub tau_s: T,
    pub t_meas_k: T,
    pub r_meas_ohm: T,
}

/// Identity of one sweep within a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepLabel<T> {
    pub sample_id: String,
    pub kind: SampleKind,
    /// Nominal applied field μ₀H (mT), signed. Zero for the outer sweeps.
    pub field_mt: T,
    pub replication: usize,
    pub position: TripletPosition,
    /// Campaign-clock time of the first point (s).
    pub t_start_s: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace<T> {
    pub label: SweepLabel<T>,
    pub points: Vec<SweepPoint<T>>,
}

impl<T: Scalar> SweepTrace<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn temperatures(&self) -> Vec<T> {
        self.points.iter().map(|p| p.t_meas_k).collect()
    }

    pub fn resistances(&self) -> Vec<T> {
        self.points.iter().map(|p| p.r_meas_ohm).collect()
    }

    /// Copy of the trace with every temperature reading offset by `dt_k`.
    pub fn translated(&self, dt_k: T) -> Self {
        Self {
            label: self.label.clone(),
            points: self
                .points
                .iter()
                .map(|p| SweepPoint {
                    t_meas_k: p.t_meas_k + dt_k,
                    ..*p
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletRecord<T> {
    pub pre: SweepTrace<T>,
    pub mid: SweepTrace<T>,
    pub post: SweepTrace<T>,
    pub field_mt: T,
}

impl<T: Scalar> TripletRecord<T> {
    pub fn sweeps(&self) -> [&SweepTrace<T>; 3] {
        [&self.pre, &self.mid, &self.post]
    }

    pub fn sample_id(&self) -> &str {
        &self.mid.label.sample_id
    }

    pub fn kind(&self) -> SampleKind {
        self.mid.label.kind
    }

    pub fn replication(&self) -> usize {
        self.mid.label.replication
    }

    /// Whether the three sweeps are equally spaced in campaign time (within 1 s).
    pub fn is_symmetric(&self) -> bool {
        let a = self.mid.label.t_start_s - self.pre.label.t_start_s;
        let b = self.post.label.t_start_s - self.mid.label.t_start_s;
        a > T::zero() && b > T::zero() && (a - b).abs() <= T::one()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    default,
    bound(deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct CampaignConfig<T> {
    pub film: FilmParams<T>,
    pub cavity: CavityParams<T>,
    pub noise: NoiseModel<T>,
    /// Applied fields μ₀H (mT); both signs allowed.
    pub fields_mt: Vec<T>,
    pub sweep_duration_s: T,
    pub points_per_sweep: usize,
    pub replications: usize,
    /// Idle time between consecutive sweeps of a triplet (s).
    pub settle_time_s: T,
    /// When present, the cavity displacement is multiplied by the thermal
    /// enhancement factor.
    pub thermal: Option<ThermalEnvironment<T>>,
    /// Relative field difference between the cavity and film positions.
    pub homogeneity: T,
    pub film_sample_id: String,
    pub cavity_sample_id: String,
}

impl<T: Scalar> Default for CampaignConfig<T> {
    fn default() -> Self {
        Self {
            film: FilmParams::default(),
            cavity: CavityParams::default(),
            noise: NoiseModel::default(),
            fields_mt: (0..12)
                .map(|k| T::lit((k as f64 * 10_000.0 / 11.0).round() / 1000.0))
                .collect(),
            sweep_duration_s: T::lit(1200.0),
            points_per_sweep: 1200,
            replications: 10,
            settle_time_s: T::zero(),
            thermal: None,
            homogeneity: T::lit(1e-4),
            film_sample_id: "F1".to_string(),
            cavity_sample_id: "C1".to_string(),
        }
    }
}

impl<T: Scalar> CampaignConfig<T> {
    pub fn validate(&self) -> Result<(), SimError> {
        self.film.validate()?;
        self.cavity.validate()?;
        if let Some(env) = &self.thermal {
            env.validate()?;
        }
        let bad = |msg: String| Err(SimError::Config(msg));
        if self.fields_mt.is_empty() {
            return bad("fields_mt must not be empty".into());
        }
        if let Some(h) = self.fields_mt.iter().find(|h| !h.is_finite()) {
            return bad(format!("field {h} mT is not finite"));
        }
        if !(self.sweep_duration_s > T::zero()) {
            return bad(format!(
                "sweep_duration_s = {} must be > 0",
                self.sweep_duration_s
            ));
        }
        if self.points_per_sweep < MIN_POINTS_PER_SWEEP {
            return bad(format!(
                "points_per_sweep = {} must be >= {MIN_POINTS_PER_SWEEP}",
                self.points_per_sweep
            ));
        }
        if self.replications < 1 {
            return bad("replications must be >= 1".into());
        }
        if !(self.settle_time_s >= T::zero()) {
            return bad(format!("settle_time_s = {} must be >= 0", self.settle_time_s));
        }
        if !(self.noise.sigma_fast_uk >= T::zero()) || !self.noise.drift_rate_uk_per_hr.is_finite() {
            return bad("noise.sigma_fast_uk must be >= 0 and drift finite".into());
        }
        if !(self.noise.resistance_noise_ohm >= T::zero()) {
            return bad("noise.resistance_noise_ohm must be >= 0".into());
        }
        if !(self.homogeneity.abs() < T::lit(0.01)) {
            return bad(format!("homogeneity = {} must be below 1e-2", self.homogeneity));
        }
        if self.film_sample_id.is_empty()
            || self.cavity_sample_id.is_empty()
            || self.film_sample_id == self.cavity_sample_id
        {
            return bad("sample ids must be non-empty and distinct".into());
        }
        Ok(())
    }

    /// Spacing between the starts of consecutive sweeps in a triplet (s).
    pub fn sweep_spacing_s(&self) -> T {
        self.sweep_duration_s + self.settle_time_s
    }

    /// Thermal enhancement factor M, when the thermal scenario is on.
    pub fn thermal_enhancement(&self) -> Result<Option<T>, PhysicsError> {
        self.thermal
            .as_ref()
            .map(|env| thermal_enhancement(self.cavity.film.tc0_k, env))
            .transpose()
    }

    /// The forward model used for `kind`, including any thermal enhancement.
    pub fn sample(&self, kind: SampleKind) -> Result<Sample<T>, PhysicsError> {
        Ok(match kind {
            SampleKind::Film => Sample::Film(self.film),
            SampleKind::Cavity => {
                let m = self.thermal_enhancement()?.unwrap_or_else(T::one);
                Sample::Cavity(self.cavity.enhanced(m))
            }
        })
    }

    pub fn sample_id(&self, kind: SampleKind) -> &str {
        match kind {
            SampleKind::Film => &self.film_sample_id,
            SampleKind::Cavity => &self.cavity_sample_id,
        }
    }

    /// Field actually felt by `kind` when the coil is set to `h_mt`.
    pub fn applied_field(&self, kind: SampleKind, h_mt: T) -> T {
        match kind {
            SampleKind::Film => h_mt,
            SampleKind::Cavity => h_mt * (T::one() + self.homogeneity),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Sub-seed for one triplet: a pure function of (master seed, sample id,
/// field, replication index).
pub fn triplet_seed(master: u64, sample_id: &str, field_mt: f64, replication: usize) -> u64 {
    let mut s = splitmix64(master ^ fnv1a(sample_id.as_bytes()));
    s = splitmix64(s ^ field_mt.to_bits());
    splitmix64(s ^ replication as u64)
}

fn sweep_stream(triplet: u64, position: TripletPosition) -> u64 {
    splitmix64(triplet ^ position.index().wrapping_mul(0xA076_1D64_78BD_642F))
}

/// Simulates one transition sweep at applied field `applied_h_mt`.
///
/// The true temperature ramps linearly over `Tc(H) ± 5·width` in `duration_s`.
/// The reading adds `drift·(t_start + τ)/3600 + N(0, σ_fast)` (μK); the
/// resistance follows the noiseless transition model unless a resistance
/// noise is configured.
pub fn generate_sweep<T: Scalar>(
    label: SweepLabel<T>,
    sample: &Sample<T>,
    applied_h_mt: T,
    noise: &NoiseModel<T>,
    duration_s: T,
    n_points: usize,
    stream_seed: u64,
) -> Result<SweepTrace<T>, SimError> {
    if n_points < MIN_POINTS_PER_SWEEP {
        return Err(SimError::Config(format!(
            "a sweep needs at least {MIN_POINTS_PER_SWEEP} points, got {n_points}"
        )));
    }
    if !(duration_s > T::zero()) {
        return Err(SimError::Config(format!(
            "sweep duration {duration_s} s must be > 0"
        )));
    }
    let film = sample.film();
    let center = sample.critical_temperature(applied_h_mt);
    let half = T::lit(WINDOW_HALF_WIDTHS) * units::mk_to_k(film.width_mk);
    let (low, high) = (center - half, center + half);
    if !(low > T::zero()) || !high.is_finite() {
        return Err(SimError::Window {
            low_k: low.as_f64(),
            high_k: high.as_f64(),
        });
    }

    let mut t_rng = ChaCha8Rng::seed_from_u64(stream_seed);
    let mut r_rng = ChaCha8Rng::seed_from_u64(splitmix64(stream_seed ^ 0x5245_5349_5354_414E));
    let last = T::from_usize_lossy(n_points - 1);
    let per_hour = T::lit(units::SECONDS_PER_HOUR);
    let t_start = label.t_start_s;

    let points = (0..n_points)
        .map(|i| {
            let frac = T::from_usize_lossy(i) / last;
            let tau = duration_s * frac;
            let t_true = low + (high - low) * frac;
            let mut offset_uk = noise.drift_rate_uk_per_hr * (t_start + tau) / per_hour;
            if noise.sigma_fast_uk > T::zero() {
                offset_uk = offset_uk + noise.sigma_fast_uk * T::standard_normal(&mut t_rng);
            }
            let mut r = sample.resistance(t_true, applied_h_mt);
            if noise.resistance_noise_ohm > T::zero() {
                r = r + noise.resistance_noise_ohm * T::standard_normal(&mut r_rng);
            }
            SweepPoint {
                tau_s: tau,
                t_meas_k: t_true + units::uk_to_k(offset_uk),
                r_meas_ohm: r,
            }
        })
        .collect();

    Ok(SweepTrace { label, points })
}

/// Zero-field / field / zero-field triplet on sample `kind` starting at `t_start_s`.
pub fn run_triplet<T: Scalar>(
    config: &CampaignConfig<T>,
    kind: SampleKind,
    h_mt: T,
    t_start_s: T,
    replication: usize,
) -> Result<TripletRecord<T>, SimError> {
    let sample = config.sample(kind)?;
    let sample_id = config.sample_id(kind);
    let seed = triplet_seed(config.noise.seed, sample_id, h_mt.as_f64(), replication);
    let spacing = config.sweep_spacing_s();

    let sweep = |position: TripletPosition, step: T| {
        let nominal = if position == TripletPosition::Mid {
            h_mt
        } else {
            T::zero()
        };
        let label = SweepLabel {
            sample_id: sample_id.to_string(),
            kind,
            field_mt: nominal,
            replication,
            position,
            t_start_s: t_start_s + spacing * step,
        };
        generate_sweep(
            label,
            &sample,
            config.applied_field(kind, nominal),
            &config.noise,
            config.sweep_duration_s,
            config.points_per_sweep,
            sweep_stream(seed, position),
        )
    };

    Ok(TripletRecord {
        pre: sweep(TripletPosition::Pre, T::zero())?,
        mid: sweep(TripletPosition::Mid, T::one())?,
        post: sweep(TripletPosition::Post, T::lit(2.0))?,
        field_mt: h_mt,
    })
}

/// All triplets of a campaign, ordered by replication, then field, then
/// sample kind (film first).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub triplets: Vec<TripletRecord<T>>,
    /// Thermal enhancement applied to the cavity displacement, if any.
    pub thermal_enhancement: Option<T>,
}

/// One scheduled triplet of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledTriplet<T> {
    pub kind: SampleKind,
    pub field_mt: T,
    pub replication: usize,
    pub t_start_s: T,
}

/// The campaign schedule. Film and cavity share the chip, so both triplets
/// of a (replication, field) slot run over the same time interval; slots
/// follow each other back to back.
pub fn campaign_schedule<T: Scalar>(config: &CampaignConfig<T>) -> Vec<ScheduledTriplet<T>> {
    let slot = config.sweep_spacing_s() * T::lit(3.0);
    let n_fields = config.fields_mt.len();
    let mut out = Vec::with_capacity(2 * n_fields * config.replications);
    for rep in 0..config.replications {
        for (i, &h) in config.fields_mt.iter().enumerate() {
            let t_start = slot * T::from_usize_lossy(rep * n_fields + i);
            for kind in [SampleKind::Film, SampleKind::Cavity] {
                out.push(ScheduledTriplet {
                    kind,
                    field_mt: h,
                    replication: rep,
                    t_start_s: t_start,
                });
            }
        }
    }
    out
}

/// Generates the whole campaign. Triplets are produced in parallel on the
/// current rayon pool; the result does not depend on the thread count.
pub fn run_campaign<T: Scalar>(config: &CampaignConfig<T>) -> Result<Dataset<T>, SimError> {
    config.validate()?;
    let triplets = campaign_schedule(config)
        .par_iter()
        .map(|s| run_triplet(config, s.kind, s.field_mt, s.t_start_s, s.replication))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        triplets,
        thermal_enhancement: config.thermal_enhancement()?,
    })
}
