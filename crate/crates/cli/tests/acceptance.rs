//! Acceptance criteria AC1–AC11. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use casimir_lab::analysis::estimator::one_sided_shifts;
use casimir_lab::analysis::{
    analyze_campaign, drift_corrected_shift, estimate_sensitivity, estimate_shift, extract_tc0,
};
use casimir_lab::physics::{
    cavity_energy_ratio, critical_field, delta_t_of_field, thermal_enhancement, thermal_enhancement_approx,
};
use casimir_lab::protocol::{generate_sweep, run_campaign, run_triplet, SampleKind, TripletPosition};
use casimir_lab::{
    AnalysisOptions, CampaignAnalysis, CampaignConfig, FilmParams, NoiseModel, Sample, SweepLabel,
    ThermalEnvironment, TripletRecord,
};
use casimir_lab_cli::THREADS_ENV;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String), String>;
type Criterion = (&'static str, &'static str, fn() -> Verdict);

const TC0: f64 = 1.5;

fn film_label(h: f64) -> SweepLabel {
    SweepLabel {
        sample_id: "F1".into(),
        kind: SampleKind::Film,
        field_mt: h,
        replication: 0,
        position: TripletPosition::Mid,
        t_start_s: 0.0,
    }
}

/// Tc0 from a triplet's two zero-field sweeps.
fn triplet_tc0(t: &TripletRecord, options: &AnalysisOptions) -> Result<f64, String> {
    let a = extract_tc0(&t.pre, options.tc0_window_fraction).map_err(|e| e.to_string())?;
    let b = extract_tc0(&t.post, options.tc0_window_fraction).map_err(|e| e.to_string())?;
    Ok(0.5 * (a + b))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn ac1_thermal_enhancement() -> Verdict {
    let env = ThermalEnvironment::default();
    let m = thermal_enhancement(TC0, &env).map_err(|e| e.to_string())?;
    let approx = thermal_enhancement_approx(TC0, &env).map_err(|e| e.to_string())?;
    Ok((
        (m - 39.01).abs() <= 0.01 && (approx - 40.0).abs() <= 0.005,
        format!("M = {m:.6} (exact), {approx:.6} (approx)"),
    ))
}

fn ac2_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let film = FilmParams {
            thickness_nm: rng.random_range(2.0..50.0),
            lambda0_nm: rng.random_range(30.0..500.0),
            h0_mt: rng.random_range(1.0..200.0),
            theta_rad: 0.0,
            ..FilmParams::default()
        };
        let t: f64 = rng.random_range(0.0..1.0);
        let h = critical_field(&film, t).map_err(|e| e.to_string())?;
        let rel = (delta_t_of_field(&film, h) - (1.0 - t)).abs() / (1.0 - t);
        worst = worst.max(rel);
    }
    Ok((
        worst < 1e-12,
        format!("worst relative error {worst:.2e} over 10^4 sets"),
    ))
}

fn ac3_gap_ratio() -> Verdict {
    let at_l0 = cavity_energy_ratio(10.0f64, 10.0, 1.15).map_err(|e| e.to_string())?;
    let r = cavity_energy_ratio(6.0f64, 10.0, 1.15).map_err(|e| e.to_string())?;
    // Independent 30-digit evaluation of 1/(1 + 0.6^1.15): 0.642779721318676083...
    let oracle = 0.642_779_721_318_676_1;
    Ok((
        at_l0 == 0.5 && (r - 0.6428).abs() <= 5e-4 && (r - oracle).abs() < 1e-14,
        format!("ratio(L0) = {at_l0}, ratio(6 nm) = {r:.15} (oracle {oracle:.15})"),
    ))
}

fn ac4_translation_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let options = AnalysisOptions::default();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let film = FilmParams {
            width_mk: rng.random_range(1.0..40.0),
            rn_ohm: rng.random_range(1.0..5000.0),
            ..FilmParams::default()
        };
        let n = rng.random_range(200..3000);
        let shift_k = rng.random_range(-500e-6..500e-6);
        let zero = generate_sweep(
            film_label(0.0),
            &Sample::Film(film),
            0.0,
            &NoiseModel::noiseless(0),
            1200.0,
            n,
            i,
        )
        .map_err(|e| e.to_string())?;
        let moved = zero.translated(-shift_k);
        let e = estimate_shift(&zero, &moved, film.tc0_k, &options).map_err(|e| e.to_string())?;
        worst = worst.max((e.delta_t - shift_k / film.tc0_k).abs());
    }
    Ok((
        worst < 1e-10,
        format!("worst δt error {worst:.2e} over 100 shapes"),
    ))
}

fn ac5_drift_cancellation() -> Verdict {
    let drift = -50.0;
    let cfg = CampaignConfig {
        noise: NoiseModel {
            sigma_fast_uk: 0.0,
            drift_rate_uk_per_hr: drift,
            ..NoiseModel::default()
        },
        ..CampaignConfig::default()
    };
    let h = 7.2 * (80.0f64 / 81.0).sqrt();
    let t = run_triplet(&cfg, SampleKind::Film, h, 0.0, 0).map_err(|e| e.to_string())?;
    let options = AnalysisOptions::default();
    let corrected = drift_corrected_shift(&t, TC0, &options).map_err(|e| e.to_string())?;
    let (before, after) = one_sided_shifts(&t, TC0, &options).map_err(|e| e.to_string())?;
    let lag_uk = -drift * cfg.sweep_spacing_s() / 3600.0;
    let bias = corrected.shift_uk(TC0) - 80.0;
    let b1 = before.shift_uk(TC0) - 80.0;
    let b2 = after.shift_uk(TC0) - 80.0;
    Ok((
        bias.abs() < 0.01 && (b1 - lag_uk).abs() < 0.01 && (b2 + lag_uk).abs() < 0.01,
        format!("corrected bias {bias:.2e} uK; one-sided {b1:+.4} / {b2:+.4} uK vs predicted ±{lag_uk:.4}"),
    ))
}

fn ac6_fig5_shift() -> Verdict {
    let options = AnalysisOptions::default();
    let quiet = CampaignConfig {
        noise: NoiseModel::noiseless(0),
        ..CampaignConfig::default()
    };
    let t = run_triplet(&quiet, SampleKind::Film, 7.2, 0.0, 0).map_err(|e| e.to_string())?;
    let noiseless = drift_corrected_shift(&t, TC0, &options)
        .map_err(|e| e.to_string())?
        .shift_uk(TC0);

    let mut shifts = Vec::new();
    for seed in 0..100 {
        let mut cfg = CampaignConfig::default();
        cfg.noise.seed = seed;
        let t = run_triplet(&cfg, SampleKind::Film, 7.2, 0.0, 0).map_err(|e| e.to_string())?;
        let tc0 = triplet_tc0(&t, &options)?;
        let e = drift_corrected_shift(&t, tc0, &options).map_err(|e| e.to_string())?;
        shifts.push(e.shift_uk(tc0));
    }
    let m = mean(&shifts);
    Ok((
        (noiseless - 81.0).abs() < 1e-6 && (m - 80.0).abs() <= 3.0,
        format!("noiseless {noiseless:.6} uK; noisy mean {m:.3} uK over 100 seeds"),
    ))
}

fn ac7_sensitivity() -> Verdict {
    let options = AnalysisOptions::default();
    let cfg = CampaignConfig::default();
    let slot = 3.0 * cfg.sweep_spacing_s();
    let triplets = (0..40)
        .map(|rep| {
            run_triplet(&cfg, SampleKind::Film, 7.2, slot * rep as f64, rep).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tc0s = triplets
        .iter()
        .map(|t| triplet_tc0(t, &options))
        .collect::<Result<Vec<_>, _>>()?;
    let tc0 = mean(&tc0s);
    let estimates = triplets
        .iter()
        .map(|t| drift_corrected_shift(t, tc0, &options).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let s = estimate_sensitivity(&estimates, tc0).map_err(|e| e.to_string())?;
    let reported = mean(&estimates.iter().map(|e| e.sigma_uk(tc0)).collect::<Vec<_>>());
    Ok((
        (s - 6.0).abs() <= 1.5,
        format!("scatter {s:.3} uK over 40 triplets at 7.2 mT (mean reported σ {reported:.3} uK)"),
    ))
}

fn campaign(cfg: &CampaignConfig, options: &AnalysisOptions) -> Result<CampaignAnalysis, String> {
    let ds = run_campaign(cfg).map_err(|e| e.to_string())?;
    analyze_campaign(&ds.triplets, options).map_err(|e| e.to_string())
}

fn max_gap(a: &CampaignAnalysis) -> Result<(f64, f64, f64), String> {
    let d = a
        .differential
        .as_ref()
        .ok_or_else(|| a.differential_error.clone().unwrap_or_default())?;
    Ok((d.max_gap_uk, d.sigma_max_gap_uk, d.field_at_max_mt))
}

fn ac8_differential_signal() -> Verdict {
    let options = AnalysisOptions::default();
    let cfg = CampaignConfig::default();
    let (g, s, h) = max_gap(&campaign(&cfg, &options)?)?;
    let mut null_cfg = CampaignConfig::default();
    null_cfg.cavity.delta_t_max_uk = 0.0;
    let (g0, s0, _) = max_gap(&campaign(&null_cfg, &options)?)?;
    Ok((
        (5.5..=8.5).contains(&g) && g > 2.0 * s && g0.abs() < 2.0 * s0,
        format!(
            "max_gap {g:.3} ± {s:.3} uK at {h:.3} mT ({:.2}σ); null {g0:.3} ± {s0:.3} uK ({:.2}σ)",
            g / s,
            g0 / s0
        ),
    ))
}

fn ac9_thermal_scenario() -> Verdict {
    let cfg = CampaignConfig {
        thermal: Some(ThermalEnvironment::default()),
        ..CampaignConfig::default()
    };
    let m = cfg
        .thermal_enhancement()
        .map_err(|e| e.to_string())?
        .unwrap_or(1.0);
    let (g, s, h) = max_gap(&campaign(&cfg, &AnalysisOptions::default())?)?;
    Ok((
        (240.0..=320.0).contains(&g),
        format!("max_gap {g:.2} ± {s:.2} uK at {h:.3} mT with M = {m:.4}"),
    ))
}

fn tilt_fit(theta: f64) -> Result<(f64, f64, f64), String> {
    let mut cfg = CampaignConfig::default();
    cfg.film.theta_rad = theta;
    cfg.cavity.film.theta_rad = theta;
    let positive = cfg.fields_mt.clone();
    cfg.fields_mt = positive
        .iter()
        .rev()
        .filter(|&&h| h > 0.0)
        .map(|h| -h)
        .chain(positive.iter().copied())
        .collect();
    let options = AnalysisOptions {
        include_linear: true,
        ..AnalysisOptions::default()
    };
    let a = campaign(&cfg, &options)?;
    let film = a.sample(SampleKind::Film).ok_or("no film sample")?;
    let fit = film
        .fit
        .as_ref()
        .ok_or_else(|| film.fit_error.clone().unwrap_or_default())?;
    Ok((fit.b, fit.sigma_b(), theta.sin() / cfg.film.h0_mt))
}

fn ac10_tilt_recovery() -> Verdict {
    let (b, sb, expect) = tilt_fit(5e-3)?;
    let (b0, sb0, _) = tilt_fit(0.0)?;
    Ok((
        (b - expect).abs() <= 2.0 * sb && b0.abs() <= 2.0 * sb0,
        format!(
            "θ = 5 mrad: b = {b:.6e} ± {sb:.1e} vs {expect:.6e} ({:+.2}σ); θ = 0: b = {b0:.2e} ± {sb0:.1e} ({:+.2}σ)",
            (b - expect) / sb,
            b0 / sb0
        ),
    ))
}

fn run_pipeline(root: &Path, threads: Option<&str>) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_casimir-lab");
    let steps: [Vec<String>; 3] = [
        vec![
            "simulate".into(),
            "--out".into(),
            path(root, "ds"),
            "--seed".into(),
            "2010".into(),
            "--quiet".into(),
        ],
        vec![
            "analyze".into(),
            path(root, "ds"),
            "--out".into(),
            path(root, "an"),
            "--quiet".into(),
        ],
        vec![
            "report".into(),
            path(root, "an"),
            "--out".into(),
            path(root, "rp"),
            "--quiet".into(),
        ],
    ];
    for args in steps {
        let mut cmd = Command::new(bin);
        cmd.args(&args);
        match threads {
            Some(n) => cmd.env(THREADS_ENV, n),
            None => cmd.env_remove(THREADS_ENV),
        };
        let out = cmd.output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{} failed: {}",
                args[0],
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    Ok(())
}

fn path(root: &Path, sub: &str) -> String {
    root.join(sub).display().to_string()
}

/// Every file under `root`, manifests stripped of wall-clock and path fields.
fn snapshot(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let p = entry.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
            let bytes = if p.extension().is_some_and(|e| e == "json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
                let obj = v.as_object_mut().ok_or("manifest is not an object")?;
                obj.remove("runtime");
                obj.remove("source_dir");
                serde_json::to_vec(&v).map_err(|e| e.to_string())?
            } else {
                bytes
            };
            out.insert(p.strip_prefix(root).unwrap().to_path_buf(), bytes);
        }
    }
    Ok(out)
}

fn ac11_determinism() -> Verdict {
    let runs = [
        ("default", None),
        ("repeat", None),
        ("threads=1", Some("1")),
        ("threads=8", Some("8")),
    ];
    let mut snaps = Vec::new();
    for (name, threads) in runs {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_pipeline(dir.path(), threads)?;
        snaps.push((name, snapshot(dir.path())?));
    }
    let (_, reference) = &snaps[0];
    let mismatched: Vec<String> = snaps[1..]
        .iter()
        .filter(|(_, s)| s != reference)
        .map(|(name, s)| {
            let diff = reference
                .keys()
                .chain(s.keys())
                .find(|k| reference.get(*k) != s.get(*k));
            format!("{name} differs at {diff:?}")
        })
        .collect();
    Ok((
        mismatched.is_empty() && reference.len() > 700,
        if mismatched.is_empty() {
            format!(
                "{} files identical across 4 runs (threads default/default/1/8)",
                reference.len()
            )
        } else {
            mismatched.join("; ")
        },
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1", "thermal enhancement factor", ac1_thermal_enhancement),
        ("AC2", "critical-field round trip", ac2_round_trip),
        ("AC3", "gap-ratio anchors", ac3_gap_ratio),
        (
            "AC4",
            "estimator exactness on translated traces",
            ac4_translation_exactness,
        ),
        ("AC5", "drift cancellation", ac5_drift_cancellation),
        ("AC6", "mean shift at 7.2 mT", ac6_fig5_shift),
        ("AC7", "sensitivity loop closure", ac7_sensitivity),
        (
            "AC8",
            "differential signal and null control",
            ac8_differential_signal,
        ),
        ("AC9", "thermal-photon scenario", ac9_thermal_scenario),
        ("AC10", "tilt recovery", ac10_tilt_recovery),
        ("AC11", "pipeline determinism", ac11_determinism),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        let clock = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let (pass, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "{id:<5} {} {title}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
