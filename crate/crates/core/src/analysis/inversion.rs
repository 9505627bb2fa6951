//! Turning a measured sweep into T(R) and locating the zero-field transition.

use std::cmp::Ordering;

use super::isotonic::pava;
use super::AnalysisError;
use crate::linalg::solve3;
use crate::num::{interp_linear, Scalar};
use crate::protocol::SweepTrace;

/// Fraction of the hottest readings treated as the normal-state plateau.
const PLATEAU_FRACTION: usize = 20;

/// Levels at which a trace is inverted lie strictly inside this band of R/R_N.
pub const LEVEL_BAND: (f64, f64) = (0.2, 0.8);

/// Peak refinement uses the contiguous region where dR/dT exceeds this
/// fraction of its maximum.
const PEAK_REGION: f64 = 0.6;

fn order_by_temperature<T: Scalar>(trace: &SweepTrace<T>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..trace.len()).collect();
    idx.sort_by(|&a, &b| {
        trace.points[a]
            .t_meas_k
            .partial_cmp(&trace.points[b].t_meas_k)
            .unwrap_or(Ordering::Equal)
    });
    idx
}

fn plateau_len(n: usize) -> usize {
    (n / PLATEAU_FRACTION).max(3).min(n)
}

/// Normal-state resistance estimated as the median reading over the hottest
/// 5% of the sweep.
pub fn normal_resistance<T: Scalar>(trace: &SweepTrace<T>) -> T {
    let order = order_by_temperature(trace);
    let k = plateau_len(order.len());
    let mut top: Vec<T> = order[order.len() - k..]
        .iter()
        .map(|&i| trace.points[i].r_meas_ohm)
        .collect();
    top.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    if k % 2 == 1 {
        top[k / 2]
    } else {
        (top[k / 2 - 1] + top[k / 2]) / T::lit(2.0)
    }
}

/// T(R) sampled at the requested resistance levels.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionTable<T> {
    pub levels_ohm: Vec<T>,
    pub temperatures_k: Vec<T>,
    /// Fraction of points absorbed into pooled blocks by monotonization.
    pub pooled_fraction: T,
}

/// Monotone form of a trace: readings sorted by temperature, resistances
/// pooled by PAVA, each block collapsed to (mean T, pooled R).
pub(crate) fn monotone_curve<T: Scalar>(
    trace: &SweepTrace<T>,
    max_pooled_fraction: T,
) -> Result<(Vec<T>, Vec<T>, T), AnalysisError> {
    let order = order_by_temperature(trace);
    let temps: Vec<T> = order.iter().map(|&i| trace.points[i].t_meas_k).collect();
    let rs: Vec<T> = order.iter().map(|&i| trace.points[i].r_meas_ohm).collect();
    let blocks = pava(&rs, None);
    let n = T::from_usize_lossy(rs.len());
    let pooled = (n - T::from_usize_lossy(blocks.len())) / n;
    if pooled > max_pooled_fraction {
        return Err(AnalysisError::NonMonotonic {
            discarded_percent: 100.0 * pooled.as_f64(),
        });
    }
    let mut bt = Vec::with_capacity(blocks.len());
    let mut br = Vec::with_capacity(blocks.len());
    for b in &blocks {
        let seg = &temps[b.start..b.start + b.len];
        bt.push(seg.iter().copied().sum::<T>() / T::from_usize_lossy(b.len));
        br.push(b.value);
    }
    Ok((br, bt, pooled))
}

pub(crate) fn invert_at_levels<T: Scalar>(
    trace: &SweepTrace<T>,
    levels: &[T],
    max_pooled_fraction: T,
) -> Result<InversionTable<T>, AnalysisError> {
    let (rs, ts, pooled) = monotone_curve(trace, max_pooled_fraction)?;
    let temperatures_k = levels
        .iter()
        .map(|&r| {
            interp_linear(&rs, &ts, r).ok_or(AnalysisError::LevelOutOfRange {
                level_ohm: r.as_f64(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InversionTable {
        levels_ohm: levels.to_vec(),
        temperatures_k,
        pooled_fraction: pooled,
    })
}

/// Inverts a sweep at the given resistance levels, which must lie strictly
/// inside (0.2, 0.8)·R_N of this trace.
pub fn invert_trace<T: Scalar>(
    trace: &SweepTrace<T>,
    r_levels: &[T],
    max_pooled_fraction: T,
) -> Result<InversionTable<T>, AnalysisError> {
    let rn = normal_resistance(trace);
    let (lo, hi) = (rn * T::lit(LEVEL_BAND.0), rn * T::lit(LEVEL_BAND.1));
    if let Some(&r) = r_levels.iter().find(|&&r| !(r > lo && r < hi)) {
        return Err(AnalysisError::LevelOutOfRange {
            level_ohm: r.as_f64(),
        });
    }
    invert_at_levels(trace, r_levels, max_pooled_fraction)
}

fn check_full_transition<T: Scalar>(trace: &SweepTrace<T>, order: &[usize]) -> Result<T, AnalysisError> {
    if trace.len() < 10 {
        return Err(AnalysisError::IncompleteTransition(format!(
            "{} points is too few",
            trace.len()
        )));
    }
    let rn = normal_resistance(trace);
    let k = plateau_len(order.len());
    let (lo, hi) = order[order.len() - k..]
        .iter()
        .map(|&i| trace.points[i].r_meas_ohm)
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        });
    if !(rn > T::zero()) || hi - lo > T::lit(0.02) * rn {
        return Err(AnalysisError::IncompleteTransition(
            "no normal-state plateau at the hot end".into(),
        ));
    }
    let r_min = trace
        .points
        .iter()
        .map(|p| p.r_meas_ohm)
        .fold(T::infinity(), T::min);
    if !(r_min < T::lit(0.1) * rn) {
        return Err(AnalysisError::IncompleteTransition(format!(
            "minimum resistance {r_min} Ω is not below 0.1·R_N = {} Ω",
            T::lit(0.1) * rn
        )));
    }
    Ok(rn)
}

/// Least-squares quadratic through `(xs, ys)` in coordinates relative to
/// `x0`; returns (c0, c1, c2) with y ≈ c0 + c1·(x − x0) + c2·(x − x0)².
fn local_quadratic<T: Scalar>(xs: &[T], ys: &[T], x0: T) -> Option<[T; 3]> {
    let scale = xs.iter().fold(T::zero(), |m, &x| m.max((x - x0).abs()));
    if !(scale > T::zero()) {
        return None;
    }
    let mut s = [T::zero(); 5];
    let mut sy = [T::zero(); 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - x0) / scale;
        let mut p = T::one();
        for (k, sk) in s.iter_mut().enumerate() {
            *sk = *sk + p;
            if k < 3 {
                sy[k] = sy[k] + p * y;
            }
            p = p * u;
        }
    }
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let c = solve3(a, sy)?;
    Some([c[0], c[1] / scale, c[2] / (scale * scale)])
}

/// Temperature at which dR/dT peaks.
///
/// The derivative is the slope of a local quadratic regression over a
/// window of `window_fraction` of the trace, centred on each reading. The
/// discrete maximum is then refined by fitting a parabola to the derivative
/// over the contiguous region where it exceeds 60% of its peak.
pub fn extract_tc0<T: Scalar>(trace: &SweepTrace<T>, window_fraction: T) -> Result<T, AnalysisError> {
    let order = order_by_temperature(trace);
    check_full_transition(trace, &order)?;
    let temps: Vec<T> = order.iter().map(|&i| trace.points[i].t_meas_k).collect();
    let rs: Vec<T> = order.iter().map(|&i| trace.points[i].r_meas_ohm).collect();
    let n = temps.len();

    let width = (window_fraction * T::from_usize_lossy(n))
        .round()
        .to_usize()
        .unwrap_or(0)
        .max(7)
        | 1;
    let half = width / 2;
    if n < width + 2 {
        return Err(AnalysisError::IncompleteTransition(format!(
            "{n} points cannot hold a {width}-point derivative window"
        )));
    }

    let mut deriv = vec![T::neg_infinity(); n];
    for i in half..n - half {
        let range = i - half..=i + half;
        if let Some(c) = local_quadratic(&temps[range.clone()], &rs[range], temps[i]) {
            deriv[i] = c[1];
        }
    }
    let k = (0..n)
        .max_by(|&a, &b| deriv[a].partial_cmp(&deriv[b]).unwrap_or(Ordering::Equal))
        .unwrap();
    let peak = deriv[k];
    if !(peak > T::zero()) {
        return Err(AnalysisError::IncompleteTransition("dR/dT never positive".into()));
    }

    let cut = peak * T::lit(PEAK_REGION);
    let mut lo = k;
    while lo > 0 && deriv[lo - 1] >= cut {
        lo -= 1;
    }
    let mut hi = k;
    while hi + 1 < n && deriv[hi + 1] >= cut {
        hi += 1;
    }
    if hi - lo + 1 >= 5 {
        if let Some(c) = local_quadratic(&temps[lo..=hi], &deriv[lo..=hi], temps[k]) {
            if c[2] < T::zero() {
                let v = temps[k] - c[1] / (T::lit(2.0) * c[2]);
                if v >= temps[lo] && v <= temps[hi] {
                    return Ok(v);
                }
            }
        }
    }
    Ok(temps[k])
}
