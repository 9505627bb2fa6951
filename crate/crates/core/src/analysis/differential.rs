//! Film–cavity differential signal.
//!
//! The film side is the fitted parabola; the cavity side is taken as is:
//! estimates are averaged per field and joined by piecewise-linear
//! interpolation, so no cavity model is assumed. The gap is located on a
//! dense grid after pooling each field node with its neighbours.

use serde::{Deserialize, Serialize};

use super::{AnalysisError, FitResult, ShiftEstimate};
use crate::num::{interp_linear, mean, sample_std, units, Scalar};

/// Per-field aggregate of the cavity estimates and the gap at that field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapNode<T> {
    pub field_mt: T,
    pub n_estimates: usize,
    pub cavity_delta_t: T,
    pub cavity_sigma_delta_t: T,
    /// [film fit − cavity] · Tc0 (μK).
    pub gap_uk: T,
    pub sigma_uk: T,
    /// Gap after pooling with neighbouring nodes (μK).
    pub pooled_gap_uk: T,
    pub pooled_sigma_uk: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint<T> {
    pub field_mt: T,
    pub gap_uk: T,
    pub sigma_uk: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferentialSignal<T> {
    pub nodes: Vec<GapNode<T>>,
    pub grid: Vec<GapPoint<T>>,
    pub max_gap_uk: T,
    pub sigma_max_gap_uk: T,
    pub field_at_max_mt: T,
}

impl<T: Scalar> DifferentialSignal<T> {
    /// max_gap / σ(max_gap).
    pub fn significance(&self) -> T {
        if self.sigma_max_gap_uk > T::zero() {
            self.max_gap_uk / self.sigma_max_gap_uk
        } else {
            T::infinity()
        }
    }
}

/// Mean and standard error of one field's estimates. With three or more
/// repeats the error is the observed scatter; otherwise the propagated
/// per-estimate uncertainties.
fn aggregate<T: Scalar>(group: &[&ShiftEstimate<T>]) -> (T, T) {
    let values: Vec<T> = group.iter().map(|e| e.delta_t).collect();
    let n = T::from_usize_lossy(group.len());
    let weighted = group.iter().all(|e| e.sigma_delta_t > T::zero());
    let (m, propagated) = if weighted {
        let (sw, swy) = group.iter().fold((T::zero(), T::zero()), |(sw, swy), e| {
            let w = T::one() / (e.sigma_delta_t * e.sigma_delta_t);
            (sw + w, swy + w * e.delta_t)
        });
        (swy / sw, T::one() / sw.sqrt())
    } else {
        (mean(&values), T::zero())
    };
    if group.len() >= 3 {
        (m, sample_std(&values) / n.sqrt())
    } else {
        (m, propagated)
    }
}

fn pool_neighbours<T: Scalar>(gaps: &[T], sigmas: &[T], half_width: usize) -> Vec<(T, T)> {
    let n = gaps.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width).min(n - 1);
            let window = lo..=hi;
            if sigmas[window.clone()].iter().all(|&s| s > T::zero()) {
                let (sw, swg) = window.fold((T::zero(), T::zero()), |(sw, swg), j| {
                    let w = T::one() / (sigmas[j] * sigmas[j]);
                    (sw + w, swg + w * gaps[j])
                });
                (swg / sw, T::one() / sw.sqrt())
            } else {
                let m = T::from_usize_lossy(hi - lo + 1);
                let g = gaps[window.clone()].iter().copied().sum::<T>() / m;
                let v: T = sigmas[window].iter().map(|&s| s * s).sum();
                (g, v.sqrt() / m)
            }
        })
        .collect()
}

/// Gap between the film parabola and the measured cavity curve, in μK.
pub fn differential_signal<T: Scalar>(
    film_fit: &FitResult<T>,
    cavity_estimates: &[ShiftEstimate<T>],
    tc0_k: T,
    smoothing_half_width: usize,
    grid_points: usize,
) -> Result<DifferentialSignal<T>, AnalysisError> {
    let mut sorted: Vec<&ShiftEstimate<T>> = cavity_estimates.iter().collect();
    sorted.sort_by(|a, b| {
        a.field_mt
            .partial_cmp(&b.field_mt)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let groups: Vec<&[&ShiftEstimate<T>]> = sorted.chunk_by(|a, b| a.field_mt == b.field_mt).collect();
    if groups.len() < 2 {
        return Err(AnalysisError::InsufficientData(format!(
            "differential signal needs cavity estimates at >= 2 distinct fields, got {}",
            groups.len()
        )));
    }
    if grid_points < 2 {
        return Err(AnalysisError::InvalidOption("grid_points must be >= 2".into()));
    }

    let to_uk = |x: T| units::k_to_uk(x * tc0_k);
    let mut fields = Vec::with_capacity(groups.len());
    let mut raw = Vec::with_capacity(groups.len());
    for g in &groups {
        let h = g[0].field_mt;
        let (cav, cav_sigma) = aggregate(g);
        let gap = to_uk(film_fit.delta_t(h) - cav);
        let sigma = to_uk(film_fit.sigma_at(h).hypot(cav_sigma));
        fields.push(h);
        raw.push((g.len(), cav, cav_sigma, gap, sigma));
    }
    let gaps: Vec<T> = raw.iter().map(|r| r.3).collect();
    let sigmas: Vec<T> = raw.iter().map(|r| r.4).collect();
    let pooled = pool_neighbours(&gaps, &sigmas, smoothing_half_width);

    let nodes: Vec<GapNode<T>> = raw
        .iter()
        .zip(&fields)
        .zip(&pooled)
        .map(|((&(n, cav, cs, gap, sigma), &h), &(pg, ps))| GapNode {
            field_mt: h,
            n_estimates: n,
            cavity_delta_t: cav,
            cavity_sigma_delta_t: cs,
            gap_uk: gap,
            sigma_uk: sigma,
            pooled_gap_uk: pg,
            pooled_sigma_uk: ps,
        })
        .collect();

    let pg: Vec<T> = pooled.iter().map(|p| p.0).collect();
    let ps: Vec<T> = pooled.iter().map(|p| p.1).collect();
    let (h0, h1) = (fields[0], fields[fields.len() - 1]);
    let steps = T::from_usize_lossy(grid_points - 1);
    let grid: Vec<GapPoint<T>> = (0..grid_points)
        .map(|k| {
            let h = if k == grid_points - 1 {
                h1
            } else {
                h0 + (h1 - h0) * T::from_usize_lossy(k) / steps
            };
            GapPoint {
                field_mt: h,
                gap_uk: interp_linear(&fields, &pg, h).expect("grid inside node range"),
                sigma_uk: interp_linear(&fields, &ps, h).expect("grid inside node range"),
            }
        })
        .collect();

    let best = grid
        .iter()
        .fold(None::<&GapPoint<T>>, |best, p| match best {
            Some(b) if b.gap_uk >= p.gap_uk => Some(b),
            _ => Some(p),
        })
        .expect("grid is non-empty");

    Ok(DifferentialSignal {
        max_gap_uk: best.gap_uk,
        sigma_max_gap_uk: best.sigma_uk,
        field_at_max_mt: best.field_mt,
        nodes,
        grid,
    })
}
