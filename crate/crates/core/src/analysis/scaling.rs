use rayon::prelude::*;

use crate::eigen::eig_indices;
use crate::models::{build_hamiltonian, ModelSpec, TridiagonalOperator};
use crate::semiclassics::{esqpt_gap_at_offset, esqpt_gap_log_asymptote};

use super::fit::{fit_asymptotics_values, scaling_exponent, ExponentFit, FitWindow};
use super::{critical_index_operator, AnalysisError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions {
    /// Offset `k - k_c` at which the gap is read.
    pub dk: f64,
    /// Window of the per-point fit supplying `alpha` to the estimate.
    pub fit_window: FitWindow,
    /// Fixed `alpha` for the estimate instead of a per-point fit.
    pub alpha: Option<f64>,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            dk: 5.0,
            fit_window: FitWindow { min_offset: 5.0, max_offset: Some(20.0), per_side: false, joint: false },
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRecord {
    pub xi: f64,
    pub n_particles: u32,
    pub k_c: f64,
    pub dk: f64,
    pub delta: f64,
    pub n_delta: f64,
    pub alpha: f64,
    /// `N Delta` from the Lambert-W gap estimate at the same offset.
    pub estimate_n_delta: f64,
    /// `N Delta` from the logarithmic asymptote.
    pub log_asymptote_n_delta: f64,
    /// Power-law fit of `Delta` over the `N` set at this `xi`, when it has
    /// at least four points.
    pub exponent: Option<ExponentFit>,
}

/// Gap at the fractional index `k_c + dk`, interpolating between the two
/// discrete gaps whose midpoints bracket it.
pub fn fixed_offset_gap(t: &TridiagonalOperator, k_c: f64, dk: f64) -> Result<f64> {
    let position = k_c + dk - 0.5;
    if position < 0.0 || position + 2.0 > t.dim() as f64 {
        return Err(AnalysisError::InvalidGrid(format!("offset {dk} from k_c={k_c} leaves the block")));
    }
    let j = position.floor() as usize;
    let e = eig_indices(t, j..(j + 3).min(t.dim()))?;
    let g0 = e[1] - e[0];
    if e.len() < 3 {
        return Ok(g0);
    }
    let g1 = e[2] - e[1];
    let w = position - j as f64;
    Ok(g0 + w * (g1 - g0))
}

fn record(template: &ModelSpec, xi: f64, n: u32, options: &ScalingOptions) -> Result<ScalingRecord> {
    let spec = template.with_xi(xi).with_particles(n);
    let t = build_hamiltonian(&spec)?;
    let k_c = critical_index_operator(&t, xi)?;
    let delta = fixed_offset_gap(&t, k_c, options.dk)?;
    let alpha = match options.alpha {
        Some(a) => a,
        None => {
            let hi = options.fit_window.max_for(n);
            let first = (k_c - hi).ceil().max(0.0) as usize;
            let last = ((k_c + hi).floor() as usize).min(t.dim() - 1);
            let values = eig_indices(&t, first..last + 1)?;
            let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &e)| ((first + i) as f64, e)).collect();
            fit_asymptotics_values(&points, xi, n, k_c, options.fit_window)?.fit.alpha
        }
    };
    let nf = f64::from(n);
    Ok(ScalingRecord {
        xi,
        n_particles: n,
        k_c,
        dk: options.dk,
        delta,
        n_delta: nf * delta,
        alpha,
        estimate_n_delta: nf * esqpt_gap_at_offset(alpha, n, xi, options.dk)?,
        log_asymptote_n_delta: esqpt_gap_log_asymptote(nf, xi)?,
        exponent: None,
    })
}

/// Fixed-offset gaps over every `(xi, N)` pair, ordered by `xi` then `N`.
pub fn scaling_study(template: &ModelSpec, xi_set: &[f64], n_set: &[u32], options: ScalingOptions) -> Result<Vec<ScalingRecord>> {
    if xi_set.is_empty() || n_set.is_empty() {
        return Err(AnalysisError::InvalidGrid("xi and N sets must be nonempty".into()));
    }
    if n_set.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidGrid("N set must be strictly increasing".into()));
    }
    if !(options.dk >= 1.0) {
        return Err(AnalysisError::InvalidGrid(format!("dk={} must be at least 1", options.dk)));
    }
    let jobs: Vec<(f64, u32)> = xi_set.iter().flat_map(|&xi| n_set.iter().map(move |&n| (xi, n))).collect();
    let mut records = jobs
        .par_iter()
        .map(|&(xi, n)| record(template, xi, n, &options))
        .collect::<Result<Vec<_>>>()?;
    if n_set.len() >= 4 {
        for chunk in records.chunks_mut(n_set.len()) {
            let series: Vec<(f64, f64)> = chunk.iter().map(|r| (f64::from(r.n_particles), r.delta)).collect();
            let fit = scaling_exponent(&series)?;
            for r in chunk.iter_mut() {
                r.exponent = Some(fit);
            }
        }
    }
    Ok(records)
}

/// Single `alpha` making the Lambert-W gap estimate match a set of
/// fixed-offset gaps, by least squares in the relative deviation.
pub fn fit_gap_alpha(records: &[ScalingRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(AnalysisError::TooFewPoints { needed: 1, have: 0 });
    }
    let cost = |alpha: f64| -> f64 {
        records
            .iter()
            .map(|r| match esqpt_gap_at_offset(alpha, r.n_particles, r.xi, r.dk) {
                Ok(g) => (f64::from(r.n_particles) * g / r.n_delta - 1.0).powi(2),
                Err(_) => f64::INFINITY,
            })
            .sum()
    };
    // Golden-section search; the cost is unimodal in alpha over this range.
    let (mut a, mut b) = (-5.0f64, 10.0f64);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = cost(d);
        }
    }
    let alpha = 0.5 * (a + b);
    if !cost(alpha).is_finite() {
        return Err(AnalysisError::IllConditioned { condition: f64::INFINITY });
    }
    Ok(alpha)
}
