//! Observables derived from block spectra: level flow in `xi`, gaps,
//! order parameters, critical indices, asymptotic fits, finite-size
//! scaling, wave-function maps and degeneracy tables.

mod fit;
mod scaling;
mod structure;

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::{eig_all, eig_index, sturm_count, EigenError, SpectrumBlock};
use crate::models::{build_hamiltonian, ModelError, ModelSpec, TridiagonalOperator};
use crate::semiclassics::SemiclassicsError;

pub use fit::{fit_asymptotics, fit_asymptotics_values, scaling_exponent, AlphaFit, ExponentFit, FitWindow};
pub use scaling::{fit_gap_alpha, fixed_offset_gap, scaling_study, ScalingOptions, ScalingRecord};
pub use structure::{
    degeneracy_scan, mirror_defect, wavefunction_map, DegeneracyTable, Multiplet, WavefunctionMap,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Semiclassics(#[from] SemiclassicsError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("too few points: need {needed}, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("no excited-state transition at xi={xi}: the spectrum never crosses E=0")]
    NoEsqpt { xi: f64 },
    #[error("ill-conditioned fit (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("nonpositive value {value} at point {index}")]
    NonPositive { index: usize, value: f64 },
    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Default `xi` step for numerical derivatives.
pub const DEFAULT_DXI: f64 = 1e-3;

/// Grid spacing above which derivative tables are flagged as coarse.
pub const COARSE_DXI: f64 = 0.01;

/// Full block spectra over a grid of `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub spec: ModelSpec,
    pub xi: Vec<f64>,
    /// `energies[i][k]`, ascending in `k` for each grid point.
    pub energies: Vec<Vec<f64>>,
    pub solver: &'static str,
}

impl ScanTable {
    pub fn dim(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    /// Energies of level `k` across the grid.
    pub fn level(&self, k: usize) -> Vec<f64> {
        self.energies.iter().map(|row| row[k]).collect()
    }
}

fn check_increasing(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(AnalysisError::InvalidGrid("non-finite grid value".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Spectra of `template` at each `xi` of the grid, solved in parallel.
pub fn spectrum_scan(template: &ModelSpec, xi_grid: &[f64]) -> Result<ScanTable> {
    check_increasing(xi_grid)?;
    let energies = xi_grid
        .par_iter()
        .map(|&xi| -> Result<Vec<f64>> {
            let spec = template.with_xi(xi);
            Ok(eig_all(&build_hamiltonian(&spec)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanTable { spec: *template, xi: xi_grid.to_vec(), energies, solver: "tridiagonal-ql" })
}

fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 5 {
        return Err(AnalysisError::TooFewPoints { needed: 5, have: grid.len() });
    }
    check_increasing(grid)?;
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1e-12) + 1e-14);
    if !uniform {
        return Err(AnalysisError::InvalidGrid("derivatives need a uniform grid".into()));
    }
    if h > COARSE_DXI {
        warn!("xi step {h} exceeds {COARSE_DXI}; derivative tables are coarse");
    }
    Ok(h)
}

/// Central differences of `y` on a uniform grid with step `h`; second
/// order at the endpoints as well.
fn derivatives(y: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
        d2[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h);
    d2[n - 1] = (2.0 * y[n - 1] - 5.0 * y[n - 2] + 4.0 * y[n - 3] - y[n - 4]) / (h * h);
    (d1, d2)
}

/// `dE_k/dxi` and `d2E_k/dxi2` along the grid.
pub fn xi_derivatives(scan: &ScanTable, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k >= scan.dim() {
        return Err(EigenError::IndexOutOfRange { index: k, dim: scan.dim() }.into());
    }
    let h = uniform_step(&scan.xi)?;
    Ok(derivatives(&scan.level(k), h))
}

/// Richardson-extrapolated derivatives: five-point stencils inside the
/// grid, falling back to the plain stencils on the two outer points.
pub fn xi_derivatives_richardson(scan: &ScanTable, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut d1, mut d2) = xi_derivatives(scan, k)?;
    let h = uniform_step(&scan.xi)?;
    let y = scan.level(k);
    for i in 2..y.len() - 2 {
        d1[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
        d2[i] = (-y[i - 2] + 16.0 * y[i - 1] - 30.0 * y[i] + 16.0 * y[i + 1] - y[i + 2]) / (12.0 * h * h);
    }
    Ok((d1, d2))
}

/// Scaled gaps `N (E_{k+1} - E_k)` at the midpoint energies.
pub fn gap_profile(spec: &ModelSpec) -> Result<Vec<(f64, f64)>> {
    let values = eig_all(&build_hamiltonian(spec)?)?;
    gap_profile_values(&values, spec.n_particles)
}

pub fn gap_profile_values(values: &[f64], n: u32) -> Result<Vec<(f64, f64)>> {
    if values.len() < 2 {
        return Err(AnalysisError::TooFewPoints { needed: 2, have: values.len() });
    }
    let n = f64::from(n);
    Ok(values.windows(2).map(|w| (0.5 * (w[0] + w[1]), n * (w[1] - w[0]))).collect())
}

/// `<N_b>_k` from the eigenvectors of one solved block.
pub fn order_parameter_of(block: &SpectrumBlock) -> Result<Vec<f64>> {
    let vectors = block
        .eigenvectors
        .as_ref()
        .ok_or_else(|| AnalysisError::Unsupported("order parameter needs eigenvectors".into()))?;
    let occ: Vec<f64> = block.basis.occupancies.iter().map(|&o| f64::from(o)).collect();
    Ok(vectors.iter().map(|z| z.iter().zip(&occ).map(|(a, o)| a * a * o).sum()).collect())
}

/// `<N_b>_k` for every level of the block.
pub fn order_parameter(spec: &ModelSpec) -> Result<Vec<f64>> {
    order_parameter_of(&SpectrumBlock::solve(spec, true)?)
}

/// Spectra at the stencil points around `spec.xi`, kept inside `[0, 1]`.
fn stencil(spec: &ModelSpec, dxi: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let xi = spec.xi;
    let offsets: Vec<f64> = if xi + 2.0 * dxi <= 1.0 && xi - 2.0 * dxi >= 0.0 {
        vec![-2.0, -1.0, 1.0, 2.0]
    } else if xi + 2.0 * dxi > 1.0 {
        vec![-4.0, -3.0, -2.0, -1.0, 0.0]
    } else {
        vec![0.0, 1.0, 2.0, 3.0, 4.0]
    };
    let rows = offsets
        .par_iter()
        .map(|&o| -> Result<Vec<f64>> { Ok(eig_all(&build_hamiltonian(&spec.with_xi(xi + o * dxi))?)?) })
        .collect::<Result<Vec<_>>>()?;
    Ok((offsets, rows))
}

/// `dE_k/dxi` at `spec.xi` for every level, with fourth-order stencils.
pub fn energy_xi_derivative(spec: &ModelSpec, dxi: f64) -> Result<Vec<f64>> {
    if !(dxi > 0.0 && dxi < 0.05) {
        return Err(AnalysisError::InvalidGrid(format!("dxi={dxi} must lie in (0, 0.05)")));
    }
    let (offsets, rows) = stencil(spec, dxi)?;
    let dim = rows[0].len();
    let weights: Vec<f64> = match offsets.len() {
        4 => vec![1.0, -8.0, 8.0, -1.0].into_iter().map(|w| w / 12.0).collect(),
        _ if offsets[0] < 0.0 => vec![3.0, -16.0, 36.0, -48.0, 25.0].into_iter().map(|w| w / 12.0).collect(),
        _ => vec![-25.0, 48.0, -36.0, 16.0, -3.0].into_iter().map(|w| w / 12.0).collect(),
    };
    Ok((0..dim)
        .map(|k| rows.iter().zip(&weights).map(|(r, w)| w * r[k]).sum::<f64>() / dxi)
        .collect())
}

/// `<N_b>_k = N (E_k - xi dE_k/dxi)` from the Feynman-Hellmann theorem.
pub fn order_parameter_fh(spec: &ModelSpec, dxi: f64) -> Result<Vec<f64>> {
    if spec.xi <= 0.0 {
        return Err(AnalysisError::Unsupported("the Feynman-Hellmann form needs xi > 0".into()));
    }
    let energies = eig_all(&build_hamiltonian(spec)?)?;
    let slopes = energy_xi_derivative(spec, dxi)?;
    let n = f64::from(spec.n_particles);
    Ok(energies.iter().zip(&slopes).map(|(e, d)| n * (e - spec.xi * d)).collect())
}

/// Fractional index where an ascending spectrum crosses `E = 0`.
pub fn critical_index_values(values: &[f64], xi: f64) -> Result<f64> {
    let scale = values.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let below = values.partition_point(|&e| e < -ZERO_TOL * scale);
    if below == 0 || below == values.len() {
        return Err(AnalysisError::NoEsqpt { xi });
    }
    Ok(interpolate_crossing(below, values[below - 1], values[below]))
}

/// Levels within this fraction of the spectral scale of zero count as on
/// the crossing, so a level sitting exactly at `E = 0` is found.
const ZERO_TOL: f64 = 1e-12;

fn interpolate_crossing(below: usize, e_lo: f64, e_hi: f64) -> f64 {
    (below - 1) as f64 + (0.0 - e_lo) / (e_hi - e_lo)
}

/// `k_c` of an operator from a Sturm count and the two bracketing levels.
pub fn critical_index_operator(t: &TridiagonalOperator, xi: f64) -> Result<f64> {
    if xi <= 0.2 {
        return Err(AnalysisError::NoEsqpt { xi });
    }
    let below = sturm_count(t, -ZERO_TOL * t.norm_inf());
    if below == 0 || below == t.dim() {
        return Err(AnalysisError::NoEsqpt { xi });
    }
    let e_lo = eig_index(t, below - 1)?;
    let e_hi = eig_index(t, below)?;
    Ok(interpolate_crossing(below, e_lo, e_hi))
}

/// Real-valued level index `k_c` at which the block spectrum crosses `E = 0`.
pub fn critical_index(spec: &ModelSpec) -> Result<f64> {
    critical_index_operator(&build_hamiltonian(spec)?, spec.xi)
}

#[cfg(test)]
mod tests;
