use std::f64::consts::PI;

use crate::eigen::eig_indices;
use crate::models::{build_hamiltonian, ModelSpec};
use crate::semiclassics::{hbar_omega, AsymptoticFit};

use super::{critical_index_operator, AnalysisError, Result};

/// Condition estimates above this reject a fit.
const MAX_CONDITION: f64 = 1e12;

/// Levels used by the asymptotic fit: `min_offset <= |k - k_c| <= max_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub min_offset: f64,
    /// `None` selects `max(10, N / 50)`.
    pub max_offset: Option<f64>,
    /// Fit separate constants above and below `k_c`.
    pub per_side: bool,
    /// Fit `k_c` together with the constants instead of interpolating it.
    pub joint: bool,
}

impl Default for FitWindow {
    fn default() -> Self {
        FitWindow { min_offset: 5.0, max_offset: None, per_side: false, joint: false }
    }
}

impl FitWindow {
    pub fn max_for(&self, n: u32) -> f64 {
        self.max_offset.unwrap_or_else(|| (f64::from(n) / 50.0).max(10.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaFit {
    pub fit: AsymptoticFit,
    pub window_min: f64,
    pub window_max: f64,
    pub points: usize,
    /// Root-mean-square residual of the fitted law, in units of `2 pi hbar omega`.
    pub rms_residual: f64,
    pub condition: f64,
}

/// Eigenvalues and condition number of a small symmetric matrix by Jacobi sweeps.
fn symmetric_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Least squares `A c = b` through column-scaled normal equations.
/// Returns the coefficients and the condition estimate of the scaled design.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = rows[0].len();
    let scale: Vec<f64> = (0..m)
        .map(|j| rows.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .collect();
    if scale.iter().any(|&s| !(s > 0.0)) {
        return Err(AnalysisError::IllConditioned { condition: f64::INFINITY });
    }
    let mut g = vec![vec![0.0; m]; m];
    let mut y = vec![0.0; m];
    for (r, &b) in rows.iter().zip(rhs) {
        for i in 0..m {
            y[i] += r[i] / scale[i] * b;
            for j in 0..m {
                g[i][j] += r[i] / scale[i] * r[j] / scale[j];
            }
        }
    }
    let eig = symmetric_eigenvalues(g.clone());
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(0.0, f64::max);
    // Singular values of the scaled design are square roots of these.
    let condition = if lo > 0.0 { (hi / lo).sqrt() } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(AnalysisError::IllConditioned { condition });
    }
    // Gaussian elimination with partial pivoting.
    let mut aug: Vec<Vec<f64>> = g.into_iter().zip(&y).map(|(mut row, &b)| {
        row.push(b);
        row
    }).collect();
    for col in 0..m {
        let piv = (col..m).max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs())).unwrap();
        aug.swap(col, piv);
        for r in col + 1..m {
            let f = aug[r][col] / aug[col][col];
            for c in col..=m {
                aug[r][c] -= f * aug[col][c];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| aug[r][c] * x[c]).sum();
        x[r] = (aug[r][m] - s) / aug[r][r];
    }
    Ok((x.iter().zip(&scale).map(|(v, s)| v / s).collect(), condition))
}

/// Fits `-E ln|E| + alpha E = 2 pi hbar omega (k - k_c)` to `(k, E)` pairs.
///
/// `k_c` is the interpolated crossing; with `window.joint` it only sorts the
/// points into sides and is refitted.
pub fn fit_asymptotics_values(points: &[(f64, f64)], xi: f64, n: u32, k_c: f64, window: FitWindow) -> Result<AlphaFit> {
    let hw = hbar_omega(xi, n)?;
    let c = 2.0 * PI * hw;
    let lo = window.min_offset;
    let hi = window.max_for(n);
    let used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(k, e)| {
            let d = (k - k_c).abs();
            d >= lo && d <= hi && e != 0.0
        })
        .collect();
    let needed = 6;
    if used.len() < needed {
        return Err(AnalysisError::TooFewPoints { needed, have: used.len() });
    }
    let mut rows = Vec::with_capacity(used.len());
    let mut rhs = Vec::with_capacity(used.len());
    for &(k, e) in &used {
        let mut row = Vec::with_capacity(3);
        if window.per_side {
            row.push(if k > k_c { e } else { 0.0 });
            row.push(if k < k_c { e } else { 0.0 });
        } else {
            row.push(e);
        }
        let mut b = e * e.abs().ln();
        if window.joint {
            row.push(c);
            b += c * k;
        } else {
            b += c * (k - k_c);
        }
        rows.push(row);
        rhs.push(b);
    }
    let (coef, condition) = least_squares(&rows, &rhs)?;
    let alpha = coef[0];
    let alpha_below = window.per_side.then(|| coef[1]);
    let fitted_kc = if window.joint { coef[coef.len() - 1] } else { k_c };
    let mut fit = AsymptoticFit::new(xi, n, fitted_kc, alpha)?;
    if let Some(a) = alpha_below {
        fit = fit.with_alpha_below(a);
    }
    let ss: f64 = used
        .iter()
        .map(|&(k, e)| {
            let a = fit.alpha_for(k - fitted_kc);
            let r = (-e * e.abs().ln() + a * e) / c - (k - fitted_kc);
            r * r
        })
        .sum();
    Ok(AlphaFit {
        fit,
        window_min: lo,
        window_max: hi,
        points: used.len(),
        rms_residual: (ss / used.len() as f64).sqrt(),
        condition,
    })
}

/// Asymptotic fit to the exact levels of `spec` around its crossing of `E = 0`.
pub fn fit_asymptotics(spec: &ModelSpec, window: FitWindow) -> Result<AlphaFit> {
    let t = build_hamiltonian(spec)?;
    let k_c = critical_index_operator(&t, spec.xi)?;
    let hi = window.max_for(spec.n_particles);
    let first = (k_c - hi).ceil().max(0.0) as usize;
    let last = ((k_c + hi).floor() as usize).min(t.dim() - 1);
    let values = eig_indices(&t, first..last + 1)?;
    let points: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &e)| ((first + i) as f64, e)).collect();
    fit_asymptotics_values(&points, spec.xi, spec.n_particles, k_c, window)
}

/// Power-law fit `value ~ N^slope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_stderr: f64,
    pub points: usize,
}

/// Least-squares slope of `ln value` against `ln N`.
pub fn scaling_exponent(series: &[(f64, f64)]) -> Result<ExponentFit> {
    if series.len() < 4 {
        return Err(AnalysisError::TooFewPoints { needed: 4, have: series.len() });
    }
    for (i, &(n, v)) in series.iter().enumerate() {
        if !(v > 0.0) {
            return Err(AnalysisError::NonPositive { index: i, value: v });
        }
        if !(n > 0.0) {
            return Err(AnalysisError::NonPositive { index: i, value: n });
        }
    }
    let xs: Vec<f64> = series.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(AnalysisError::IllConditioned { condition: f64::INFINITY });
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = if series.len() > 2 { (sse / (m - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(ExponentFit { slope, intercept, slope_stderr, points: series.len() })
}
