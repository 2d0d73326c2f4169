//! Symmetric tridiagonal eigensolvers.
//!
//! Full spectra use implicit-shift QL. Selected eigenvalues come from
//! Sturm-sequence bisection, and eigenvectors from inverse iteration.

use log::warn;
use rayon::prelude::*;
use thiserror::Error;

use crate::models::{build_hamiltonian, enumerate_block, BlockBasis, ModelError, ModelSpec, TridiagonalOperator};

pub const DEFAULT_WINDOW_CAP: usize = 100_000;

/// Eigenvalues closer than this are treated as a degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix has no rows")]
    Empty,
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("QL iteration did not converge for eigenvalue {0}")]
    NoConvergence(usize),
    #[error("inverse iteration did not converge (residual {residual:e}, bound {bound:e})")]
    VectorNoConvergence { residual: f64, bound: f64 },
    #[error("window [{lo}, {hi}) is invalid")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("window holds {count} eigenvalues, more than the cap {cap}")]
    WindowOverflow { count: usize, cap: usize },
    #[error("eigenvalue index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check(t: &TridiagonalOperator) -> Result<(), EigenError> {
    if t.dim() == 0 {
        return Err(EigenError::Empty);
    }
    if !t.is_finite() {
        return Err(EigenError::NonFinite);
    }
    Ok(())
}

/// QL with implicit Wilkinson shifts. `z`, when present, accumulates the
/// rotations column by column.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [Vec<f64>]>) -> Result<(), EigenError> {
    let n = d.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(EigenError::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (left, right) = z.split_at_mut(i + 1);
                    let (zi, zi1) = (&mut left[i], &mut right[0]);
                    for k in 0..n {
                        let f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn work_arrays(t: &TridiagonalOperator) -> (Vec<f64>, Vec<f64>) {
    let mut e = t.offdiag.clone();
    e.push(0.0);
    (t.diag.clone(), e)
}

/// All eigenvalues, ascending.
pub fn eig_all(t: &TridiagonalOperator) -> Result<Vec<f64>, EigenError> {
    check(t)?;
    let (mut d, mut e) = work_arrays(t);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenpairs, ascending; vectors are returned one per eigenvalue.
pub fn eig_all_vectors(t: &TridiagonalOperator) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    check(t)?;
    let n = t.dim();
    let (mut d, mut e) = work_arrays(t);
    // Each row of `z` holds one column of the accumulated rotation.
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut col = vec![0.0; n];
            col[i] = 1.0;
            col
        })
        .collect();
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = z[i].clone();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok((values, vectors))
}

/// Makes the first non-negligible component positive.
pub fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * max) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn pivmin(t: &TridiagonalOperator) -> f64 {
    let emax = t.offdiag.iter().fold(1.0f64, |m, x| m.max(x * x));
    f64::MIN_POSITIVE * emax
}

fn count_below(t: &TridiagonalOperator, x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = t.diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..t.dim() {
        let e = t.offdiag[i - 1];
        q = t.diag[i] - x - e * e / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count(t: &TridiagonalOperator, x: f64) -> usize {
    if t.dim() == 0 {
        return 0;
    }
    if x == f64::INFINITY {
        return t.dim();
    }
    if x == f64::NEG_INFINITY || x.is_nan() {
        return 0;
    }
    count_below(t, x, pivmin(t))
}

fn gershgorin(t: &TridiagonalOperator) -> (f64, f64) {
    let n = t.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { t.offdiag[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { t.offdiag[i].abs() } else { 0.0 };
        lo = lo.min(t.diag[i] - left - right);
        hi = hi.max(t.diag[i] + left + right);
    }
    let pad = 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) + f64::MIN_POSITIVE;
    (lo - pad, hi + pad)
}

/// Bisection for eigenvalue `k` inside a bracket known to contain it.
fn bisect(t: &TridiagonalOperator, k: usize, mut lo: f64, mut hi: f64, pm: f64) -> f64 {
    let floor = 1e-3 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= (2.0 * f64::EPSILON * lo.abs().max(hi.abs())).max(floor) {
            break;
        }
        if count_below(t, mid, pm) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalue of ascending index `k`, by bisection.
pub fn eig_index(t: &TridiagonalOperator, k: usize) -> Result<f64, EigenError> {
    check(t)?;
    if k >= t.dim() {
        return Err(EigenError::IndexOutOfRange { index: k, dim: t.dim() });
    }
    let (lo, hi) = gershgorin(t);
    Ok(bisect(t, k, lo, hi, pivmin(t)))
}

/// Eigenvalues with ascending indices in `range`.
pub fn eig_indices(t: &TridiagonalOperator, range: std::ops::Range<usize>) -> Result<Vec<f64>, EigenError> {
    check(t)?;
    if range.end > t.dim() {
        return Err(EigenError::IndexOutOfRange { index: range.end - 1, dim: t.dim() });
    }
    let (lo, hi) = gershgorin(t);
    let pm = pivmin(t);
    Ok(range.into_par_iter().map(|k| bisect(t, k, lo, hi, pm)).collect())
}

/// All eigenvalues in `[lo, hi)`.
pub fn eig_window(t: &TridiagonalOperator, lo: f64, hi: f64) -> Result<Vec<f64>, EigenError> {
    eig_window_with_cap(t, lo, hi, DEFAULT_WINDOW_CAP)
}

pub fn eig_window_with_cap(t: &TridiagonalOperator, lo: f64, hi: f64, cap: usize) -> Result<Vec<f64>, EigenError> {
    check(t)?;
    if !(lo < hi) {
        return Err(EigenError::InvalidWindow { lo, hi });
    }
    let (first, last) = window_indices(t, lo, hi);
    let count = last - first;
    if count > cap {
        return Err(EigenError::WindowOverflow { count, cap });
    }
    let pm = pivmin(t);
    let (glo, ghi) = gershgorin(t);
    let (blo, bhi) = (lo.max(glo), hi.min(ghi));
    let mut values: Vec<f64> = (first..last).into_par_iter().map(|k| bisect(t, k, blo, bhi, pm)).collect();
    values.retain(|&x| x >= lo && x < hi);
    Ok(values)
}

/// Index range `first..last` of the eigenvalues in `[lo, hi)`.
pub fn window_indices(t: &TridiagonalOperator, lo: f64, hi: f64) -> (usize, usize) {
    (sturm_count(t, lo), sturm_count(t, hi))
}

/// LU factors of `T - shift` with partial pivoting; tiny pivots are
/// replaced by `tiny` so exact shifts stay solvable.
struct ShiftedLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &TridiagonalOperator, shift: f64, tiny: f64) -> Self {
        let n = t.dim();
        let mut dl = t.offdiag.clone();
        let mut d: Vec<f64> = t.diag.iter().map(|x| x - shift).collect();
        let mut du = t.offdiag.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs().max(dl[i].abs()) < tiny {
                d[i] = tiny;
            }
            if d[i].abs() >= dl[i].abs() {
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if let Some(last) = d.last_mut() {
            if last.abs() < tiny {
                *last = tiny;
            }
        }
        ShiftedLu { dl, d, du, du2, swapped }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut x = b[i];
            if i + 1 < n {
                x -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                x -= self.du2[i] * b[i + 2];
            }
            b[i] = x / self.d[i];
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn residual(t: &TridiagonalOperator, v: &[f64]) -> (f64, f64) {
    let tv = t.matvec(v);
    let rq: f64 = tv.iter().zip(v).map(|(a, b)| a * b).sum();
    let res = tv.iter().zip(v).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
    (rq, res)
}

/// Unit eigenvector for an eigenvalue approximation `lambda`.
pub fn eigenvector(t: &TridiagonalOperator, lambda: f64) -> Result<Vec<f64>, EigenError> {
    eigenvector_orthogonal(t, lambda, &[])
}

/// Inverse iteration keeping the iterate orthogonal to `against`.
pub fn eigenvector_orthogonal(t: &TridiagonalOperator, lambda: f64, against: &[Vec<f64>]) -> Result<Vec<f64>, EigenError> {
    check(t)?;
    let n = t.dim();
    let norm = t.norm_inf().max(f64::MIN_POSITIVE);
    let bound = 1e-10 * norm.max(1e-300);
    let lu = ShiftedLu::new(t, lambda, f64::EPSILON * norm);
    let salt = 7919 * (against.len() + 1);
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (((i + 1) * salt % 104_729) as f64 / 104_729.0)).collect();
    let project = |v: &mut Vec<f64>| {
        for _ in 0..2 {
            for u in against {
                let proj: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
            }
        }
    };
    project(&mut v);
    let mut best = f64::INFINITY;
    for _ in 0..12 {
        lu.solve(&mut v);
        project(&mut v);
        if normalize(&mut v) == 0.0 || v.iter().any(|x| !x.is_finite()) {
            return Err(EigenError::VectorNoConvergence { residual: best, bound });
        }
        project(&mut v);
        normalize(&mut v);
        let (_, res) = residual(t, &v);
        best = best.min(res);
        if res <= bound * 1e-2 {
            break;
        }
    }
    let (_, res) = residual(t, &v);
    if !(res <= bound) {
        return Err(EigenError::VectorNoConvergence { residual: res.min(best), bound });
    }
    fix_sign(&mut v);
    Ok(v)
}

/// Eigenvectors for ascending eigenvalues, with re-orthogonalization inside
/// near-degenerate clusters.
pub fn eigenvectors_for(t: &TridiagonalOperator, values: &[f64]) -> Result<Vec<Vec<f64>>, EigenError> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > CLUSTER_TOL * values[i].abs().max(1.0) {
            groups.push(start..i);
            start = i;
        }
    }
    let solved: Result<Vec<Vec<Vec<f64>>>, EigenError> = groups
        .into_par_iter()
        .map(|g| {
            if g.len() > 1 {
                warn!("{} eigenvalues within {CLUSTER_TOL:e} near {}", g.len(), values[g.start]);
            }
            let mut out: Vec<Vec<f64>> = Vec::with_capacity(g.len());
            for i in g {
                let v = eigenvector_orthogonal(t, values[i], &out)?;
                out.push(v);
            }
            Ok(out)
        })
        .collect();
    Ok(solved?.into_iter().flatten().collect())
}

/// Eigen-decomposition of one model block.
#[derive(Debug, Clone)]
pub struct SpectrumBlock {
    pub spec: ModelSpec,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub basis: BlockBasis,
}

impl SpectrumBlock {
    pub fn solve(spec: &ModelSpec, want_vectors: bool) -> Result<Self, EigenError> {
        let t = build_hamiltonian(spec)?;
        Self::from_operator(spec, &t, want_vectors)
    }

    pub fn from_operator(spec: &ModelSpec, t: &TridiagonalOperator, want_vectors: bool) -> Result<Self, EigenError> {
        let basis = enumerate_block(spec)?;
        let (eigenvalues, eigenvectors) = if want_vectors {
            let (v, z) = eig_all_vectors(t)?;
            (v, Some(z))
        } else {
            (eig_all(t)?, None)
        };
        Ok(SpectrumBlock { spec: *spec, eigenvalues, eigenvectors, basis })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}
