//! Two-level many-body models and their exact block Hamiltonians.
//!
//! Every family reduces to a pair of quasispin algebras, one per level.
//! Within a block of fixed seniorities the Hamiltonian only moves pairs
//! between the levels, so each block is a symmetric tridiagonal matrix
//! in the basis of level-2 occupancies `N2 = v2, v2 + 2, ...`.

mod fock;
mod spec;

use thiserror::Error;

pub use fock::{
    clebsch_gordan, pairing_block_oracle, verify_operator_identity, verify_operator_identity_with_cap,
    FockOracle, DEFAULT_FOCK_CAP,
};
pub use spec::{Block, Family, HalfInt, ModelSpec, PairingParams, Phase, Statistics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{0} is not a nonnegative half-integer")]
    NotHalfInteger(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("empty block: {0}")]
    EmptyBlock(String),
    #[error("Pauli violation: {0}")]
    PauliViolation(String),
    #[error("quasispin state outside the representation: {0}")]
    Domain(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

/// Ordered level-2 occupancies spanning one block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockBasis {
    pub occupancies: Vec<u32>,
    pub n_particles: u32,
    pub v1: u32,
    pub v2: u32,
}

impl BlockBasis {
    pub fn dim(&self) -> usize {
        self.occupancies.len()
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Self {
        assert!(
            offdiag.len() + 1 == diag.len() || (diag.is_empty() && offdiag.is_empty()),
            "off-diagonal length must be dim - 1"
        );
        TridiagonalOperator { diag, offdiag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().chain(&self.offdiag).all(|x| x.is_finite())
    }

    /// Infinity norm, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.offdiag[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.offdiag[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.offdiag[i];
                m[i + 1][i] = self.offdiag[i];
            }
        }
        m
    }

    pub fn add_constant(&mut self, c: f64) {
        for d in &mut self.diag {
            *d += c;
        }
    }
}

/// Lists the occupancies of the block selected by `spec`.
pub fn enumerate_block(spec: &ModelSpec) -> Result<BlockBasis, ModelError> {
    spec.validate()?;
    let (v1, v2) = spec.seniorities()?;
    let n = spec.n_particles;
    let (lo, hi) = match spec.statistics {
        Statistics::Boson => (v2, n - v1),
        Statistics::Fermion => {
            let cap1 = spec.omega1.twice() - v1;
            let cap2 = spec.omega2.twice() - v2;
            let lo = v2.max(n.saturating_sub(cap1));
            (lo, (n - v1).min(cap2))
        }
    };
    if lo > hi {
        return Err(ModelError::EmptyBlock(format!(
            "no occupancies satisfy the Pauli limits for N={n}, v=({v1},{v2})"
        )));
    }
    let occupancies: Vec<u32> = (lo..=hi).step_by(2).collect();
    Ok(BlockBasis { occupancies, n_particles: n, v1, v2 })
}

/// Norm of `S-|S, Sz>` for the boson SU(1,1) or fermion SU(2) quasispin.
pub fn quasispin_lowering_amplitude(statistics: Statistics, s: f64, sz: f64) -> Result<f64, ModelError> {
    const TOL: f64 = 1e-9;
    let steps = match statistics {
        Statistics::Fermion => sz + s,
        Statistics::Boson => sz - s,
    };
    let integral = (steps - steps.round()).abs() < TOL;
    let valid = match statistics {
        Statistics::Fermion => s >= -TOL && sz.abs() <= s + TOL && integral,
        Statistics::Boson => s > 0.0 && sz >= s - TOL && integral,
    };
    if !valid || !s.is_finite() || !sz.is_finite() {
        return Err(ModelError::Domain(format!("S={s}, Sz={sz} for {statistics:?} quasispin")));
    }
    let sq = match statistics {
        Statistics::Fermion => (s + sz) * (s - sz + 1.0),
        Statistics::Boson => (sz - s) * (sz + s - 1.0),
    };
    Ok(sq.max(0.0).sqrt())
}

/// Quasispin labels `(S, Sz)` of a level with half-degeneracy `omega`,
/// seniority `v` and occupancy `occ`.
pub fn quasispin_labels(statistics: Statistics, omega: HalfInt, v: u32, occ: u32) -> (f64, f64) {
    let om = omega.value();
    let (v, occ) = (f64::from(v), f64::from(occ));
    match statistics {
        Statistics::Boson => (0.5 * (om + v), 0.5 * (occ + om)),
        Statistics::Fermion => (0.5 * (om - v), 0.5 * (occ - om)),
    }
}

/// Matrix elements of the one-body and pair-transfer pieces in a block.
struct PairElements {
    n2: Vec<f64>,
    /// `S1+S1-` and `S2+S2-` on each basis state.
    self1: Vec<f64>,
    self2: Vec<f64>,
    /// `<N2+2| S2+ S1- |N2>`.
    transfer: Vec<f64>,
}

fn pair_elements(spec: &ModelSpec, basis: &BlockBasis) -> Result<PairElements, ModelError> {
    let stat = spec.statistics;
    let n = basis.n_particles;
    let dim = basis.dim();
    let mut out = PairElements {
        n2: Vec::with_capacity(dim),
        self1: Vec::with_capacity(dim),
        self2: Vec::with_capacity(dim),
        transfer: Vec::with_capacity(dim.saturating_sub(1)),
    };
    for (i, &n2) in basis.occupancies.iter().enumerate() {
        let n1 = n - n2;
        let (s1, sz1) = quasispin_labels(stat, spec.omega1, basis.v1, n1);
        let (s2, sz2) = quasispin_labels(stat, spec.omega2, basis.v2, n2);
        let a1 = quasispin_lowering_amplitude(stat, s1, sz1)?;
        let a2 = quasispin_lowering_amplitude(stat, s2, sz2)?;
        out.n2.push(f64::from(n2));
        out.self1.push(a1 * a1);
        out.self2.push(a2 * a2);
        if i + 1 < dim {
            let raise2 = quasispin_lowering_amplitude(stat, s2, sz2 + 1.0)?;
            out.transfer.push(a1 * raise2);
        }
    }
    Ok(out)
}

/// General quasispin Hamiltonian with single-particle energies and
/// pairing strengths taken from `spec.custom`.
pub fn build_quasispin_hamiltonian(spec: &ModelSpec) -> Result<TridiagonalOperator, ModelError> {
    let params = spec
        .custom
        .ok_or_else(|| ModelError::InvalidParameter("pairing parameters are required".into()))?;
    let basis = enumerate_block(spec)?;
    let el = pair_elements(spec, &basis)?;
    let n = f64::from(basis.n_particles);
    let diag = (0..basis.dim())
        .map(|i| {
            let n2 = el.n2[i];
            params.eps1 * (n - n2) + params.eps2 * n2 + params.g11 * el.self1[i] + params.g22 * el.self2[i]
        })
        .collect();
    let offdiag = el.transfer.iter().map(|t| params.g12 * t).collect();
    Ok(TridiagonalOperator::new(diag, offdiag))
}

/// Block Hamiltonian of any family: the quasispin form for custom models,
/// the pairing form otherwise.
pub fn build_hamiltonian(spec: &ModelSpec) -> Result<TridiagonalOperator, ModelError> {
    if spec.family == Family::CustomQuasispin {
        build_quasispin_hamiltonian(spec)
    } else {
        build_transitional_hamiltonian(spec)
    }
}

/// Constant removed by the diagonal shift, `xi (N + 2L1 + 2L2) / N`.
pub fn diagonal_shift_value(spec: &ModelSpec) -> f64 {
    let n = f64::from(spec.n_particles);
    let extra = f64::from(spec.twice_angular(1) + spec.twice_angular(2));
    spec.xi * (n + extra) / n
}

/// Transitional Hamiltonian in pairing form,
/// `(1 - xi) N2 / N -+ (4 xi / N^2) (S1+ s S2+)(S1- s S2-)`,
/// repulsive for bosons and attractive for fermions.
pub fn build_transitional_hamiltonian(spec: &ModelSpec) -> Result<TridiagonalOperator, ModelError> {
    if spec.family == Family::CustomQuasispin {
        return Err(ModelError::InvalidParameter(
            "custom models use build_quasispin_hamiltonian".into(),
        ));
    }
    let basis = enumerate_block(spec)?;
    let el = pair_elements(spec, &basis)?;
    let n = f64::from(basis.n_particles);
    let xi = spec.xi;
    let coupling = match spec.statistics {
        Statistics::Boson => 4.0 * xi / (n * n),
        Statistics::Fermion => -4.0 * xi / (n * n),
    };
    let shift = if spec.diagonal_shift { diagonal_shift_value(spec) } else { 0.0 };
    let sigma = spec.phase.sign();
    let diag = (0..basis.dim())
        .map(|i| (1.0 - xi) * el.n2[i] / n + coupling * (el.self1[i] + el.self2[i]) - shift)
        .collect();
    let offdiag = el.transfer.iter().map(|t| coupling * sigma * t).collect();
    let op = TridiagonalOperator::new(diag, offdiag);
    debug_assert!(op.is_finite());
    Ok(op)
}

type VibronState = [u32; 3];

/// Sparse vector over `|n_s, n_+, n_->` occupation states.
#[derive(Default, Clone)]
struct VibronVec(std::collections::BTreeMap<VibronState, f64>);

impl VibronVec {
    fn basis(state: VibronState) -> Self {
        let mut v = VibronVec::default();
        v.0.insert(state, 1.0);
        v
    }

    fn create(&self, mode: usize) -> Self {
        let mut out = VibronVec::default();
        for (state, c) in &self.0 {
            let mut s = *state;
            s[mode] += 1;
            *out.0.entry(s).or_insert(0.0) += c * f64::from(s[mode]).sqrt();
        }
        out
    }

    fn annihilate(&self, mode: usize) -> Self {
        let mut out = VibronVec::default();
        for (state, c) in &self.0 {
            if state[mode] == 0 {
                continue;
            }
            let mut s = *state;
            let amp = f64::from(s[mode]).sqrt();
            s[mode] -= 1;
            *out.0.entry(s).or_insert(0.0) += c * amp;
        }
        out
    }

    fn axpy(&mut self, a: f64, other: &Self) {
        for (state, c) in &other.0 {
            *self.0.entry(*state).or_insert(0.0) += a * c;
        }
    }

    fn scaled(mut self, a: f64) -> Self {
        for c in self.0.values_mut() {
            *c *= a;
        }
        self
    }
}

const S: usize = 0;
const PLUS: usize = 1;
const MINUS: usize = 2;

/// `D+ = sqrt2 (b+^dag s - s^dag b-)`.
fn dipole_plus(v: &VibronVec) -> VibronVec {
    let mut out = v.annihilate(S).create(PLUS);
    out.axpy(-1.0, &v.annihilate(MINUS).create(S));
    out.scaled(std::f64::consts::SQRT_2)
}

/// `D- = sqrt2 (s^dag b+ - b-^dag s)`.
fn dipole_minus(v: &VibronVec) -> VibronVec {
    let mut out = v.annihilate(PLUS).create(S);
    out.axpy(-1.0, &v.annihilate(S).create(MINUS));
    out.scaled(std::f64::consts::SQRT_2)
}

/// Casimir-form vibron Hamiltonian built by applying boson operators to
/// occupation states.
pub fn build_vibron_fock_hamiltonian(n: u32, l: i32, xi: f64) -> Result<TridiagonalOperator, ModelError> {
    let spec = ModelSpec::vibron(n, l, xi);
    let basis = enumerate_block(&spec)?;
    let nf = f64::from(n);
    let state_of = |nb: u32| -> VibronState {
        let sum = i64::from(nb);
        let plus = ((sum + i64::from(l)) / 2) as u32;
        let minus = ((sum - i64::from(l)) / 2) as u32;
        [n - nb, plus, minus]
    };
    let dim = basis.dim();
    let mut diag = vec![0.0; dim];
    let mut offdiag = vec![0.0; dim.saturating_sub(1)];
    let l2 = f64::from(l) * f64::from(l);
    for (i, &nb) in basis.occupancies.iter().enumerate() {
        let ket = VibronVec::basis(state_of(nb));
        let mut cas = dipole_plus(&dipole_minus(&ket));
        cas.axpy(1.0, &dipole_minus(&dipole_plus(&ket)));
        let cas = cas.scaled(0.5);
        for (state, c) in &cas.0 {
            if c.abs() < 1e-300 {
                continue;
            }
            let nb_out = state[PLUS] + state[MINUS];
            let j = basis
                .occupancies
                .binary_search(&nb_out)
                .map_err(|_| ModelError::InvalidBlock(format!("dipole operator left the block at n_b={nb_out}")))?;
            let value = -xi / (nf * nf) * c;
            if j == i {
                diag[i] += value;
            } else if j == i + 1 {
                offdiag[i] = value;
            } else if j + 1 != i {
                return Err(ModelError::InvalidBlock("dipole Casimir is not tridiagonal".into()));
            }
        }
        diag[i] += (1.0 - xi) * f64::from(nb) / nf - xi * l2 / (nf * nf);
    }
    Ok(TridiagonalOperator::new(diag, offdiag))
}

/// Additive constant `kappa (-1)^L [N(N + 2L) - v(v + 2L - 1)]` relating the
/// multipole and pairing forms. The multipole phase `phase` corresponds to
/// the pairing phase returned by [`equivalent_pairing_phase`].
pub fn multipole_pairing_shift(n: u32, big_l: u32, v: u32, kappa: f64, phase: Phase) -> f64 {
    let _ = phase;
    assert!(v <= n && (n - v) % 2 == 0, "seniority must satisfy v <= N with N - v even");
    let (n, l, v) = (f64::from(n), f64::from(big_l), f64::from(v));
    let sign = if big_l % 2 == 0 { 1.0 } else { -1.0 };
    kappa * sign * (n * (n + 2.0 * l) - v * (v + 2.0 * l - 1.0))
}

/// Pairing phase `-+(-1)^L` matching a multipole phase.
pub fn equivalent_pairing_phase(phase: Phase, big_l: u32) -> Phase {
    let flip = big_l % 2 == 0;
    match (phase, flip) {
        (Phase::Plus, true) | (Phase::Minus, false) => Phase::Minus,
        _ => Phase::Plus,
    }
}
