//! Second-quantized oracles on explicit occupation-number states.

use std::collections::HashMap;

use super::{diagonal_shift_value, enumerate_block, Family, ModelError, ModelSpec, Statistics};

pub const DEFAULT_FOCK_CAP: usize = 20_000;

type Occ = Vec<u32>;

/// Sparse vector over occupation-number states.
#[derive(Debug, Clone, Default)]
struct FockVec(HashMap<Occ, f64>);

#[derive(Debug, Clone, Copy)]
struct Space {
    fermion: bool,
    modes: usize,
}

impl Space {
    fn vacuum(&self) -> FockVec {
        let mut v = FockVec::default();
        v.0.insert(vec![0; self.modes], 1.0);
        v
    }

    fn jw_sign(&self, occ: &Occ, mode: usize) -> f64 {
        if !self.fermion {
            return 1.0;
        }
        let below: u32 = occ[..mode].iter().sum();
        if below % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn create(&self, v: &FockVec, mode: usize) -> FockVec {
        let mut out = FockVec::default();
        for (occ, c) in &v.0 {
            if self.fermion && occ[mode] == 1 {
                continue;
            }
            let sign = self.jw_sign(occ, mode);
            let mut next = occ.clone();
            next[mode] += 1;
            let amp = if self.fermion { 1.0 } else { f64::from(next[mode]).sqrt() };
            *out.0.entry(next).or_insert(0.0) += sign * amp * c;
        }
        out
    }

    fn annihilate(&self, v: &FockVec, mode: usize) -> FockVec {
        let mut out = FockVec::default();
        for (occ, c) in &v.0 {
            if occ[mode] == 0 {
                continue;
            }
            let sign = self.jw_sign(occ, mode);
            let amp = if self.fermion { 1.0 } else { f64::from(occ[mode]).sqrt() };
            let mut next = occ.clone();
            next[mode] -= 1;
            *out.0.entry(next).or_insert(0.0) += sign * amp * c;
        }
        out
    }

    fn number(&self, v: &FockVec, modes: std::ops::Range<usize>) -> FockVec {
        let mut out = FockVec::default();
        for (occ, c) in &v.0 {
            let n: u32 = occ[modes.clone()].iter().sum();
            if n > 0 {
                out.0.insert(occ.clone(), f64::from(n) * c);
            }
        }
        out
    }
}

impl FockVec {
    fn axpy(&mut self, a: f64, x: &FockVec) {
        for (occ, c) in &x.0 {
            *self.0.entry(occ.clone()).or_insert(0.0) += a * c;
        }
    }

    fn scale(&mut self, a: f64) {
        for c in self.0.values_mut() {
            *c *= a;
        }
    }

    fn dot(&self, other: &FockVec) -> f64 {
        self.0.iter().map(|(occ, c)| c * other.0.get(occ).copied().unwrap_or(0.0)).sum()
    }

    fn norm(&self) -> f64 {
        self.0.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn max_abs(&self) -> f64 {
        self.0.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Mode layout of one level: paired modes `(2p, 2p+1)` plus, for an odd
/// boson degeneracy, one self-paired mode.
#[derive(Debug, Clone, Copy)]
struct Level {
    offset: usize,
    size: usize,
}

impl Level {
    fn modes(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.size
    }

    fn raise(&self, space: &Space, v: &FockVec) -> FockVec {
        let mut out = FockVec::default();
        for p in 0..self.size / 2 {
            let a = self.offset + 2 * p;
            let t = space.create(&space.create(v, a + 1), a);
            out.axpy(1.0, &t);
        }
        if self.size % 2 == 1 {
            let z = self.offset + self.size - 1;
            out.axpy(0.5, &space.create(&space.create(v, z), z));
        }
        out
    }

    fn lower(&self, space: &Space, v: &FockVec) -> FockVec {
        let mut out = FockVec::default();
        for p in 0..self.size / 2 {
            let a = self.offset + 2 * p;
            let t = space.annihilate(&space.annihilate(v, a), a + 1);
            out.axpy(1.0, &t);
        }
        if self.size % 2 == 1 {
            let z = self.offset + self.size - 1;
            out.axpy(0.5, &space.annihilate(&space.annihilate(v, z), z));
        }
        out
    }

    /// Lowest-weight state of seniority `v` on top of `base`.
    fn seed(&self, space: &Space, base: FockVec, v: u32) -> FockVec {
        let mut out = base;
        for p in 0..v as usize {
            let mode = if space.fermion { self.offset + 2 * p } else { self.offset };
            out = space.create(&out, mode);
        }
        let n = out.norm();
        out.scale(1.0 / n);
        out
    }
}

/// Block matrix obtained by projecting the second-quantized Hamiltonian
/// onto explicitly constructed basis states.
#[derive(Debug, Clone)]
pub struct FockOracle {
    pub matrix: Vec<Vec<f64>>,
    /// Largest norm of the component of `H|phi>` outside the block.
    pub leakage: f64,
}

/// Builds the block Hamiltonian of `spec` in Fock space.
pub fn pairing_block_oracle(spec: &ModelSpec) -> Result<FockOracle, ModelError> {
    let basis = enumerate_block(spec)?;
    let fermion = spec.statistics == Statistics::Fermion;
    let l1 = Level { offset: 0, size: spec.omega1.twice() as usize };
    let l2 = Level { offset: l1.size, size: spec.omega2.twice() as usize };
    let space = Space { fermion, modes: l1.size + l2.size };
    let seed = l2.seed(&space, l1.seed(&space, space.vacuum(), basis.v1), basis.v2);

    let n = basis.n_particles;
    let states: Vec<FockVec> = basis
        .occupancies
        .iter()
        .map(|&n2| {
            let mut s = seed.clone();
            for _ in 0..(n2 - basis.v2) / 2 {
                s = l2.raise(&space, &s);
            }
            for _ in 0..(n - n2 - basis.v1) / 2 {
                s = l1.raise(&space, &s);
            }
            let norm = s.norm();
            s.scale(1.0 / norm);
            s
        })
        .collect();

    let apply = |v: &FockVec| -> FockVec {
        let nf = f64::from(n);
        let n1 = space.number(v, l1.modes());
        let n2 = space.number(v, l2.modes());
        let lower1 = l1.lower(&space, v);
        let lower2 = l2.lower(&space, v);
        let mut out = FockVec::default();
        if let Some(p) = spec.custom.filter(|_| spec.family == Family::CustomQuasispin) {
            out.axpy(p.eps1, &n1);
            out.axpy(p.eps2, &n2);
            out.axpy(p.g11, &l1.raise(&space, &lower1));
            out.axpy(p.g22, &l2.raise(&space, &lower2));
            out.axpy(p.g12, &l1.raise(&space, &lower2));
            out.axpy(p.g12, &l2.raise(&space, &lower1));
        } else {
            let xi = spec.xi;
            let sigma = spec.phase.sign();
            let coupling = if fermion { -4.0 * xi / (nf * nf) } else { 4.0 * xi / (nf * nf) };
            let mut lowered = lower1;
            lowered.axpy(sigma, &lower2);
            let mut pair = l1.raise(&space, &lowered);
            pair.axpy(sigma, &l2.raise(&space, &lowered));
            out.axpy((1.0 - xi) / nf, &n2);
            out.axpy(coupling, &pair);
            if spec.diagonal_shift {
                out.axpy(-diagonal_shift_value(spec), v);
            }
        }
        out
    };

    let dim = states.len();
    let mut matrix = vec![vec![0.0; dim]; dim];
    let mut leakage: f64 = 0.0;
    for j in 0..dim {
        let hv = apply(&states[j]);
        let mut rest = hv.clone();
        for i in 0..dim {
            let m = states[i].dot(&hv);
            matrix[i][j] = m;
            rest.axpy(-m, &states[i]);
        }
        leakage = leakage.max(rest.norm());
    }
    Ok(FockOracle { matrix, leakage })
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Clebsch-Gordan coefficient `<j1 m1 j2 m2 | j m>` for integer angular momenta.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if m1 + m2 != m || j < (j1 - j2).abs() || j > j1 + j2 || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    let pre = ((2 * j + 1) as f64 * factorial(j1 + j2 - j) * factorial(j1 - j2 + j) * factorial(-j1 + j2 + j)
        / factorial(j1 + j2 + j + 1))
    .sqrt();
    let norm = (factorial(j1 + m1)
        * factorial(j1 - m1)
        * factorial(j2 + m2)
        * factorial(j2 - m2)
        * factorial(j + m)
        * factorial(j - m))
    .sqrt();
    let lo = 0.max(j2 - j - m1).max(j1 + m2 - j);
    let hi = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let sum: f64 = (lo..=hi)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign / (factorial(k)
                * factorial(j1 + j2 - j - k)
                * factorial(j1 - m1 - k)
                * factorial(j2 + m2 - k)
                * factorial(j - j2 + m1 + k)
                * factorial(j - j1 - m2 + k))
        })
        .sum();
    pre * norm * sum
}

fn parity(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One-body tensor `T^lambda_mu = sum <L m L m'|lambda mu> b^dag_m btilde_m'`
/// as a list of `(create, annihilate, coefficient)` terms.
fn tensor_terms(big_l: i32, lambda: i32, mu: i32) -> Vec<(usize, usize, f64)> {
    let mode = |m: i32| (1 + m + big_l) as usize;
    let mut terms = Vec::new();
    for m in -big_l..=big_l {
        let mp = mu - m;
        if mp.abs() > big_l {
            continue;
        }
        let cg = clebsch_gordan(big_l, m, big_l, mp, lambda, mu);
        if cg == 0.0 {
            continue;
        }
        // btilde_m' = (-)^(L - m') b_(-m')
        terms.push((mode(m), mode(-mp), cg * parity(big_l - mp)));
    }
    terms
}

fn apply_one_body(space: &Space, terms: &[(usize, usize, f64)], v: &FockVec) -> FockVec {
    let mut out = FockVec::default();
    for &(c, a, coef) in terms {
        out.axpy(coef, &space.create(&space.annihilate(v, a), c));
    }
    out
}

/// `sum_lambda T^lambda . T^lambda` over the given multipolarities.
fn casimir(space: &Space, big_l: i32, lambdas: &[i32], v: &FockVec) -> FockVec {
    let mut out = FockVec::default();
    for &lambda in lambdas {
        for mu in -lambda..=lambda {
            let right = tensor_terms(big_l, lambda, -mu);
            let left = tensor_terms(big_l, lambda, mu);
            let t = apply_one_body(space, &left, &apply_one_body(space, &right, v));
            out.axpy(parity(mu), &t);
        }
    }
    out
}

fn fixed_n_basis(modes: usize, n: u32) -> Vec<Occ> {
    fn rec(prefix: &mut Occ, modes: usize, left: u32, out: &mut Vec<Occ>) {
        if prefix.len() + 1 == modes {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(modes), modes, n, &mut out);
    out
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Max-norm residual of `4 S+ S- = -N_b + C2[u(n)] - C2[so(n)]/2` for an
/// s boson plus a `(2L+1)`-component b boson at total number `n`.
pub fn verify_operator_identity(n: u32, big_l: u32) -> Result<f64, ModelError> {
    verify_operator_identity_with_cap(n, big_l, DEFAULT_FOCK_CAP)
}

pub fn verify_operator_identity_with_cap(n: u32, big_l: u32, cap: usize) -> Result<f64, ModelError> {
    let modes = 2 * big_l as usize + 2;
    let dim = binomial(u64::from(n) + modes as u64 - 1, modes as u64 - 1);
    if dim > cap as u64 {
        return Err(ModelError::ResourceLimit(format!(
            "Fock dimension {dim} exceeds the cap {cap}"
        )));
    }
    let space = Space { fermion: false, modes };
    let l = big_l as i32;
    let all: Vec<i32> = (0..=2 * l).collect();
    let odd: Vec<i32> = all.iter().copied().filter(|k| k % 2 == 1).collect();
    let b_modes = 1..modes;
    // S+ = b^dag . b^dag / 2
    let pair_terms: Vec<(usize, usize, f64)> =
        (-l..=l).map(|m| ((1 + m + l) as usize, (1 - m + l) as usize, 0.5 * parity(m))).collect();
    let mut residual: f64 = 0.0;
    for occ in fixed_n_basis(modes, n) {
        let mut ket = FockVec::default();
        ket.0.insert(occ, 1.0);
        let mut lowered = FockVec::default();
        for &(a, b, coef) in &pair_terms {
            lowered.axpy(coef, &space.annihilate(&space.annihilate(&ket, a), b));
        }
        let mut lhs = FockVec::default();
        for &(a, b, coef) in &pair_terms {
            lhs.axpy(4.0 * coef, &space.create(&space.create(&lowered, b), a));
        }
        let mut rhs = space.number(&ket, b_modes.clone());
        rhs.scale(-1.0);
        rhs.axpy(1.0, &casimir(&space, l, &all, &ket));
        rhs.axpy(-2.0, &casimir(&space, l, &odd, &ket));
        lhs.axpy(-1.0, &rhs);
        residual = residual.max(lhs.max_abs());
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::super::{build_quasispin_hamiltonian, build_transitional_hamiltonian, HalfInt, PairingParams, Phase};
    use super::*;

    fn max_diff(spec: &ModelSpec) -> (f64, f64) {
        let oracle = pairing_block_oracle(spec).unwrap();
        let h = if spec.family == Family::CustomQuasispin {
            build_quasispin_hamiltonian(spec).unwrap()
        } else {
            build_transitional_hamiltonian(spec).unwrap()
        };
        let dense = h.to_dense();
        let mut diff: f64 = 0.0;
        for (row_a, row_b) in dense.iter().zip(&oracle.matrix) {
            for (a, b) in row_a.iter().zip(row_b) {
                diff = diff.max((a - b).abs());
            }
        }
        (diff, oracle.leakage)
    }

    #[test]
    fn clebsch_gordan_values() {
        assert!((clebsch_gordan(1, 1, 1, -1, 0, 0) - (1.0 / 3f64).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, 0, 1, 0, 0, 0) + (1.0 / 3f64).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(1, 1, 1, 0, 2, 1) - (0.5f64).sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(2, 0, 2, 0, 0, 0) - (1.0 / 5f64).sqrt()).abs() < 1e-15);
        for j in 0..=4 {
            let norm: f64 = (-2..=2)
                .map(|m1: i32| clebsch_gordan(2, m1, 2, -m1, j, 0).powi(2))
                .sum();
            assert!((norm - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn operator_identity_holds() {
        assert!(verify_operator_identity(2, 0).unwrap() < 1e-12);
        assert!(verify_operator_identity(4, 1).unwrap() < 1e-12);
        assert!(verify_operator_identity(6, 2).unwrap() < 1e-12);
        assert!(verify_operator_identity(5, 3).unwrap() < 1e-11);
    }

    #[test]
    fn operator_identity_respects_cap() {
        assert!(matches!(verify_operator_identity_with_cap(6, 2, 100), Err(ModelError::ResourceLimit(_))));
    }

    #[test]
    fn pairing_blocks_match_fock_space() {
        let mut specs = Vec::new();
        for n in 1..=8 {
            for g in 0..=1u8 {
                if u32::from(g) <= n {
                    specs.push(ModelSpec::lipkin(n, g, 0.37));
                }
            }
            for l in 0..=n as i32 {
                specs.push(ModelSpec::vibron(n, l, 0.61).with_phase(Phase::Minus));
            }
            for big_l in 0..=2 {
                for v in 0..=n {
                    let s = ModelSpec::sb(big_l, n, v, 0.45);
                    if s.validate().is_ok() {
                        specs.push(s);
                    }
                }
            }
            for (t1, t2) in [(3, 5), (2, 4), (4, 4), (1, 6)] {
                for v1 in 0..=2 {
                    for v2 in 0..=2 {
                        let s = ModelSpec::bosonic_pairing(HalfInt::from_twice(t1), HalfInt::from_twice(t2), n, v1, v2, 0.8);
                        if s.validate().is_ok() {
                            specs.push(s);
                        }
                    }
                }
            }
            for (o1, o2) in [(2, 2), (1, 3), (3, 2), (4, 4)] {
                for v1 in 0..=o1 {
                    for v2 in 0..=o2 {
                        let s = ModelSpec::fermionic_pairing(HalfInt::from_int(o1), HalfInt::from_int(o2), n, v1, v2, 0.55);
                        if enumerate_block(&s).is_ok() {
                            specs.push(s.with_shift(n % 2 == 0));
                        }
                    }
                }
            }
            let params = PairingParams { eps1: -0.4, eps2: 1.3, g11: 0.7, g12: -0.9, g22: 0.25 };
            for stat in [Statistics::Boson, Statistics::Fermion] {
                let s = ModelSpec::custom(stat, HalfInt::from_int(2), HalfInt::from_int(3), n, n % 2, 0, params);
                if enumerate_block(&s).is_ok() {
                    specs.push(s);
                }
            }
        }
        assert!(specs.len() > 200);
        for spec in &specs {
            let (diff, leak) = max_diff(spec);
            assert!(diff < 1e-12 && leak < 1e-12, "{spec:?}: diff {diff:e}, leakage {leak:e}");
        }
    }
}
