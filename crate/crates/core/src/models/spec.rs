use std::fmt;

use super::ModelError;

/// A nonnegative half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(u32);

impl HalfInt {
    pub const HALF: HalfInt = HalfInt(1);

    pub const fn from_twice(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(value: u32) -> Self {
        HalfInt(2 * value)
    }

    /// Accepts any value whose double is a nonnegative integer.
    pub fn from_f64(value: f64) -> Result<Self, ModelError> {
        let twice = 2.0 * value;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(ModelError::NotHalfInteger(value));
        }
        Ok(HalfInt(twice.round() as u32))
    }

    pub const fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Lipkin,
    VibronU3,
    SbGeneral,
    BosonicPairing,
    FermionicPairing,
    CustomQuasispin,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Lipkin => "lipkin",
            Family::VibronU3 => "vibron-u3",
            Family::SbGeneral => "sb",
            Family::BosonicPairing => "bosonic-pairing",
            Family::FermionicPairing => "fermionic-pairing",
            Family::CustomQuasispin => "custom",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistics {
    Boson,
    Fermion,
}

/// Conserved labels selecting one invariant block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// Seniorities of level 1 and level 2.
    Seniority { v1: u32, v2: u32 },
    /// Planar angular momentum of the U(3) vibron model.
    AngularMomentum(i32),
    /// Lipkin grading, `N_b mod 2`.
    Grading(u8),
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Block::Seniority { v1, v2 } => write!(f, "v={v1}/{v2}"),
            Block::AngularMomentum(l) => write!(f, "l={l}"),
            Block::Grading(g) => write!(f, "g={g}"),
        }
    }
}

/// Relative sign between the two level pair operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Plus,
    Minus,
}

impl Phase {
    pub fn sign(self) -> f64 {
        match self {
            Phase::Plus => 1.0,
            Phase::Minus => -1.0,
        }
    }
}

/// Single-particle energies and pairing strengths of a general
/// two-level quasispin Hamiltonian. `g12` couples both directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingParams {
    pub eps1: f64,
    pub eps2: f64,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

/// Full description of one invariant block of a two-level model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub family: Family,
    pub statistics: Statistics,
    pub omega1: HalfInt,
    pub omega2: HalfInt,
    pub n_particles: u32,
    pub block: Block,
    pub phase: Phase,
    pub xi: f64,
    pub custom: Option<PairingParams>,
    pub diagonal_shift: bool,
}

impl ModelSpec {
    /// Schwinger-boson Lipkin model; `g` is the `N_b` parity.
    pub fn lipkin(n: u32, g: u8, xi: f64) -> Self {
        ModelSpec {
            family: Family::Lipkin,
            statistics: Statistics::Boson,
            omega1: HalfInt::HALF,
            omega2: HalfInt::HALF,
            n_particles: n,
            block: Block::Grading(g),
            phase: Phase::Plus,
            xi,
            custom: None,
            diagonal_shift: true,
        }
    }

    /// U(3) vibron model at planar angular momentum `l`.
    pub fn vibron(n: u32, l: i32, xi: f64) -> Self {
        ModelSpec {
            family: Family::VibronU3,
            statistics: Statistics::Boson,
            omega1: HalfInt::HALF,
            omega2: HalfInt::from_int(1),
            n_particles: n,
            block: Block::AngularMomentum(l),
            phase: Phase::Plus,
            xi,
            custom: None,
            diagonal_shift: true,
        }
    }

    /// s-b model with a `(2L+1)`-fold b level, at b seniority `v`.
    pub fn sb(big_l: u32, n: u32, v: u32, xi: f64) -> Self {
        ModelSpec {
            family: Family::SbGeneral,
            statistics: Statistics::Boson,
            omega1: HalfInt::HALF,
            omega2: HalfInt::from_twice(2 * big_l + 1),
            n_particles: n,
            block: Block::Seniority { v1: 0, v2: v },
            phase: Phase::Plus,
            xi,
            custom: None,
            diagonal_shift: true,
        }
    }

    pub fn bosonic_pairing(
        omega1: HalfInt,
        omega2: HalfInt,
        n: u32,
        v1: u32,
        v2: u32,
        xi: f64,
    ) -> Self {
        ModelSpec {
            family: Family::BosonicPairing,
            statistics: Statistics::Boson,
            omega1,
            omega2,
            n_particles: n,
            block: Block::Seniority { v1, v2 },
            phase: Phase::Plus,
            xi,
            custom: None,
            diagonal_shift: true,
        }
    }

    pub fn fermionic_pairing(
        omega1: HalfInt,
        omega2: HalfInt,
        n: u32,
        v1: u32,
        v2: u32,
        xi: f64,
    ) -> Self {
        ModelSpec {
            family: Family::FermionicPairing,
            statistics: Statistics::Fermion,
            omega1,
            omega2,
            n_particles: n,
            block: Block::Seniority { v1, v2 },
            phase: Phase::Plus,
            xi,
            custom: None,
            diagonal_shift: false,
        }
    }

    pub fn custom(
        statistics: Statistics,
        omega1: HalfInt,
        omega2: HalfInt,
        n: u32,
        v1: u32,
        v2: u32,
        params: PairingParams,
    ) -> Self {
        ModelSpec {
            family: Family::CustomQuasispin,
            statistics,
            omega1,
            omega2,
            n_particles: n,
            block: Block::Seniority { v1, v2 },
            phase: Phase::Plus,
            xi: 0.0,
            custom: Some(params),
            diagonal_shift: false,
        }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_shift(mut self, on: bool) -> Self {
        self.diagonal_shift = on;
        self
    }

    pub fn with_block(mut self, block: Block) -> Self {
        self.block = block;
        self
    }

    pub fn with_particles(mut self, n: u32) -> Self {
        self.n_particles = n;
        self
    }

    /// `(v1, v2)` after converting the family-specific block label.
    ///
    /// A singlet level's seniority is fixed by its occupancy parity, so the
    /// grading and angular-momentum labels determine `v1` from `N - v2`.
    pub fn seniorities(&self) -> Result<(u32, u32), ModelError> {
        let n = self.n_particles;
        match (self.family, self.block) {
            (Family::Lipkin, Block::Grading(g)) => {
                if g > 1 {
                    return Err(ModelError::InvalidBlock(format!("grading g={g} must be 0 or 1")));
                }
                let v2 = u32::from(g);
                if v2 > n {
                    return Err(ModelError::EmptyBlock(format!("g={g} with N={n}")));
                }
                Ok(((n - v2) % 2, v2))
            }
            (Family::VibronU3, Block::AngularMomentum(l)) => {
                let v2 = l.unsigned_abs();
                if v2 > n {
                    return Err(ModelError::EmptyBlock(format!("|l|={v2} exceeds N={n}")));
                }
                Ok(((n - v2) % 2, v2))
            }
            (Family::SbGeneral, Block::Seniority { v2, .. }) => {
                if v2 > n {
                    return Err(ModelError::EmptyBlock(format!("v={v2} exceeds N={n}")));
                }
                Ok(((n - v2) % 2, v2))
            }
            (
                Family::BosonicPairing | Family::FermionicPairing | Family::CustomQuasispin,
                Block::Seniority { v1, v2 },
            ) => Ok((v1, v2)),
            (family, block) => Err(ModelError::InvalidBlock(format!(
                "block label {block} does not apply to the {family} model"
            ))),
        }
    }

    /// Checks every structural invariant of the spec.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_particles == 0 {
            return Err(ModelError::InvalidParameter("particle number must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(ModelError::InvalidParameter(format!(
                "control parameter xi={} outside [0, 1]",
                self.xi
            )));
        }
        for (j, omega) in [(1, self.omega1), (2, self.omega2)] {
            if omega.twice() == 0 {
                return Err(ModelError::InvalidParameter(format!("level {j} has no substates")));
            }
            if self.statistics == Statistics::Fermion && !omega.is_integer() {
                return Err(ModelError::InvalidParameter(format!(
                    "fermionic level {j} has an odd number of substates (Omega={omega}); pairing is undefined"
                )));
            }
        }
        let expected = match self.family {
            Family::FermionicPairing => Some(Statistics::Fermion),
            Family::CustomQuasispin => None,
            _ => Some(Statistics::Boson),
        };
        if let Some(stat) = expected {
            if stat != self.statistics {
                return Err(ModelError::InvalidParameter(format!(
                    "{} model requires {:?} statistics",
                    self.family, stat
                )));
            }
        }
        match self.family {
            Family::Lipkin if self.omega1 != HalfInt::HALF || self.omega2 != HalfInt::HALF => {
                return Err(ModelError::InvalidParameter("Lipkin levels are both singlets".into()));
            }
            Family::VibronU3 if self.omega1 != HalfInt::HALF || self.omega2 != HalfInt::from_int(1) => {
                return Err(ModelError::InvalidParameter(
                    "vibron levels are a singlet and a doublet".into(),
                ));
            }
            Family::SbGeneral if self.omega1 != HalfInt::HALF || self.omega2.twice() % 2 == 0 => {
                return Err(ModelError::InvalidParameter(
                    "s-b model needs a singlet s level and an odd-degeneracy b level".into(),
                ));
            }
            Family::CustomQuasispin if self.custom.is_none() => {
                return Err(ModelError::InvalidParameter("custom model without pairing parameters".into()));
            }
            _ => {}
        }
        let (v1, v2) = self.seniorities()?;
        let n = self.n_particles;
        if self.statistics == Statistics::Fermion {
            let capacity = self.omega1.twice() + self.omega2.twice();
            if n > capacity {
                return Err(ModelError::PauliViolation(format!(
                    "N={n} exceeds the total degeneracy 2*Omega1+2*Omega2={capacity}"
                )));
            }
            for (j, v, omega) in [(1, v1, self.omega1), (2, v2, self.omega2)] {
                if f64::from(v) > omega.value() {
                    return Err(ModelError::PauliViolation(format!(
                        "seniority v{j}={v} exceeds Omega{j}={omega}"
                    )));
                }
            }
        } else {
            for (j, v, omega) in [(1, v1, self.omega1), (2, v2, self.omega2)] {
                if omega == HalfInt::HALF && v > 1 {
                    return Err(ModelError::InvalidBlock(format!(
                        "singlet level {j} only admits seniority 0 or 1 (got {v})"
                    )));
                }
            }
        }
        if v1 + v2 > n || (n - v1 - v2) % 2 != 0 {
            return Err(ModelError::EmptyBlock(format!(
                "N - v1 - v2 = {n} - {v1} - {v2} must be even and nonnegative"
            )));
        }
        Ok(())
    }

    /// `2L_j` for a boson level (`2j_j` for fermions): the substate count minus one.
    pub fn twice_angular(&self, level: usize) -> u32 {
        let omega = if level == 1 { self.omega1 } else { self.omega2 };
        omega.twice() - 1
    }
}
