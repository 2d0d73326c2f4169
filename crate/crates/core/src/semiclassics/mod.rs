//! Classical limit of the transitional Hamiltonian: the quadratic-quartic
//! potential with coordinate-dependent mass, WKB quantization and the
//! Lambert-W description of levels next to the barrier top at `E = 0`.

mod asymptotic;
mod lambert;
mod quadrature;

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use thiserror::Error;

use crate::models::{Family, ModelSpec};

pub use asymptotic::{
    barrier_alpha_estimate, esqpt_energy_estimate, esqpt_gap_at_offset, esqpt_gap_estimate, esqpt_gap_log_asymptote,
    hbar_omega, xi_factor, AsymptoticFit,
};
pub use lambert::{lambert_w, lambert_w_derivative, Branch, BRANCH_POINT};
pub use quadrature::integrate;

/// Relative accuracy demanded of every action-type integral.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Energies this close to the barrier top are treated as on it.
pub const DIVERGENCE_FLOOR: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiclassicsError {
    #[error("invalid classical system: {0}")]
    InvalidSystem(String),
    #[error("x = {x} lies outside the classical domain")]
    Domain { x: f64 },
    #[error("energy {energy} outside the classical range [{lo}, {hi}]")]
    EnergyOutOfRange { energy: f64, lo: f64, hi: f64 },
    #[error("period diverges at the barrier top (|E| = {0:e})")]
    Divergent(f64),
    #[error("quadrature did not converge (achieved relative change {achieved:e})")]
    Quadrature { achieved: f64 },
    #[error("level {k} lies above the classical range")]
    OutOfSpectrum { k: usize },
    #[error("x = {x} lies at or beyond a classical turning point")]
    TurningPoint { x: f64 },
    #[error("no barrier for xi = {0}: the ESQPT needs 1/5 < xi < 1")]
    NoBarrier(f64),
    #[error("{x} is outside the domain of the requested Lambert W branch")]
    BranchDomain { x: f64 },
    #[error("W argument {x} is below -1/e: too far from the critical level")]
    TooFarFromCriticality { x: f64 },
}

type Result<T> = std::result::Result<T, SemiclassicsError>;

/// How levels of the one-dimensional double well are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Counting {
    /// Both parities: full-line action above the barrier, degenerate
    /// doublets from a single well below it.
    AllParities,
    /// One parity: half-line action, single well below the barrier.
    SingleParity,
}

/// Classical Hamiltonian for given `(xi, v, n, N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSystem {
    pub xi: f64,
    pub v: u32,
    /// Number of components of level 2; `n = 1` is the line.
    pub n: u32,
    pub n_particles: u32,
    pub counting: Counting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    pub potential: f64,
    pub mass: f64,
    pub centrifugal: f64,
}

/// Factorized classical orbit. For a `Well`,
/// `E - V = (x - x1)(x2 - x) coef (x + x1)(x + x2) h(x^2)`; for `Free`
/// (`x1 = 0` with `E > V(0)`), `E - V = (x2 - x)(x2 + x)(xi x^2 + E / x2^2)`.
#[derive(Debug, Clone, Copy)]
enum Orbit {
    Free { x2: f64, energy: f64 },
    Well { x1: f64, x2: f64, coef: f64, y0: Option<f64>, inv_y: bool },
}

impl ClassicalSystem {
    pub fn new(xi: f64, v: u32, n: u32, n_particles: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(SemiclassicsError::InvalidSystem(format!("xi={xi} outside [0, 1]")));
        }
        if n == 0 || n_particles == 0 {
            return Err(SemiclassicsError::InvalidSystem("n and N must be positive".into()));
        }
        if n == 1 && v != 0 {
            return Err(SemiclassicsError::InvalidSystem("the line has no angular momentum".into()));
        }
        Ok(ClassicalSystem { xi, v, n, n_particles, counting: Counting::AllParities })
    }

    pub fn line(xi: f64, n_particles: u32) -> Result<Self> {
        Self::new(xi, 0, 1, n_particles)
    }

    /// Classical counterpart of one model block. Line blocks are single
    /// parity sectors.
    pub fn for_spec(spec: &ModelSpec) -> Result<Self> {
        let (_, v2) = spec
            .seniorities()
            .map_err(|e| SemiclassicsError::InvalidSystem(e.to_string()))?;
        let n = match spec.family {
            Family::Lipkin => 1,
            _ => spec.omega2.twice(),
        };
        let v = if n == 1 { 0 } else { v2 };
        Ok(Self::new(spec.xi, v, n, spec.n_particles)?.with_counting(Counting::SingleParity))
    }

    pub fn with_counting(mut self, counting: Counting) -> Self {
        self.counting = counting;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn is_line(&self) -> bool {
        self.n == 1
    }

    pub fn x_max(&self) -> f64 {
        SQRT_2
    }

    /// Eigenvalue `v(v + n - 2)` of the angular kinetic energy.
    pub fn centrifugal_eigenvalue(&self) -> f64 {
        let v = f64::from(self.v);
        v * (v + f64::from(self.n) - 2.0)
    }

    fn c_coef(&self) -> f64 {
        let nn = f64::from(self.n_particles).powi(2);
        (1.0 - self.xi) * self.centrifugal_eigenvalue() / (2.0 * nn)
    }

    fn d_coef(&self) -> f64 {
        let nn = f64::from(self.n_particles).powi(2);
        self.xi * self.centrifugal_eigenvalue() / nn
    }

    fn b_coef(&self) -> f64 {
        0.5 * (1.0 - 5.0 * self.xi)
    }

    pub fn potential(&self, x: f64) -> f64 {
        let y = x * x;
        self.b_coef() * y + self.xi * y * y
    }

    pub fn mass(&self, x: f64) -> f64 {
        1.0 / (1.0 - self.xi + 2.0 * self.xi * x * x)
    }

    /// Centrifugal energy at zero radial momentum.
    pub fn centrifugal(&self, x: f64) -> f64 {
        if self.centrifugal_eigenvalue() == 0.0 {
            return 0.0;
        }
        self.c_coef() / (x * x) + self.d_coef()
    }

    pub fn effective_potential(&self, x: f64) -> f64 {
        self.potential(x) + self.centrifugal(x)
    }

    pub fn potential_terms(&self, x: f64) -> Result<PotentialTerms> {
        let lo = if self.is_line() { -SQRT_2 } else { 0.0 };
        if !(lo..=SQRT_2).contains(&x) {
            return Err(SemiclassicsError::Domain { x });
        }
        Ok(PotentialTerms { potential: self.potential(x), mass: self.mass(x), centrifugal: self.centrifugal(x) })
    }

    /// No `1/x^2` term: either `v = 0` or `xi = 1`, where the centrifugal
    /// energy is the constant `offset()`.
    fn plain(&self) -> bool {
        self.v == 0 || self.c_coef() == 0.0
    }

    fn offset(&self) -> f64 {
        if self.v == 0 {
            0.0
        } else {
            self.d_coef()
        }
    }

    fn veff_y(&self, y: f64) -> f64 {
        let cent = if self.plain() { self.offset() } else { self.c_coef() / y + self.d_coef() };
        self.b_coef() * y + self.xi * y * y + cent
    }

    /// `y = x^2` of the effective potential minimum on the domain.
    fn minimum_y(&self) -> f64 {
        let (b, xi) = (self.b_coef(), self.xi);
        if self.plain() {
            return if b < 0.0 && xi > 0.0 { (-b / (2.0 * xi)).min(2.0) } else { 0.0 };
        }
        let c = self.c_coef();
        // Root of 2 xi y^3 + b y^2 - c, unique for y > 0.
        let g = |y: f64| 2.0 * xi * y * y * y + b * y * y - c;
        if g(2.0) <= 0.0 {
            return 2.0;
        }
        bisect_root(g, 0.0, 2.0)
    }

    /// `(E_min, E_max)` of the classically allowed energies.
    pub fn energy_range(&self) -> (f64, f64) {
        let ymin = self.minimum_y();
        let emin = if self.plain() && ymin > 0.0 && ymin < 2.0 {
            let s = 5.0 * self.xi - 1.0;
            self.offset() - s * s / (16.0 * self.xi)
        } else {
            self.veff_y(ymin)
        };
        (emin, self.veff_y(2.0))
    }

    fn check_energy(&self, energy: f64) -> Result<()> {
        let (lo, hi) = self.energy_range();
        let slack = 1e-14 * lo.abs().max(hi.abs()).max(1.0);
        if !(energy >= lo - slack && energy <= hi + slack) {
            return Err(SemiclassicsError::EnergyOutOfRange { energy, lo, hi });
        }
        Ok(())
    }

    /// Whether the potential has a barrier top at `E = 0`.
    pub fn has_barrier(&self) -> bool {
        self.v == 0 && self.xi > 0.2
    }

    fn orbit(&self, energy: f64) -> Result<Orbit> {
        self.check_energy(energy)?;
        let (emin, emax) = self.energy_range();
        let energy = energy.clamp(emin, emax);
        let xi = self.xi;
        let b = self.b_coef();
        if self.plain() {
            let energy = energy - self.offset();
            // xi y^2 + b y - E = 0
            let yp = if xi == 0.0 {
                energy / b
            } else {
                let disc = (b * b + 4.0 * xi * energy).max(0.0);
                if b >= 0.0 {
                    2.0 * energy / (b + disc.sqrt())
                } else {
                    (disc.sqrt() - b) / (2.0 * xi)
                }
            };
            let yp = yp.clamp(0.0, 2.0);
            if energy >= 0.0 {
                return Ok(Orbit::Free { x2: yp.sqrt(), energy });
            }
            let ym = (-energy / (xi * yp)).min(yp);
            return Ok(Orbit::Well { x1: ym.sqrt(), x2: yp.sqrt(), coef: xi, y0: Some(0.0), inv_y: false });
        }
        let ystar = self.minimum_y();
        let (c, d) = (self.c_coef(), self.d_coef());
        let p = |y: f64| ((xi * y + b) * y + d - energy) * y + c;
        let y1 = bisect_root(p, 0.0, ystar);
        let y2 = if energy >= emax { 2.0 } else { bisect_root(p, ystar, 2.0) };
        let (coef, y0, inv_y) = if xi > 0.0 { (xi, Some(-self.c_coef() / (xi * y1 * y2)), false) } else { (b, None, true) };
        Ok(Orbit::Well { x1: y1.sqrt(), x2: y2.sqrt(), coef, y0, inv_y })
    }

    /// Classical turning points; `x1 = 0` when the orbit reaches the origin.
    pub fn turning_points(&self, energy: f64) -> Result<(f64, f64)> {
        Ok(match self.orbit(energy)? {
            Orbit::Free { x2, .. } => (0.0, x2),
            Orbit::Well { x1, x2, .. } => (x1, x2),
        })
    }

    /// Multiplicity of the half-line action in the counted action.
    fn action_factor(&self, energy: f64) -> f64 {
        if self.is_line() && self.counting == Counting::AllParities && energy >= 0.0 {
            2.0
        } else {
            1.0
        }
    }

    /// Evaluates `f(x, m, action integrand, period integrand)` in the
    /// variable `theta`, with `x = x1 + (x2 - x1) sin^2 theta`.
    fn orbit_integral<F>(&self, orbit: Orbit, f: F) -> Result<f64>
    where
        F: Fn(f64, f64, f64, f64) -> f64,
    {
        let xi = self.xi;
        let value = match orbit {
            Orbit::Free { x2, energy } => {
                if x2 == 0.0 {
                    return Ok(f(0.0, self.mass(0.0), 0.0, f64::NAN));
                }
                let q0 = energy / (x2 * x2);
                integrate(
                    |t: f64| {
                        let (s, c) = t.sin_cos();
                        let x = x2 * s * s;
                        let m = self.mass(x);
                        let rest = (x2 + x) * (xi * x * x + q0);
                        let a = (2.0 * m * rest).sqrt() * 2.0 * x2.powf(1.5) * s * c * c;
                        let p = (m / (2.0 * rest)).sqrt() * 2.0 * x2.sqrt() * s;
                        f(x, m, a, p)
                    },
                    0.0,
                    PI / 2.0,
                    QUADRATURE_TOL,
                )
            }
            Orbit::Well { x1, x2, coef, y0, inv_y } => {
                let d = x2 - x1;
                integrate(
                    |t: f64| {
                        let (s, c) = t.sin_cos();
                        let x = x1 + d * s * s;
                        let y = x * x;
                        let h = match (y0, inv_y) {
                            (_, true) => 1.0 / y,
                            (Some(y0), false) => (y - y0) / y,
                            (None, false) => 1.0,
                        };
                        let r = coef * (x + x1) * (x + x2) * h;
                        let m = self.mass(x);
                        let a = (2.0 * m * r).sqrt() * 2.0 * d * d * s * s * c * c;
                        let p = 2.0 * (m / (2.0 * r)).sqrt();
                        f(x, m, a, p)
                    },
                    0.0,
                    PI / 2.0,
                    QUADRATURE_TOL,
                )
            }
        };
        value.map_err(|achieved| SemiclassicsError::Quadrature { achieved })
    }

    /// `2 \int_{x1}^{x2} sqrt(2 m (E - V)) dx` on the half line or in one well.
    pub fn radial_action(&self, energy: f64) -> Result<f64> {
        let orbit = self.orbit(energy)?;
        Ok(2.0 * self.orbit_integral(orbit, |_, _, a, _| a)?)
    }

    /// Action counted according to `self.counting`.
    pub fn action(&self, energy: f64) -> Result<f64> {
        Ok(self.action_factor(energy) * self.radial_action(energy)?)
    }

    fn near_barrier(&self, energy: f64) -> bool {
        self.has_barrier() && energy.abs() < DIVERGENCE_FLOOR
    }

    /// `dS/dE`, the classical period.
    pub fn action_energy_derivative(&self, energy: f64) -> Result<f64> {
        if self.near_barrier(energy) {
            return Err(SemiclassicsError::Divergent(energy.abs()));
        }
        let orbit = self.orbit(energy)?;
        if let Orbit::Free { x2, .. } = orbit {
            if x2 == 0.0 {
                // Bottom of a single well at the origin.
                let omega = ((1.0 - 5.0 * self.xi) * (1.0 - self.xi)).sqrt();
                if omega == 0.0 {
                    return Err(SemiclassicsError::Divergent(0.0));
                }
                return Ok(self.action_factor(energy) * PI / omega);
            }
        }
        Ok(self.action_factor(energy) * 2.0 * self.orbit_integral(orbit, |_, _, _, p| p)?)
    }

    /// `dS/dxi` at fixed energy.
    pub fn action_xi_derivative(&self, energy: f64) -> Result<f64> {
        if self.near_barrier(energy) {
            return Err(SemiclassicsError::Divergent(energy.abs()));
        }
        let orbit = self.orbit(energy)?;
        let t = self.centrifugal_eigenvalue();
        let nn = f64::from(self.n_particles).powi(2);
        let integral = self.orbit_integral(orbit, |x, m, a, p| {
            if a == 0.0 && p.is_nan() {
                return 0.0;
            }
            let y = x * x;
            let m_xi = -m * m * (2.0 * y - 1.0);
            let mut v_xi = -2.5 * y + y * y;
            if t != 0.0 {
                v_xi += -t / (2.0 * nn * y) + t / nn;
            }
            m_xi / (2.0 * m) * a - v_xi * p
        })?;
        Ok(self.action_factor(energy) * 2.0 * integral)
    }

    /// Slope of a WKB contour, `-(dS/dxi) / (dS/dE)`.
    pub fn contour_slope(&self, energy: f64) -> Result<f64> {
        Ok(-self.action_xi_derivative(energy)? / self.action_energy_derivative(energy)?)
    }

    /// `2 pi N^{-1} (dS/dE)^{-1}`.
    pub fn semiclassical_gap(&self, energy: f64) -> Result<f64> {
        Ok(2.0 * PI / (f64::from(self.n_particles) * self.action_energy_derivative(energy)?))
    }

    fn solve_action(&self, target: f64, lo: f64, hi: f64, factor: f64) -> Result<f64> {
        let f = |e: f64| -> Result<f64> { Ok(factor * self.radial_action(e)? - target) };
        let (mut a, mut b) = (lo, hi);
        let mut fa = f(a)?;
        let fb = f(b)?;
        if fa >= 0.0 {
            return Ok(a);
        }
        if fb <= 0.0 {
            return Ok(b);
        }
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let fx = f(x)?;
            if fx == 0.0 {
                return Ok(x);
            }
            if (fx < 0.0) == (fa < 0.0) {
                a = x;
                fa = fx;
            } else {
                b = x;
            }
            if b - a <= 1e-15 * a.abs().max(b.abs()).max(1e-3) {
                break;
            }
            // Newton from x, falling back to bisection if it leaves (a, b).
            let step = if self.near_barrier(x) {
                None
            } else {
                self.action_energy_derivative(x).ok().map(|d| x - fx / (factor * d / self.action_factor(x)))
            };
            x = match step {
                Some(n) if n > a && n < b && n.is_finite() => n,
                _ => 0.5 * (a + b),
            };
        }
        Ok(x)
    }

    /// Energy of level `k` from `S = (k + 1/2) 2 pi / N`.
    ///
    /// With both parities counted on the line, levels whose full-line action
    /// falls short of the barrier top are taken from one well as doublets;
    /// indices left between the two regimes sit at `E = 0`.
    pub fn wkb_level(&self, k: usize) -> Result<f64> {
        let (emin, emax) = self.energy_range();
        let unit = 2.0 * PI / f64::from(self.n_particles);
        let target = (k as f64 + 0.5) * unit;
        let top = self.action(emax)?;
        if target > top {
            return Err(SemiclassicsError::OutOfSpectrum { k });
        }
        if self.is_line() && self.counting == Counting::AllParities && self.has_barrier() {
            let s0 = self.radial_action(0.0)?;
            if target >= 2.0 * s0 {
                return self.solve_action(target, 0.0, emax, 2.0);
            }
            let well_target = ((k / 2) as f64 + 0.5) * unit;
            if well_target < s0 {
                return self.solve_action(well_target, emin, 0.0, 1.0);
            }
            return Ok(0.0);
        }
        self.solve_action(target, emin, emax, self.action_factor(emax))
    }

    /// Smooth level count `N S(E) / 2 pi - 1/2`, doubled for line doublets.
    pub fn level_count(&self, energy: f64) -> Result<f64> {
        let n = f64::from(self.n_particles);
        let s = self.action(energy)? * n / (2.0 * PI);
        if self.is_line() && self.counting == Counting::AllParities && energy < 0.0 {
            Ok(2.0 * s)
        } else {
            Ok(s)
        }
    }

    /// Normalized classical probability density `P(x) ~ 1 / velocity`.
    pub fn classical_density(&self, energy: f64, x: f64) -> Result<f64> {
        if self.near_barrier(energy) {
            return Err(SemiclassicsError::Divergent(energy.abs()));
        }
        self.potential_terms(x)?;
        let (x1, x2) = self.turning_points(energy)?;
        let ax = if self.is_line() { x.abs() } else { x };
        let free = self.is_line() && energy >= 0.0;
        let inside = if free { ax < x2 } else { ax > x1 && ax < x2 };
        let gap = energy - self.effective_potential(ax);
        if !inside || gap <= 0.0 {
            return Err(SemiclassicsError::TurningPoint { x });
        }
        let orbit = self.orbit(energy)?;
        // Time spent on [x1, x2]; the free line orbit covers both halves.
        let mut norm = self.orbit_integral(orbit, |_, _, _, p| p)?;
        if free {
            norm *= 2.0;
        }
        let m = self.mass(ax);
        Ok((m / (2.0 * gap)).sqrt() / norm)
    }
}

/// Point on a WKB contour `E_k(xi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourPoint {
    pub xi: f64,
    pub energy: f64,
    /// `dE/dxi` along the contour; `None` on the barrier top.
    pub slope: Option<f64>,
}

/// WKB energies of level `k` across a grid of `xi`.
pub fn wkb_contour(template: &ClassicalSystem, k: usize, xi_grid: &[f64]) -> Result<Vec<ContourPoint>> {
    xi_grid
        .par_iter()
        .map(|&xi| {
            let sys = ClassicalSystem::new(xi, template.v, template.n, template.n_particles)?
                .with_counting(template.counting);
            let energy = sys.wkb_level(k)?;
            let slope = sys.contour_slope(energy).ok();
            Ok(ContourPoint { xi, energy, slope })
        })
        .collect()
}

/// Root of a continuous `g` with a sign change on `[lo, hi]`.
fn bisect_root<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
