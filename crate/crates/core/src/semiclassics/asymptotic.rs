use std::f64::consts::PI;

use super::lambert::{lambert_w, Branch, BRANCH_POINT};
use super::SemiclassicsError;

/// Barrier curvature factor `(1 - xi)(5 xi - 1)`, positive where the
/// barrier exists.
pub fn xi_factor(xi: f64) -> f64 {
    (1.0 - xi) * (5.0 * xi - 1.0)
}

/// Barrier-top oscillator constant `Xi^{1/2} / N`.
pub fn hbar_omega(xi: f64, n: u32) -> Result<f64, SemiclassicsError> {
    let big_xi = xi_factor(xi);
    if !(big_xi > 0.0) {
        return Err(SemiclassicsError::NoBarrier(xi));
    }
    Ok(big_xi.sqrt() / f64::from(n))
}

/// Parameters of the law `-E log|E| + alpha E = 2 pi hbar omega (k - k_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticFit {
    pub k_c: f64,
    pub alpha: f64,
    /// Separate constant for `k < k_c`, when fitted per side.
    pub alpha_below: Option<f64>,
    pub hbar_omega: f64,
    pub big_xi: f64,
    pub xi: f64,
    pub n_particles: u32,
}

impl AsymptoticFit {
    pub fn new(xi: f64, n: u32, k_c: f64, alpha: f64) -> Result<Self, SemiclassicsError> {
        Ok(AsymptoticFit {
            k_c,
            alpha,
            alpha_below: None,
            hbar_omega: hbar_omega(xi, n)?,
            big_xi: xi_factor(xi),
            xi,
            n_particles: n,
        })
    }

    pub fn with_alpha_below(mut self, alpha: f64) -> Self {
        self.alpha_below = Some(alpha);
        self
    }

    pub fn alpha_for(&self, dk: f64) -> f64 {
        if dk < 0.0 {
            self.alpha_below.unwrap_or(self.alpha)
        } else {
            self.alpha
        }
    }
}

fn w_argument(alpha: f64, hw: f64, dk: f64) -> Result<f64, SemiclassicsError> {
    let x = -(-alpha).exp() * 2.0 * PI * hw * dk.abs();
    if x <= BRANCH_POINT {
        return Err(SemiclassicsError::TooFarFromCriticality { x });
    }
    Ok(x)
}

/// Energy of level `k` from the Lambert-W solution, with `sign(E) = sign(k - k_c)`.
pub fn esqpt_energy_estimate(fit: &AsymptoticFit, n: u32, xi: f64, k: f64) -> Result<f64, SemiclassicsError> {
    let dk = k - fit.k_c;
    if dk == 0.0 {
        return Err(SemiclassicsError::InvalidSystem("k equals k_c; the estimate is singular there".into()));
    }
    let hw = hbar_omega(xi, n)?;
    let x = w_argument(fit.alpha_for(dk), hw, dk)?;
    let w = lambert_w(Branch::MinusOne, x)?;
    let magnitude = -2.0 * PI * hw * dk.abs() / w;
    Ok(magnitude.copysign(dk))
}

/// Gap `-2 pi hbar omega / (W + 1)` at offset `dk = k - k_c`.
pub fn esqpt_gap_at_offset(alpha: f64, n: u32, xi: f64, dk: f64) -> Result<f64, SemiclassicsError> {
    let hw = hbar_omega(xi, n)?;
    if dk == 0.0 {
        return Ok(0.0);
    }
    let x = w_argument(alpha, hw, dk)?;
    let w = lambert_w(Branch::MinusOne, x)?;
    Ok(-2.0 * PI * hw / (w + 1.0))
}

pub fn esqpt_gap_estimate(fit: &AsymptoticFit, n: u32, xi: f64, k: f64) -> Result<f64, SemiclassicsError> {
    let dk = k - fit.k_c;
    esqpt_gap_at_offset(fit.alpha_for(dk), n, xi, dk)
}

/// Extreme large-`N` estimate `N Delta = 2 pi Xi^{1/2} / ln N`.
pub fn esqpt_gap_log_asymptote(n: f64, xi: f64) -> Result<f64, SemiclassicsError> {
    let big_xi = xi_factor(xi);
    if !(big_xi > 0.0) {
        return Err(SemiclassicsError::NoBarrier(xi));
    }
    if !(n > 1.0) {
        return Err(SemiclassicsError::InvalidSystem(format!("N={n} must exceed 1")));
    }
    Ok(2.0 * PI * big_xi.sqrt() / n.ln())
}

/// `alpha` of a pure parabolic barrier `-A x^2` cut off at the outer
/// turning point of `E = 0`: `1 + ln(4 A x2^2)`, radial counting.
pub fn barrier_alpha_estimate(xi: f64) -> Result<f64, SemiclassicsError> {
    if !(xi > 0.2 && xi < 1.0) {
        return Err(SemiclassicsError::NoBarrier(xi));
    }
    let a = 0.5 * (5.0 * xi - 1.0);
    let x2sq = (5.0 * xi - 1.0) / (2.0 * xi);
    Ok(1.0 + (4.0 * a * x2sq).ln())
}
