use std::f64::consts::E;

use super::SemiclassicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Principal,
    MinusOne,
}

const INV_E: f64 = 1.0 / E;

/// Series about the branch point `x = -1/e` in `p = +-sqrt(2(1 + e x))`.
fn branch_point_seed(p: f64) -> f64 {
    -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..64 {
        // Divided through by e^w so large |w| cannot overflow.
        let f = w - x * (-w).exp();
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if !next.is_finite() {
            break;
        }
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1.0);
        w = next;
        if done {
            break;
        }
    }
    w
}

/// Lambert W on the requested branch.
pub fn lambert_w(branch: Branch, x: f64) -> Result<f64, SemiclassicsError> {
    if x.is_nan() {
        return Err(SemiclassicsError::BranchDomain { x });
    }
    let offset = 1.0 + E * x;
    // Allow the rounding error of -1/e itself.
    if offset < -4.0 * f64::EPSILON {
        return Err(SemiclassicsError::BranchDomain { x });
    }
    if offset <= 4.0 * f64::EPSILON {
        return Ok(-1.0);
    }
    match branch {
        Branch::Principal => {
            if x == 0.0 {
                return Ok(0.0);
            }
            if x == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            let seed = if x < -0.25 {
                branch_point_seed((2.0 * offset).sqrt())
            } else if x < 3.0 {
                x.ln_1p() * (1.0 - x.ln_1p() / (2.0 + x.ln_1p()))
            } else {
                let l1 = x.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            };
            Ok(halley(x, seed))
        }
        Branch::MinusOne => {
            if x >= 0.0 {
                return Err(SemiclassicsError::BranchDomain { x });
            }
            let seed = if x < -0.25 {
                branch_point_seed(-(2.0 * offset).sqrt())
            } else {
                let l1 = (-x).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            };
            Ok(halley(x, seed))
        }
    }
}

/// `W'(x) = W / (x (1 + W))`, with the limit 1 at the origin.
pub fn lambert_w_derivative(branch: Branch, x: f64) -> Result<f64, SemiclassicsError> {
    if x == 0.0 && branch == Branch::Principal {
        return Ok(1.0);
    }
    let w = lambert_w(branch, x)?;
    Ok(w / (x * (1.0 + w)))
}

/// Lower end of both branches' real domain.
pub const BRANCH_POINT: f64 = -INV_E;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect_oracle(x: f64, mut lo: f64, mut hi: f64) -> f64 {
        // y e^y is monotone on each bracket used below.
        let f = |y: f64| y * y.exp() - x;
        let increasing = f(hi) > f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == increasing {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn known_values() {
        assert_eq!(lambert_w(Branch::Principal, 0.0).unwrap(), 0.0);
        assert!((lambert_w(Branch::Principal, E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w(Branch::MinusOne, -INV_E).unwrap(), -1.0);
        assert_eq!(lambert_w(Branch::Principal, -INV_E).unwrap(), -1.0);
        let w = lambert_w(Branch::MinusOne, -0.1).unwrap();
        assert!((w + 3.577152).abs() < 1e-6, "{w}");
        assert!((w - bisect_oracle(-0.1, -10.0, -1.0)).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w(Branch::Principal, -0.5).is_err());
        assert!(lambert_w(Branch::MinusOne, 0.0).is_err());
        assert!(lambert_w(Branch::MinusOne, 0.5).is_err());
        assert!(lambert_w(Branch::MinusOne, f64::NAN).is_err());
    }

    #[test]
    fn roundtrip_log_grid() {
        for i in 0..10_000 {
            let t = i as f64 / 9_999.0;
            // Principal: 1e-300 .. 1e300 and the negative interval.
            let xp = 10f64.powf(-300.0 + 600.0 * t);
            let xn = -INV_E * 10f64.powf(-300.0 * t);
            for (branch, x) in [(Branch::Principal, xp), (Branch::Principal, xn), (Branch::MinusOne, xn)] {
                let w = lambert_w(branch, x).unwrap();
                let back = w * w.exp();
                assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-300), "{branch:?} x={x:e} w={w} back={back:e}");
            }
        }
    }

    #[test]
    fn branches_are_ordered() {
        for &x in &[-0.36, -0.3, -0.1, -1e-3, -1e-10] {
            let w0 = lambert_w(Branch::Principal, x).unwrap();
            let wm = lambert_w(Branch::MinusOne, x).unwrap();
            assert!(w0 > -1.0 && wm < -1.0);
        }
    }

    proptest! {
        #[test]
        fn log_identity(x in 1e-8f64..1e8) {
            let w = lambert_w(Branch::Principal, x).unwrap();
            prop_assert!((w.ln() - (x.ln() - w)).abs() < 1e-10 * w.ln().abs().max(1.0));
        }

        #[test]
        fn derivative_identity(x in -0.36f64..50.0) {
            for branch in [Branch::Principal, Branch::MinusOne] {
                if branch == Branch::MinusOne && x >= 0.0 {
                    continue;
                }
                let w = lambert_w(branch, x).unwrap();
                let d = lambert_w_derivative(branch, x).unwrap();
                prop_assert!((d * x * (1.0 + w) - w).abs() < 1e-10 * w.abs().max(1.0));
                let h = 1e-6 * x.abs().max(1e-3);
                if x - h > BRANCH_POINT + 1e-3 && (branch == Branch::Principal || x + h < 0.0) {
                    let fd = (lambert_w(branch, x + h).unwrap() - lambert_w(branch, x - h).unwrap()) / (2.0 * h);
                    prop_assert!((fd - d).abs() < 1e-5 * d.abs().max(1.0));
                }
            }
        }

        #[test]
        fn minus_one_branch_is_decreasing(a in -0.367f64..-1e-12, b in -0.367f64..-1e-12) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-9);
            prop_assert!(lambert_w(Branch::MinusOne, lo).unwrap() > lambert_w(Branch::MinusOne, hi).unwrap());
        }
    }
}
