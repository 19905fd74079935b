//! Lower real branch of the Lambert W function.

use std::f64::consts::E;

const MAX_ITERATIONS: usize = 64;

/// `W₋₁(x)` for `x` in `[-1/e, 0)`: the solution `w ≤ -1` of `w·eʷ = x`.
///
/// Starts from the branch-point series near `-1/e` and from the asymptotic
/// expansion near `0`, then refines with Halley steps. Returns NaN outside
/// the domain.
pub fn lambert_w_m1(x: f64) -> f64 {
    if !(-1.0 / E..0.0).contains(&x) {
        // tolerate rounding just below -1/e
        if x < -1.0 / E && x > -1.0 / E - 1e-15 {
            return -1.0;
        }
        return f64::NAN;
    }

    let q = 1.0 + E * x;
    let mut w = if q < 0.25 {
        let p = -(2.0 * q).sqrt();
        let series = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))));
        if p.abs() < 1e-4 {
            // truncation error O(p^5) is already below 1e-19
            return series;
        }
        series
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    w
}
